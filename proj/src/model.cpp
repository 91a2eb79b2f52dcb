#include "blend/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace blend {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, kMaterialCount> kMaterialNames{"Cu", "Ag", "Fe", "Au", "U", "Fl", "S"};

double log_of(double v, LogBase base) { return base == LogBase::Natural ? std::log(v) : std::log10(v); }

template <typename T>
T field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ParseError(path + "." + key + ": missing field");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(path + "." + key + ": " + e.what());
    }
}

void require(bool ok, const std::string& path, const char* what) {
    if (!ok) throw ValidationError(path, what);
}

}  // namespace

std::string_view material_name(Material m) { return kMaterialNames[static_cast<std::size_t>(m)]; }

std::optional<Material> parse_material(std::string_view name) {
    for (std::size_t i = 0; i < kMaterialCount; ++i) {
        if (kMaterialNames[i] == name) return kMaterials[i];
    }
    return std::nullopt;
}

void Instance::validate() const {
    require(stockpile_count >= 1, "stockpile_count", "must be at least 1");
    require(!months.empty(), "months", "at least one month required");
    require(rel_std >= 0.0 && std::isfinite(rel_std), "rel_std", "must be finite and non-negative");

    const auto& f = factors;
    require(f.delta > 0.0 && f.delta <= 1.0, "factors.delta", "must lie in (0, 1]");
    require(f.phi_base >= 0.0, "factors.phi_base", "must be non-negative");
    require(f.phi_au >= 0.0, "factors.phi_au", "must be non-negative");
    require(f.phi_u >= 0.0, "factors.phi_u", "must be non-negative");
    require(f.phi_fe >= 0.0, "factors.phi_fe", "must be non-negative");
    require(f.phi_cu >= 0.0, "factors.phi_cu", "must be non-negative");
    require(f.gamma1 > 0.0, "factors.gamma1", "must be positive");
    require(f.gamma2 > 0.0, "factors.gamma2", "must be positive");
    require(f.mu_fl > 0.0, "factors.mu_fl", "must be positive");

    std::size_t expected_parcels = 0;
    for (std::size_t m = 0; m < months.size(); ++m) {
        const auto& month = months[m];
        const std::string path = "months[" + std::to_string(m) + "]";
        require(month.duration_days > 0.0, path + ".duration_days", "must be positive");
        require(month.num_parcels >= 1, path + ".num_parcels", "must be at least 1");
        require(month.haul.size() == stockpile_count, path + ".haul", "needs one entry per stockpile");
        for (std::size_t s = 0; s < month.haul.size(); ++s) {
            const std::string hp = path + ".haul[" + std::to_string(s) + "]";
            require(month.haul[s].tonnage >= 0.0, hp + ".tonnage", "must be non-negative");
            for (Material mat : kMaterials) {
                require(month.haul[s].grades[mat] > 0.0, hp + ".grades." + std::string(material_name(mat)),
                        "must be positive");
            }
        }
        expected_parcels += month.num_parcels;
    }
    require(expected_parcels == parcels.size(), "parcels", "count must equal the sum of months[].num_parcels");

    std::size_t p = 0;
    for (std::size_t m = 0; m < months.size(); ++m) {
        for (std::size_t j = 0; j < months[m].num_parcels; ++j, ++p) {
            const std::string path = "parcels[" + std::to_string(p) + "]";
            require(parcels[p].k_target >= 0.0, path + ".k_target", "must be non-negative");
            require(parcels[p].month_index == m, path + ".month_index", "parcels must be ordered by month");
            require(parcels[p].is_month_first == (j == 0), path + ".is_month_first",
                    "exactly the first parcel of each month is flagged");
        }
    }
}

Instance parse_instance(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }

    Instance inst;
    inst.name = doc.value("name", std::string{});
    inst.stockpile_count = field<std::size_t>(doc, "stockpile_count", "$");
    inst.rel_std = doc.contains("rel_std") ? field<double>(doc, "rel_std", "$") : 0.01;

    const json& f = doc.contains("factors") ? doc.at("factors") : throw ParseError("$.factors: missing field");
    auto& pf = inst.factors;
    pf.delta = field<double>(f, "delta", "$.factors");
    pf.phi_base = field<double>(f, "phi_base", "$.factors");
    pf.phi_au = field<double>(f, "phi_au", "$.factors");
    pf.phi_u = field<double>(f, "phi_u", "$.factors");
    pf.phi_fe = field<double>(f, "phi_fe", "$.factors");
    pf.phi_cu = field<double>(f, "phi_cu", "$.factors");
    pf.gamma1 = field<double>(f, "gamma1", "$.factors");
    pf.gamma2 = field<double>(f, "gamma2", "$.factors");
    pf.mu_fl = field<double>(f, "mu_fl", "$.factors");
    pf.mu_u = field<double>(f, "mu_u", "$.factors");
    pf.mu_cu1 = field<double>(f, "mu_cu1", "$.factors");
    pf.mu_cu2 = field<double>(f, "mu_cu2", "$.factors");

    const auto months = field<json>(doc, "months", "$");
    if (!months.is_array()) throw ParseError("$.months: expected array");
    for (std::size_t m = 0; m < months.size(); ++m) {
        const std::string path = "$.months[" + std::to_string(m) + "]";
        MonthSpec month;
        month.duration_days = field<double>(months[m], "duration_days", path);
        month.num_parcels = field<std::size_t>(months[m], "num_parcels", path);
        const auto haul = field<json>(months[m], "haul", path);
        if (!haul.is_array()) throw ParseError(path + ".haul: expected array");
        for (std::size_t s = 0; s < haul.size(); ++s) {
            const std::string hp = path + ".haul[" + std::to_string(s) + "]";
            Haul h;
            h.tonnage = field<double>(haul[s], "tonnage", hp);
            const auto grades = field<json>(haul[s], "grades", hp);
            for (Material mat : kMaterials) {
                h.grades[mat] = field<double>(grades, std::string(material_name(mat)).c_str(), hp + ".grades");
            }
            month.haul.push_back(h);
        }
        inst.months.push_back(std::move(month));
    }

    const auto parcels = field<json>(doc, "parcels", "$");
    if (!parcels.is_array()) throw ParseError("$.parcels: expected array");
    for (std::size_t p = 0; p < parcels.size(); ++p) {
        const std::string path = "$.parcels[" + std::to_string(p) + "]";
        ParcelSpec ps;
        ps.k_target = field<double>(parcels[p], "k_target", path);
        ps.r_fl_max = field<double>(parcels[p], "r_fl_max", path);
        ps.cu_min = field<double>(parcels[p], "cu_min", path);
        inst.parcels.push_back(ps);
    }

    // Month membership follows from the listing order; surplus parcels are
    // left in the last month so validate() reports the count mismatch.
    std::size_t p = 0;
    for (std::size_t m = 0; m < inst.months.size(); ++m) {
        for (std::size_t j = 0; j < inst.months[m].num_parcels && p < inst.parcels.size(); ++j, ++p) {
            inst.parcels[p].month_index = m;
            inst.parcels[p].is_month_first = (j == 0);
        }
    }
    for (; p < inst.parcels.size(); ++p) {
        inst.parcels[p].month_index = inst.months.empty() ? 0 : inst.months.size() - 1;
    }

    inst.validate();
    return inst;
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_instance(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(e.field(), std::string(e.what()) + " (in " + path.string() + ")");
    }
}

std::string instance_to_json(const Instance& instance) {
    const auto& f = instance.factors;
    json doc;
    doc["name"] = instance.name;
    doc["stockpile_count"] = instance.stockpile_count;
    doc["rel_std"] = instance.rel_std;
    doc["factors"] = {{"delta", f.delta},   {"phi_base", f.phi_base}, {"phi_au", f.phi_au},
                      {"phi_u", f.phi_u},   {"phi_fe", f.phi_fe},     {"phi_cu", f.phi_cu},
                      {"gamma1", f.gamma1}, {"gamma2", f.gamma2},     {"mu_fl", f.mu_fl},
                      {"mu_u", f.mu_u},     {"mu_cu1", f.mu_cu1},     {"mu_cu2", f.mu_cu2}};
    json months = json::array();
    for (const auto& m : instance.months) {
        json haul = json::array();
        for (const auto& h : m.haul) {
            json grades = json::object();
            for (Material mat : kMaterials) grades[std::string(material_name(mat))] = h.grades[mat];
            haul.push_back({{"tonnage", h.tonnage}, {"grades", grades}});
        }
        months.push_back({{"duration_days", m.duration_days}, {"num_parcels", m.num_parcels}, {"haul", haul}});
    }
    doc["months"] = months;
    json parcels = json::array();
    for (const auto& p : instance.parcels) {
        parcels.push_back({{"k_target", p.k_target}, {"r_fl_max", p.r_fl_max}, {"cu_min", p.cu_min}});
    }
    doc["parcels"] = parcels;
    return doc.dump(2) + "\n";
}

double blend_grade(double prev_grade, double prev_tonnage, double haul_grade, double haul_tonnage) {
    const double total = prev_tonnage + haul_tonnage;
    if (total == 0.0) throw DomainError("blend of two empty masses");
    if (prev_tonnage == 0.0) return haul_grade;
    return (prev_grade * prev_tonnage + haul_grade * haul_tonnage) / total;
}

double update_inventory(double prev, double haul, double claimed, bool month_start) {
    return month_start ? prev + haul - claimed : prev - claimed;
}

GradeMap parcel_grades(std::span<const double> x_row, std::span<const GradeMap> stockpile_grades) {
    GradeMap out;
    for (Material mat : kMaterials) {
        double g = 0.0;
        for (std::size_t s = 0; s < x_row.size(); ++s) g += x_row[s] * stockpile_grades[s][mat];
        out[mat] = g;
    }
    return out;
}

double cu_recovery(double g_cu, double g_s, const ProcessingFactors& factors) {
    if (!(g_s > 0.0)) throw DomainError("Cu recovery needs a positive S grade");
    return factors.mu_cu1 * g_cu / g_s + factors.mu_cu2;
}

double tonnage_bracket(const GradeMap& grades, const ProcessingFactors& f) {
    for (Material mat : {Material::Au, Material::U, Material::Fe, Material::Cu}) {
        if (!(grades[mat] > 0.0)) {
            throw DomainError("tonnage needs a positive " + std::string(material_name(mat)) + " grade");
        }
    }
    const LogBase b = f.log_base;
    return f.phi_base + f.phi_au * log_of(grades[Material::Au], b) + f.phi_u * log_of(grades[Material::U], b) -
           f.phi_fe * log_of(grades[Material::Fe], b) + f.phi_cu * log_of(grades[Material::Cu], b);
}

double parcel_tonnage(double days, const GradeMap& grades, const ProcessingFactors& factors) {
    return factors.delta * days * tonnage_bracket(grades, factors);
}

double concentrate(double cu_tonnes, double g_cu, double g_s, const ProcessingFactors& factors) {
    if (!(g_s > 0.0)) throw DomainError("concentrate needs a positive S grade");
    const double denom = factors.gamma1 * g_cu / g_s + factors.gamma2;
    if (!(denom > 0.0)) throw DomainError("concentrate denominator is not positive");
    return cu_tonnes / denom;
}

PlanEvaluation simulate(const Instance& instance, const Genome& genome, const DurationRule& durations) {
    const std::size_t P = instance.parcel_count();
    const std::size_t S = instance.stockpile_count;
    if (genome.parcels() != P || genome.stockpiles() != S) {
        throw std::invalid_argument("genome shape does not match the instance");
    }
    const auto& f = instance.factors;

    PlanEvaluation plan;
    plan.stockpiles = S;
    plan.parcels.resize(P);
    plan.inventory.resize(P * S);
    plan.stockpile_grades.resize(P * S);

    std::vector<double> theta(S, 0.0);
    std::vector<GradeMap> grade(S);
    std::vector<bool> grade_defined(S, false);

    for (std::size_t p = 0; p < P; ++p) {
        const ParcelSpec& spec = instance.parcels[p];
        const bool month_start = spec.is_month_first;
        if (month_start) {
            const auto& haul = instance.months[spec.month_index].haul;
            for (std::size_t s = 0; s < S; ++s) {
                // A zero haul leaves the grade as is; blending is only
                // degenerate when the stockpile never received material.
                if (haul[s].tonnage == 0.0) {
                    if (!grade_defined[s]) throw DomainError("stockpile has no material and no defined grade");
                    continue;
                }
                for (Material mat : kMaterials) {
                    grade[s][mat] = blend_grade(grade[s][mat], theta[s], haul[s].grades[mat], haul[s].tonnage);
                }
                grade_defined[s] = true;
            }
        }
        for (std::size_t s = 0; s < S; ++s) {
            if (!grade_defined[s]) throw DomainError("stockpile grade undefined before first haul");
        }

        ParcelOutcome& out = plan.parcels[p];
        out.grades = parcel_grades(genome.row(p), grade);
        const DurationChoice choice = durations(p, out.grades);
        out.duration = choice.days;
        out.duration_feasible = choice.feasible;

        const double g_cu = out.grades[Material::Cu];
        const double g_s = out.grades[Material::S];
        out.tonnage = parcel_tonnage(out.duration, out.grades, f);
        out.cu_recovery = cu_recovery(g_cu, g_s, f);
        out.fl_recovery = f.mu_fl * out.grades[Material::Fl];
        out.cu_volume = out.tonnage * g_cu * out.cu_recovery;
        out.concentrate = concentrate(out.cu_volume, g_cu, g_s, f);
        plan.objective += out.cu_volume;

        const auto& haul = instance.months[spec.month_index].haul;
        for (std::size_t s = 0; s < S; ++s) {
            theta[s] = update_inventory(theta[s], haul[s].tonnage, genome(p, s) * out.tonnage, month_start);
            plan.inventory[p * S + s] = theta[s];
            plan.stockpile_grades[p * S + s] = grade[s];
        }
    }
    return plan;
}

PlanEvaluation simulate(const Instance& instance, const Genome& genome, std::span<const double> durations) {
    if (durations.size() != instance.parcel_count()) {
        throw std::invalid_argument("one duration per parcel required");
    }
    return simulate(instance, genome,
                    [durations](std::size_t p, const GradeMap&) { return DurationChoice{durations[p], true}; });
}

}  // namespace blend
