#include "blend/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "blend/repair.hpp"
#include "json.hpp"

namespace blend {

using json = nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

// --- instance generation ----------------------------------------------------

Instance generate_instance(const GeneratorRanges& r, std::uint64_t seed, std::optional<std::size_t> parcels) {
    Rng rng(seed);
    auto draw = [&rng](Interval iv) { return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng); };
    auto pick = [&rng](const auto& choices) {
        std::uniform_int_distribution<std::size_t> d(0, choices.size() - 1);
        return choices[d(rng)];
    };

    Instance inst;
    inst.name = "generated-" + std::to_string(seed);
    inst.stockpile_count = r.stockpiles;
    inst.rel_std = r.rel_std;

    const std::size_t parcel_count = pick(r.parcel_counts);
    const double duration = pick(r.month_durations);

    auto& f = inst.factors;
    f.delta = r.delta;
    f.phi_base = draw(r.phi_base);
    f.phi_au = draw(r.phi_au);
    f.phi_u = draw(r.phi_u);
    f.phi_fe = draw(r.phi_fe);
    f.phi_cu = draw(r.phi_cu);
    f.gamma1 = draw(r.gamma1);
    f.gamma2 = draw(r.gamma2);
    f.mu_fl = draw(r.mu_fl);
    f.mu_u = draw(r.mu_u);
    f.mu_cu1 = draw(r.mu_cu1);
    f.mu_cu2 = draw(r.mu_cu2);

    MonthSpec month;
    month.duration_days = duration;
    month.num_parcels = parcels.value_or(parcel_count);
    for (std::size_t s = 0; s < r.stockpiles; ++s) {
        Haul h;
        h.tonnage = draw(r.haul_tonnage);
        h.grades[Material::Cu] = draw(r.grade_cu);
        h.grades[Material::Ag] = draw(r.grade_ag);
        h.grades[Material::Fe] = draw(r.grade_fe);
        h.grades[Material::Au] = draw(r.grade_au);
        h.grades[Material::U] = draw(r.grade_u);
        h.grades[Material::Fl] = draw(r.grade_fl);
        h.grades[Material::S] = draw(r.grade_s);
        month.haul.push_back(h);
    }
    for (std::size_t p = 0; p < month.num_parcels; ++p) {
        ParcelSpec ps;
        ps.k_target = draw(r.k_target);
        ps.r_fl_max = draw(r.r_fl_max);
        ps.cu_min = draw(r.cu_min);
        ps.month_index = 0;
        ps.is_month_first = (p == 0);
        inst.parcels.push_back(ps);
    }
    inst.months.push_back(std::move(month));
    inst.validate();
    return inst;
}

// --- experiment spec ----------------------------------------------------------

void ExperimentSpec::validate() const {
    if (instances.empty()) throw ConfigError("experiment needs at least one instance");
    if (modes.empty()) throw ConfigError("experiment needs at least one mode");
    if (runs < 1) throw ConfigError("runs must be at least 1");
    for (FitnessMode m : modes) {
        if ((m == FitnessMode::ChanceCu || m == FitnessMode::ChanceBoth) && alpha_cu.empty()) {
            throw ConfigError("alpha_cu grid is empty");
        }
        if ((m == FitnessMode::ChanceFl || m == FitnessMode::ChanceBoth) && alpha_fl.empty()) {
            throw ConfigError("alpha_fl grid is empty");
        }
    }
    for (double a : alpha_cu) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha_cu values must lie in (0, 1)");
    }
    for (double a : alpha_fl) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha_fl values must lie in (0, 1)");
    }
    DeConfig probe = de;
    probe.fitness.chance = {0.5, 0.5};
    probe.validate();
}

ExperimentSpec parse_experiment_spec(std::string_view json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed experiment spec: ") + e.what());
    }
    ExperimentSpec spec;
    try {
        for (const auto& p : doc.at("instances")) {
            std::filesystem::path path = p.get<std::string>();
            spec.instances.push_back(path.is_relative() && !base_dir.empty() ? base_dir / path : path);
        }
        if (doc.contains("modes")) {
            spec.modes.clear();
            for (const auto& m : doc.at("modes")) {
                const auto mode = parse_mode(m.get<std::string>());
                if (!mode) throw ParseError("unknown mode '" + m.get<std::string>() + "'");
                spec.modes.push_back(*mode);
            }
        }
        if (doc.contains("alpha_cu")) spec.alpha_cu = doc.at("alpha_cu").get<std::vector<double>>();
        if (doc.contains("alpha_fl")) spec.alpha_fl = doc.at("alpha_fl").get<std::vector<double>>();
        spec.runs = doc.value("runs", spec.runs);
        if (doc.contains("de")) {
            const auto& de = doc.at("de");
            spec.de.pop_size = de.value("pop", spec.de.pop_size);
            spec.de.generations = de.value("gens", spec.de.generations);
            spec.de.f_scale = de.value("f", spec.de.f_scale);
            spec.de.crossover_rate = de.value("cr", spec.de.crossover_rate);
            spec.de.seed = de.value("seed", spec.de.seed);
            spec.de.fitness.strict_inventory = de.value("strict_inventory", false);
        }
        const std::string success = doc.value("success", std::string("best"));
        if (success == "best") {
            spec.success = SuccessRule::BestMember;
        } else if (success == "population") {
            spec.success = SuccessRule::WholePopulation;
        } else {
            throw ParseError("success must be 'best' or 'population'");
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment spec: ") + e.what());
    }
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ValidationError("experiment", e.what());
    }
    return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    return parse_experiment_spec(read_file(path), path.parent_path());
}

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
    json doc;
    doc["instances"] = json::array();
    for (const auto& p : spec.instances) doc["instances"].push_back(p.string());
    doc["modes"] = json::array();
    for (FitnessMode m : spec.modes) doc["modes"].push_back(std::string(mode_name(m)));
    doc["alpha_cu"] = spec.alpha_cu;
    doc["alpha_fl"] = spec.alpha_fl;
    doc["runs"] = spec.runs;
    doc["de"] = {{"pop", spec.de.pop_size},
                 {"gens", spec.de.generations},
                 {"f", spec.de.f_scale},
                 {"cr", spec.de.crossover_rate},
                 {"seed", spec.de.seed},
                 {"strict_inventory", spec.de.fitness.strict_inventory}};
    doc["success"] = spec.success == SuccessRule::BestMember ? "best" : "population";
    return doc.dump(2) + "\n";
}

// --- running ------------------------------------------------------------------

std::vector<CellKey> experiment_cells(const ExperimentSpec& spec, const std::vector<Instance>& instances) {
    std::vector<CellKey> cells;
    auto has = [&spec](FitnessMode m) { return std::find(spec.modes.begin(), spec.modes.end(), m) != spec.modes.end(); };
    for (const auto& inst : instances) {
        if (has(FitnessMode::Deterministic)) cells.push_back({inst.name, FitnessMode::Deterministic, {}, {}});
        if (has(FitnessMode::ChanceCu)) {
            for (double a : spec.alpha_cu) cells.push_back({inst.name, FitnessMode::ChanceCu, a, {}});
        }
        if (has(FitnessMode::ChanceFl)) {
            for (double a : spec.alpha_fl) cells.push_back({inst.name, FitnessMode::ChanceFl, {}, a});
        }
        if (has(FitnessMode::ChanceBoth)) {
            for (double a : spec.alpha_cu) {
                for (double b : spec.alpha_fl) cells.push_back({inst.name, FitnessMode::ChanceBoth, a, b});
            }
        }
    }
    return cells;
}

CellSummary summarize(const std::vector<RunRecord>& records, SuccessRule rule) {
    CellSummary s;
    s.runs = records.size();
    double sum = 0.0;
    for (const auto& r : records) {
        const bool ok = rule == SuccessRule::BestMember ? r.feasible : r.population_feasible;
        if (!ok) continue;
        ++s.successes;
        const double o = r.fitness.objective;
        sum += o;
        s.best = s.best ? std::max(*s.best, o) : o;
        s.worst = s.worst ? std::min(*s.worst, o) : o;
    }
    if (s.successes > 0) s.mean = sum / static_cast<double>(s.successes);
    s.success_rate = s.runs == 0 ? 0.0 : static_cast<double>(s.successes) / static_cast<double>(s.runs);
    return s;
}

std::vector<Cell> run_experiment(const ExperimentSpec& spec, std::size_t jobs) {
    spec.validate();
    std::vector<Instance> instances;
    for (const auto& path : spec.instances) instances.push_back(load_instance(path));

    std::vector<Cell> cells;
    std::vector<std::size_t> cell_instance;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        for (auto& key : experiment_cells(spec, {instances[i]})) {
            cells.push_back({std::move(key), std::vector<RunRecord>(spec.runs), {}});
            cell_instance.push_back(i);
        }
    }

    const std::size_t total = cells.size() * spec.runs;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t t = next++; t < total; t = next++) {
            const std::size_t c = t / spec.runs;
            const std::size_t r = t % spec.runs;
            try {
                DeConfig cfg = spec.de;
                cfg.seed = child_seed(spec.de.seed, r);
                cfg.fitness.mode = cells[c].key.mode;
                cfg.fitness.chance = {cells[c].key.alpha_cu.value_or(0.9), cells[c].key.alpha_fl.value_or(0.9)};
                const RunResult res = run(instances[cell_instance[c]], cfg);
                cells[c].records[r] = {r, cfg.seed, res.best_fitness, res.feasible, res.population_feasible};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, total));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& cell : cells) cell.summary = summarize(cell.records, spec.success);
    return cells;
}

// --- logs and reports ---------------------------------------------------------

namespace {

json alpha_json(const std::optional<double>& a) { return a ? json(*a) : json(nullptr); }

std::optional<double> alpha_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

// JSON has no infinities; the sentinel fitness is written as strings.
json number_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw ParseError("not a number: " + s);
    }
    return j.get<double>();
}

json fitness_json(const FitnessVector& f) {
    return json::array({number_json(f.u), number_json(f.v), number_json(f.w), number_json(f.q), number_json(f.g),
                        number_json(f.objective)});
}

FitnessVector fitness_from(const json& j) {
    if (!j.is_array() || j.size() != 6) throw ParseError("fitness must have six components");
    return {number_from(j[0]), number_from(j[1]), number_from(j[2]),
            number_from(j[3]), number_from(j[4]), number_from(j[5])};
}

}  // namespace

std::string run_log_jsonl(const std::vector<Cell>& cells) {
    std::string out;
    for (const auto& cell : cells) {
        for (const auto& r : cell.records) {
            const auto& f = r.fitness;
            json line = {{"instance", cell.key.instance},
                         {"mode", std::string(mode_name(cell.key.mode))},
                         {"alpha_cu", alpha_json(cell.key.alpha_cu)},
                         {"alpha_fl", alpha_json(cell.key.alpha_fl)},
                         {"run", r.run_index},
                         {"seed", r.seed},
                         {"fitness", fitness_json(f)},
                         {"objective", number_json(f.objective)},
                         {"feasible", r.feasible},
                         {"population_feasible", r.population_feasible}};
            out += line.dump();
            out += '\n';
        }
    }
    return out;
}

std::vector<Cell> cells_from_run_log(std::string_view jsonl, SuccessRule rule) {
    std::vector<Cell> cells;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            const auto mode = parse_mode(j.at("mode").get<std::string>());
            if (!mode) throw ParseError("unknown mode");
            CellKey key{j.at("instance").get<std::string>(), *mode, alpha_from(j.at("alpha_cu")),
                        alpha_from(j.at("alpha_fl"))};
            RunRecord rec{j.at("run").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
                          fitness_from(j.at("fitness")), j.at("feasible").get<bool>(),
                          j.at("population_feasible").get<bool>()};
            auto it = std::find_if(cells.begin(), cells.end(), [&key](const Cell& c) { return c.key == key; });
            if (it == cells.end()) {
                cells.push_back({key, {}, {}});
                it = std::prev(cells.end());
            }
            it->records.push_back(rec);
        } catch (const json::exception& e) {
            throw ParseError("run log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    for (auto& cell : cells) {
        std::sort(cell.records.begin(), cell.records.end(),
                  [](const RunRecord& a, const RunRecord& b) { return a.run_index < b.run_index; });
        cell.summary = summarize(cell.records, rule);
    }
    return cells;
}

std::string report_csv(const std::vector<Cell>& cells) {
    std::string out = "instance,mode,alpha_cu,alpha_fl,mean,best,worst,success_rate\n";
    for (const auto& c : cells) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", c.key.instance, mode_name(c.key.mode),
                           optional_cell(c.key.alpha_cu), optional_cell(c.key.alpha_fl),
                           optional_cell(c.summary.mean), optional_cell(c.summary.best),
                           optional_cell(c.summary.worst), format_double(c.summary.success_rate));
    }
    return out;
}

std::string report_table(const std::vector<Cell>& cells) {
    std::vector<std::string> instance_order;
    for (const auto& c : cells) {
        if (std::find(instance_order.begin(), instance_order.end(), c.key.instance) == instance_order.end()) {
            instance_order.push_back(c.key.instance);
        }
    }
    auto stat = [](const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : std::string("-"); };
    auto emit = [&](std::string& out, const std::vector<const Cell*>& row_cells) {
        std::string hdr = fmt::format("{:<14}", "");
        for (const Cell* c : row_cells) {
            std::string label;
            switch (c->key.mode) {
                case FitnessMode::Deterministic: label = "Deterministic"; break;
                case FitnessMode::ChanceCu: label = fmt::format("Cu a={}", format_double(*c->key.alpha_cu)); break;
                case FitnessMode::ChanceFl: label = fmt::format("Fl a={}", format_double(*c->key.alpha_fl)); break;
                case FitnessMode::ChanceBoth:
                    label = fmt::format("Cu={} Fl={}", format_double(*c->key.alpha_cu), format_double(*c->key.alpha_fl));
                    break;
            }
            hdr += fmt::format(" {:>20}", label);
        }
        out += hdr + "\n";
        const std::pair<const char*, int> rows[] = {{"Mean", 0}, {"Best", 1}, {"Worst", 2}, {"Success rate", 3}};
        for (const auto& [name, which] : rows) {
            std::string line = fmt::format("{:<14}", name);
            for (const Cell* c : row_cells) {
                const auto& s = c->summary;
                const std::string v = which == 0   ? stat(s.mean)
                                      : which == 1 ? stat(s.best)
                                      : which == 2 ? stat(s.worst)
                                                   : fmt::format("{:.9g}", s.success_rate);
                line += fmt::format(" {:>20}", v);
            }
            out += line + "\n";
        }
    };

    std::string out;
    for (const auto& name : instance_order) {
        std::vector<const Cell*> single, combined;
        for (const auto& c : cells) {
            if (c.key.instance != name) continue;
            (c.key.mode == FitnessMode::ChanceBoth ? combined : single).push_back(&c);
        }
        out += fmt::format("Instance {}\n", name);
        if (!single.empty()) {
            out += "Single chance constraint\n";
            emit(out, single);
        }
        if (!combined.empty()) {
            out += "Combined chance constraints\n";
            emit(out, combined);
        }
        out += "\n";
    }
    return out;
}

void write_experiment(const std::vector<Cell>& cells, const ExperimentSpec& spec, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "runs.jsonl", run_log_jsonl(cells));
    write_file(dir / "summary.csv", report_csv(cells));
    write_file(dir / "summary.txt", report_table(cells));
    write_file(dir / "spec.json", experiment_spec_to_json(spec));
}

// --- validation and solutions -------------------------------------------------

std::vector<ParcelValidation> validate_solution(const Instance& instance, const Genome& genome,
                                                const ChanceConfig& chance, std::size_t samples,
                                                std::uint64_t seed) {
    const Genome normalized = normalize_rows(genome);
    const PlanEvaluation plan = simulate_repaired(instance, normalized);
    const auto moments = plan_moments(instance, normalized, plan);
    const double n = static_cast<double>(samples);
    const double mu_fl = instance.factors.mu_fl;

    std::vector<ParcelValidation> out;
    for (std::size_t p = 0; p < instance.parcel_count(); ++p) {
        const ParcelSpec& spec = instance.parcels[p];
        ParcelValidation v;
        v.parcel = p;
        v.bound_cu = cantelli_bound_cu(moments[p], spec.cu_min);
        v.bound_fl = cantelli_bound_fl(moments[p], mu_fl, spec.r_fl_max);
        v.violation_cu = cantelli_violation_cu(moments[p], spec.cu_min, chance.alpha_cu);
        v.violation_fl = cantelli_violation_fl(moments[p], mu_fl, spec.r_fl_max, chance.alpha_fl);
        v.estimate = mc_estimate(instance, normalized, plan, p, samples, child_seed(seed, p));
        v.margin_cu = 3.0 * std::sqrt(chance.alpha_cu * (1.0 - chance.alpha_cu) / n);
        v.margin_fl = 3.0 * std::sqrt(chance.alpha_fl * (1.0 - chance.alpha_fl) / n);
        v.pass_cu = v.estimate.p_cu_ok >= chance.alpha_cu - v.margin_cu;
        v.pass_fl = v.estimate.p_fl_ok >= chance.alpha_fl - v.margin_fl;
        out.push_back(v);
    }
    return out;
}

Solution make_solution(const Instance& instance, const DeConfig& config, const RunResult& result) {
    Solution s;
    s.instance = instance.name;
    s.mode = config.fitness.mode;
    s.chance = config.fitness.chance;
    s.seed = config.seed;
    s.genome = result.best_genome;
    for (const auto& p : result.best_plan.parcels) s.durations.push_back(p.duration);
    s.fitness = result.best_fitness;
    s.feasible = result.feasible;
    return s;
}

std::string solution_to_json(const Solution& s) {
    json rows = json::array();
    for (std::size_t p = 0; p < s.genome.parcels(); ++p) {
        const auto r = s.genome.row(p);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    const auto& f = s.fitness;
    json doc = {{"instance", s.instance},
                {"mode", std::string(mode_name(s.mode))},
                {"alpha_cu", s.chance.alpha_cu},
                {"alpha_fl", s.chance.alpha_fl},
                {"seed", s.seed},
                {"genome", rows},
                {"durations", s.durations},
                {"fitness",
                 {{"u", number_json(f.u)},
                  {"v", number_json(f.v)},
                  {"w", number_json(f.w)},
                  {"q", number_json(f.q)},
                  {"g", number_json(f.g)},
                  {"objective", number_json(f.objective)}}},
                {"objective", number_json(f.objective)},
                {"feasible", s.feasible}};
    return doc.dump(2) + "\n";
}

Solution parse_solution(std::string_view json_text) {
    try {
        const json doc = json::parse(json_text);
        Solution s;
        s.instance = doc.value("instance", std::string{});
        const auto mode = parse_mode(doc.value("mode", std::string("det")));
        if (!mode) throw ParseError("solution: unknown mode");
        s.mode = *mode;
        s.chance = {doc.value("alpha_cu", 0.9), doc.value("alpha_fl", 0.9)};
        s.seed = doc.value("seed", std::uint64_t{0});
        const auto rows = doc.at("genome").get<std::vector<std::vector<double>>>();
        const std::size_t cols = rows.empty() ? 0 : rows.front().size();
        s.genome = Genome(rows.size(), cols);
        for (std::size_t p = 0; p < rows.size(); ++p) {
            if (rows[p].size() != cols) throw ParseError("solution: ragged genome matrix");
            for (std::size_t c = 0; c < cols; ++c) s.genome(p, c) = rows[p][c];
        }
        s.durations = doc.value("durations", std::vector<double>{});
        if (doc.contains("fitness")) {
            const auto& f = doc.at("fitness");
            s.fitness = {number_from(f.at("u")), number_from(f.at("v")), number_from(f.at("w")),
                         number_from(f.at("q")), number_from(f.at("g")), number_from(f.at("objective"))};
        }
        s.feasible = doc.value("feasible", false);
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("solution: ") + e.what());
    }
}

}  // namespace blend
