#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blend {

// Grade units are whatever the instance tables print; no percent conversion.
enum class Material : std::size_t { Cu, Ag, Fe, Au, U, Fl, S };

inline constexpr std::size_t kMaterialCount = 7;
inline constexpr std::array<Material, kMaterialCount> kMaterials{
    Material::Cu, Material::Ag, Material::Fe, Material::Au, Material::U, Material::Fl, Material::S};

std::string_view material_name(Material m);
std::optional<Material> parse_material(std::string_view name);

/// Total map from Material to a grade value.
class GradeMap {
public:
    GradeMap() { values_.fill(0.0); }

    double& operator[](Material m) { return values_[static_cast<std::size_t>(m)]; }
    double operator[](Material m) const { return values_[static_cast<std::size_t>(m)]; }

    bool operator==(const GradeMap&) const = default;

private:
    std::array<double, kMaterialCount> values_;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An instance invariant failed; `field()` names the offending JSON path.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A formula was evaluated outside its domain (log of a non-positive grade,
/// zero-mass blend, non-positive concentrate denominator).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

enum class LogBase { Natural, Ten };

struct ProcessingFactors {
    double delta = 1.0;
    double phi_base = 0.0;
    double phi_au = 0.0;
    double phi_u = 0.0;
    double phi_fe = 0.0;
    double phi_cu = 0.0;
    double gamma1 = 1.0;
    double gamma2 = 0.0;
    double mu_fl = 1.0;
    double mu_u = 0.0;  // carried for completeness; no formula uses it
    double mu_cu1 = 0.0;
    double mu_cu2 = 0.0;
    LogBase log_base = LogBase::Natural;
};

struct Haul {
    double tonnage = 0.0;
    GradeMap grades;
};

struct MonthSpec {
    double duration_days = 0.0;
    std::size_t num_parcels = 0;
    std::vector<Haul> haul;  // one entry per stockpile
};

struct ParcelSpec {
    double k_target = 0.0;
    double r_fl_max = 0.0;
    double cu_min = 0.0;
    std::size_t month_index = 0;
    bool is_month_first = false;
};

struct Instance {
    std::string name;
    std::size_t stockpile_count = 0;
    std::vector<MonthSpec> months;
    std::vector<ParcelSpec> parcels;
    ProcessingFactors factors;
    double rel_std = 0.01;

    std::size_t parcel_count() const noexcept { return parcels.size(); }

    /// Throws ValidationError naming the first violated invariant.
    void validate() const;
};

/// Claim fractions, one row per parcel and one column per stockpile.
class Genome {
public:
    Genome() = default;
    Genome(std::size_t parcels, std::size_t stockpiles, double fill = 0.0)
        : parcels_(parcels), stockpiles_(stockpiles), x_(parcels * stockpiles, fill) {}

    std::size_t parcels() const noexcept { return parcels_; }
    std::size_t stockpiles() const noexcept { return stockpiles_; }
    std::size_t size() const noexcept { return x_.size(); }

    double& operator()(std::size_t p, std::size_t s) { return x_[p * stockpiles_ + s]; }
    double operator()(std::size_t p, std::size_t s) const { return x_[p * stockpiles_ + s]; }

    std::span<double> row(std::size_t p) { return {x_.data() + p * stockpiles_, stockpiles_}; }
    std::span<const double> row(std::size_t p) const { return {x_.data() + p * stockpiles_, stockpiles_}; }

    std::span<double> flat() noexcept { return x_; }
    std::span<const double> flat() const noexcept { return x_; }

    bool operator==(const Genome&) const = default;

private:
    std::size_t parcels_ = 0;
    std::size_t stockpiles_ = 0;
    std::vector<double> x_;
};

struct ParcelOutcome {
    GradeMap grades;
    double duration = 0.0;
    double tonnage = 0.0;
    double cu_recovery = 0.0;
    double fl_recovery = 0.0;
    double concentrate = 0.0;
    double cu_volume = 0.0;
    bool duration_feasible = true;

    bool operator==(const ParcelOutcome&) const = default;
};

struct PlanEvaluation {
    std::size_t stockpiles = 0;
    std::vector<ParcelOutcome> parcels;
    std::vector<double> inventory;         // θ after each parcel's claim, P×S row-major
    std::vector<GradeMap> stockpile_grades;  // g̃ seen by each parcel, P×S row-major
    double objective = 0.0;

    double inventory_at(std::size_t p, std::size_t s) const { return inventory[p * stockpiles + s]; }
    const GradeMap& stockpile_grade_at(std::size_t p, std::size_t s) const {
        return stockpile_grades[p * stockpiles + s];
    }
    /// θ of stockpile s just before parcel p, excluding any month-start haul.
    double inventory_before(std::size_t p, std::size_t s) const {
        return p == 0 ? 0.0 : inventory_at(p - 1, s);
    }

    bool operator==(const PlanEvaluation&) const = default;
};

Instance load_instance(const std::filesystem::path& path);
Instance parse_instance(std::string_view json_text);
std::string instance_to_json(const Instance& instance);

double blend_grade(double prev_grade, double prev_tonnage, double haul_grade, double haul_tonnage);

double update_inventory(double prev, double haul, double claimed, bool month_start);

GradeMap parcel_grades(std::span<const double> x_row, std::span<const GradeMap> stockpile_grades);

double cu_recovery(double g_cu, double g_s, const ProcessingFactors& factors);

/// The bracketed term of the tonnage formula; tonnage is delta * t * bracket.
double tonnage_bracket(const GradeMap& grades, const ProcessingFactors& factors);

double parcel_tonnage(double days, const GradeMap& grades, const ProcessingFactors& factors);

double concentrate(double cu_tonnes, double g_cu, double g_s, const ProcessingFactors& factors);

/// Chosen duration for a parcel, given the grades its blend will have.
struct DurationChoice {
    double days = 0.0;
    bool feasible = true;
};

using DurationRule = std::function<DurationChoice(std::size_t parcel, const GradeMap& grades)>;

/// Forward simulation with durations decided parcel by parcel. Parcel grades
/// are known before the duration is chosen, so a rule may depend on them.
PlanEvaluation simulate(const Instance& instance, const Genome& genome, const DurationRule& durations);

PlanEvaluation simulate(const Instance& instance, const Genome& genome, std::span<const double> durations);

}  // namespace blend
