#include "blend/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blend/repair.hpp"

namespace blend {

FitnessVector FitnessVector::worst() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, -inf, inf, inf, -inf};
}

bool is_feasible(const FitnessVector& f, std::size_t parcel_count) {
    return f.u == static_cast<double>(parcel_count) && f.v == 0.0 && f.w == 0.0 && f.q == 0.0 && f.g == 0.0;
}

std::string_view mode_name(FitnessMode mode) {
    switch (mode) {
        case FitnessMode::Deterministic: return "det";
        case FitnessMode::ChanceCu: return "cu";
        case FitnessMode::ChanceFl: return "fl";
        case FitnessMode::ChanceBoth: return "both";
    }
    return "det";
}

std::optional<FitnessMode> parse_mode(std::string_view name) {
    for (auto m : {FitnessMode::Deterministic, FitnessMode::ChanceCu, FitnessMode::ChanceFl, FitnessMode::ChanceBoth}) {
        if (mode_name(m) == name) return m;
    }
    return std::nullopt;
}

FitnessVector score_plan(const Instance& instance, const Genome& genome, const PlanEvaluation& plan,
                         const FitnessOptions& options) {
    const std::size_t P = instance.parcel_count();
    const bool chance_cu = options.mode == FitnessMode::ChanceCu || options.mode == FitnessMode::ChanceBoth;
    const bool chance_fl = options.mode == FitnessMode::ChanceFl || options.mode == FitnessMode::ChanceBoth;

    FitnessVector f;
    for (std::size_t p = 0; p < P; ++p) {
        f.u += std::max(std::abs(instance.parcels[p].k_target - plan.parcels[p].concentrate), 1.0);
    }

    std::vector<double> month_days(instance.months.size(), 0.0);
    for (std::size_t p = 0; p < P; ++p) month_days[instance.parcels[p].month_index] += plan.parcels[p].duration;
    for (std::size_t m = 0; m < month_days.size(); ++m) {
        f.v += std::max(month_days[m] - instance.months[m].duration_days, 0.0);
    }

    if (options.strict_inventory) {
        for (double theta : plan.inventory) f.w += std::min(theta, 0.0);
    } else {
        double total = 0.0;
        for (double theta : plan.inventory) total += theta;
        f.w = std::min(total, 0.0);
    }

    std::vector<ParcelMoments> moments;
    if (chance_cu || chance_fl) moments = plan_moments(instance, genome, plan);

    const double mu_fl = instance.factors.mu_fl;
    for (std::size_t p = 0; p < P; ++p) {
        const ParcelSpec& spec = instance.parcels[p];
        const ParcelOutcome& out = plan.parcels[p];
        f.q += chance_cu ? cantelli_violation_cu(moments[p], spec.cu_min, options.chance.alpha_cu)
                         : std::max(spec.cu_min - out.grades[Material::Cu], 0.0);
        f.g += chance_fl ? cantelli_violation_fl(moments[p], mu_fl, spec.r_fl_max, options.chance.alpha_fl)
                         : std::max(out.fl_recovery - spec.r_fl_max, 0.0);
    }
    f.objective = plan.objective;
    return f;
}

Evaluation eval_fitness(const Instance& instance, Genome genome, const FitnessOptions& options) {
    normalize_rows_in_place(genome);
    Evaluation ev;
    try {
        ev.plan = simulate_repaired(instance, genome);
        ev.fitness = score_plan(instance, genome, ev.plan, options);
        if (std::isnan(ev.fitness.u) || std::isnan(ev.fitness.v) || std::isnan(ev.fitness.w) ||
            std::isnan(ev.fitness.q) || std::isnan(ev.fitness.g) || std::isnan(ev.fitness.objective)) {
            throw DomainError("fitness evaluated to NaN");
        }
    } catch (const DomainError&) {
        ev.fitness = FitnessVector::worst();
        ev.valid = false;
    }
    ev.genome = std::move(genome);
    return ev;
}

Preference lex_compare(const FitnessVector& a, const FitnessVector& b) {
    // Maximized keys are negated so that smaller always wins.
    const std::pair<double, double> keys[] = {{a.u, b.u}, {a.v, b.v}, {-a.w, -b.w},
                                              {a.q, b.q}, {a.g, b.g}, {-a.objective, -b.objective}};
    for (const auto& [x, y] : keys) {
        if (x < y) return Preference::First;
        if (y < x) return Preference::Second;
    }
    return Preference::Tie;
}

}  // namespace blend
