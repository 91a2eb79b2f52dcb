#include "blend/repair.hpp"

#include <cmath>

namespace blend {

void normalize_rows_in_place(Genome& genome) {
    for (std::size_t p = 0; p < genome.parcels(); ++p) {
        auto row = genome.row(p);
        double sum = 0.0;
        for (double v : row) sum += v;
        if (sum > 0.0) {
            for (double& v : row) v /= sum;
        } else {
            for (double& v : row) v = 1.0 / static_cast<double>(row.size());
        }
    }
}

Genome normalize_rows(Genome genome) {
    normalize_rows_in_place(genome);
    return genome;
}

ConcentrateRate concentrate_rate(const GradeMap& grades, const ProcessingFactors& factors) {
    const double g_cu = grades[Material::Cu];
    const double g_s = grades[Material::S];
    const double tonnes_per_day = parcel_tonnage(1.0, grades, factors);
    const double cu_per_day = tonnes_per_day * g_cu * cu_recovery(g_cu, g_s, factors);
    return {concentrate(cu_per_day, g_cu, g_s, factors)};
}

DurationRepairResult repair_duration(ConcentrateRate rate, double k_target, double d_max,
                                     std::size_t max_iterations) {
    const double zeta = rate.zeta;
    auto in_band = [&](double k) { return std::abs(k - k_target) <= 1.0; };

    if (in_band(0.0)) return {0.0, 0.0, true, 0};
    if (!(zeta > 0.0)) return {0.0, 0.0, false, 0};
    if (zeta * d_max < k_target - 1.0) return {d_max, zeta * d_max, false, 0};

    double lo = 0.0;   // k(lo) below the band
    double hi = d_max;  // k(hi) above the band, or hi = d_max
    double d = 0.5 * d_max;
    std::size_t it = 0;
    while (it < max_iterations) {
        ++it;
        const double k = zeta * d;
        if (in_band(k)) return {d, k, true, it};
        if (k > k_target + 1.0) {
            hi = d;
        } else {
            lo = d;
        }
        d = 0.5 * (lo + hi);
    }
    const double k = zeta * d;
    return {d, k, in_band(k), it};
}

PlanEvaluation simulate_repaired(const Instance& instance, const Genome& genome) {
    return simulate(instance, genome, [&instance](std::size_t p, const GradeMap& grades) {
        const ParcelSpec& spec = instance.parcels[p];
        const double d_max = instance.months[spec.month_index].duration_days;
        const auto r = repair_duration(concentrate_rate(grades, instance.factors), spec.k_target, d_max);
        return DurationChoice{r.duration, r.feasible};
    });
}

}  // namespace blend
