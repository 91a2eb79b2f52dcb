#include "blend/uncertainty.hpp"

#include <algorithm>
#include <random>

#include "blend/repair.hpp"

namespace blend {

GradeMoments propagate_moments(const GradeMoments& prev, double prev_tonnage, double haul_mean, double haul_var,
                               double haul_tonnage, bool month_start) {
    if (!month_start) return prev;
    const double total = prev_tonnage + haul_tonnage;
    if (total == 0.0) throw DomainError("moment blend of two empty masses");
    if (haul_tonnage == 0.0) return prev;
    const double a = prev_tonnage / total;
    const double b = haul_tonnage / total;
    GradeMoments out;
    out.mean = prev_tonnage == 0.0 ? haul_mean : (prev.mean * prev_tonnage + haul_mean * haul_tonnage) / total;
    out.variance = a * a * prev.variance + b * b * haul_var;
    return out;
}

ParcelMoments parcel_moments(std::span<const double> x_row, std::span<const StockpileMoments> moments) {
    ParcelMoments pm;
    for (std::size_t s = 0; s < x_row.size(); ++s) {
        const double x = x_row[s];
        pm.mean_cu += x * moments[s].cu.mean;
        pm.var_cu += x * x * moments[s].cu.variance;
        pm.mean_fl += x * moments[s].fl.mean;
        pm.var_fl += x * x * moments[s].fl.variance;
    }
    return pm;
}

std::vector<ParcelMoments> plan_moments(const Instance& instance, const Genome& genome, const PlanEvaluation& plan) {
    const std::size_t S = instance.stockpile_count;
    const double rho = instance.rel_std;
    std::vector<StockpileMoments> sm(S);
    std::vector<ParcelMoments> out;
    out.reserve(instance.parcel_count());

    for (std::size_t p = 0; p < instance.parcel_count(); ++p) {
        const ParcelSpec& spec = instance.parcels[p];
        if (spec.is_month_first) {
            const auto& haul = instance.months[spec.month_index].haul;
            for (std::size_t s = 0; s < S; ++s) {
                if (haul[s].tonnage == 0.0) continue;
                const double theta = plan.inventory_before(p, s);
                const double a_cu = haul[s].grades[Material::Cu];
                const double a_fl = haul[s].grades[Material::Fl];
                sm[s].cu = propagate_moments(sm[s].cu, theta, a_cu, (rho * a_cu) * (rho * a_cu), haul[s].tonnage, true);
                sm[s].fl = propagate_moments(sm[s].fl, theta, a_fl, (rho * a_fl) * (rho * a_fl), haul[s].tonnage, true);
            }
        }
        out.push_back(parcel_moments(genome.row(p), sm));
    }
    return out;
}

double cantelli_bound_cu(const ParcelMoments& pm, double cu_min) {
    const double gap = pm.mean_cu - cu_min;
    if (!(gap > 0.0)) return 1.0;
    return pm.var_cu / (pm.var_cu + gap * gap);
}

double cantelli_bound_fl(const ParcelMoments& pm, double mu_fl, double r_fl_max) {
    const double mean_r = mu_fl * pm.mean_fl;
    const double var_r = mu_fl * mu_fl * pm.var_fl;
    const double gap = r_fl_max - mean_r;
    if (!(gap > 0.0)) return 1.0;
    return var_r / (var_r + gap * gap);
}

double cantelli_violation_cu(const ParcelMoments& pm, double cu_min, double alpha_cu) {
    if (pm.var_cu == 0.0) return std::max(cu_min - pm.mean_cu, 0.0);
    return std::max(cantelli_bound_cu(pm, cu_min) - (1.0 - alpha_cu), 0.0);
}

double cantelli_violation_fl(const ParcelMoments& pm, double mu_fl, double r_fl_max, double alpha_fl) {
    if (pm.var_fl == 0.0) return std::max(mu_fl * pm.mean_fl - r_fl_max, 0.0);
    return std::max(cantelli_bound_fl(pm, mu_fl, r_fl_max) - (1.0 - alpha_fl), 0.0);
}

McEstimate mc_estimate(const Instance& instance, const Genome& genome, const PlanEvaluation& plan,
                       std::size_t parcel_index, std::size_t samples, std::uint64_t seed) {
    if (parcel_index >= instance.parcel_count()) throw std::out_of_range("parcel index out of range");
    if (samples < kMinMcSamples) throw std::invalid_argument("at least 1000 Monte Carlo samples required");

    const std::size_t S = instance.stockpile_count;
    const double rho = instance.rel_std;
    const ParcelSpec& target = instance.parcels[parcel_index];
    const double mu_fl = instance.factors.mu_fl;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double mean) {
        const double sd = rho * mean;
        if (sd == 0.0) return mean;
        for (;;) {
            const double v = mean + sd * unit(rng);
            if (v >= 0.0) return v;
        }
    };

    std::vector<double> cu(S), fl(S);
    std::size_t cu_ok = 0;
    std::size_t fl_ok = 0;
    for (std::size_t n = 0; n < samples; ++n) {
        for (std::size_t p = 0; p <= parcel_index; ++p) {
            const ParcelSpec& spec = instance.parcels[p];
            if (!spec.is_month_first) continue;
            const auto& haul = instance.months[spec.month_index].haul;
            for (std::size_t s = 0; s < S; ++s) {
                if (haul[s].tonnage == 0.0) continue;
                const double theta = plan.inventory_before(p, s);
                cu[s] = blend_grade(cu[s], theta, draw(haul[s].grades[Material::Cu]), haul[s].tonnage);
                fl[s] = blend_grade(fl[s], theta, draw(haul[s].grades[Material::Fl]), haul[s].tonnage);
            }
        }
        double g_cu = 0.0;
        double g_fl = 0.0;
        const auto x = genome.row(parcel_index);
        for (std::size_t s = 0; s < S; ++s) {
            g_cu += x[s] * cu[s];
            g_fl += x[s] * fl[s];
        }
        if (g_cu >= target.cu_min) ++cu_ok;
        if (mu_fl * g_fl <= target.r_fl_max) ++fl_ok;
    }
    const double n = static_cast<double>(samples);
    return {static_cast<double>(cu_ok) / n, static_cast<double>(fl_ok) / n, samples};
}

McEstimate mc_estimate(const Instance& instance, const Genome& genome, std::size_t parcel_index,
                       std::size_t samples, std::uint64_t seed) {
    const Genome normalized = normalize_rows(genome);
    const PlanEvaluation plan = simulate_repaired(instance, normalized);
    return mc_estimate(instance, normalized, plan, parcel_index, samples, seed);
}

}  // namespace blend
