#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "blend/model.hpp"

namespace blend {

struct GradeMoments {
    double mean = 0.0;
    double variance = 0.0;

    bool operator==(const GradeMoments&) const = default;
};

/// Only Cu and Fl carry chance constraints, so only they are tracked.
struct StockpileMoments {
    GradeMoments cu;
    GradeMoments fl;
};

struct ParcelMoments {
    double mean_cu = 0.0;
    double var_cu = 0.0;
    double mean_fl = 0.0;
    double var_fl = 0.0;
};

struct ChanceConfig {
    double alpha_cu = 0.9;
    double alpha_fl = 0.9;
};

/// Stockpile grade moments after a parcel step. Off month starts the moments
/// pass through; on a month start the haul is mixed in by mass.
GradeMoments propagate_moments(const GradeMoments& prev, double prev_tonnage, double haul_mean, double haul_var,
                               double haul_tonnage, bool month_start);

/// Mean and variance of the blended Cu and Fl grades, assuming independent
/// stockpile grades.
ParcelMoments parcel_moments(std::span<const double> x_row, std::span<const StockpileMoments> moments);

/// Moments for every parcel of a simulated plan. Haul grades have standard
/// deviation rel_std times their mean; the plan supplies the inventory path.
std::vector<ParcelMoments> plan_moments(const Instance& instance, const Genome& genome, const PlanEvaluation& plan);

/// Cantelli upper bound on Pr{g_Cu <= cu_min}; 1 whenever the mean is not
/// strictly above cu_min.
double cantelli_bound_cu(const ParcelMoments& pm, double cu_min);

/// Cantelli upper bound on Pr{mu_fl * g_Fl >= r_fl_max}.
double cantelli_bound_fl(const ParcelMoments& pm, double mu_fl, double r_fl_max);

/// max{bound - (1 - alpha), 0} for a positive variance. A degenerate grade
/// (zero variance) falls back to the deterministic shortfall
/// max{cu_min - E, 0}, since the Cantelli bound needs Var > 0.
double cantelli_violation_cu(const ParcelMoments& pm, double cu_min, double alpha_cu);

double cantelli_violation_fl(const ParcelMoments& pm, double mu_fl, double r_fl_max, double alpha_fl);

struct McEstimate {
    double p_cu_ok = 0.0;
    double p_fl_ok = 0.0;
    std::size_t samples = 0;
};

inline constexpr std::size_t kMinMcSamples = 1000;

/// Empirical Pr{g_Cu >= cu_min} and Pr{mu_fl * g_Fl <= r_fl_max} for one
/// parcel. Haul grades are drawn from a normal law with mean a and standard
/// deviation rel_std * a, truncated at zero; inventories follow the plan.
McEstimate mc_estimate(const Instance& instance, const Genome& genome, const PlanEvaluation& plan,
                       std::size_t parcel_index, std::size_t samples, std::uint64_t seed);

/// Convenience overload: normalizes and repairs the genome first.
McEstimate mc_estimate(const Instance& instance, const Genome& genome, std::size_t parcel_index,
                       std::size_t samples, std::uint64_t seed);

}  // namespace blend
