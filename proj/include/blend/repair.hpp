#pragma once

#include <cstddef>

#include "blend/model.hpp"

namespace blend {

/// Concentrate produced per day for a fixed blend; k(d) = zeta * d.
struct ConcentrateRate {
    double zeta = 0.0;
};

struct DurationRepairResult {
    double duration = 0.0;
    double concentrate = 0.0;
    bool feasible = false;
    std::size_t iterations = 0;
};

inline constexpr std::size_t kDefaultBisectionCap = 200;

/// Divides every row by its sum. All-zero rows become uniform 1/S.
Genome normalize_rows(Genome genome);
void normalize_rows_in_place(Genome& genome);

ConcentrateRate concentrate_rate(const GradeMap& grades, const ProcessingFactors& factors);

/// Bisection of the parcel duration into the band |zeta*d - K| <= 1.
///
/// Infeasible targets are reported, not thrown: a non-positive rate yields
/// d = 0 and a target beyond reach yields d = d_max, both with
/// `feasible == false`.
DurationRepairResult repair_duration(ConcentrateRate rate, double k_target, double d_max,
                                     std::size_t max_iterations = kDefaultBisectionCap);

/// Simulation where every parcel's duration comes from repair_duration with
/// the month length as the upper bound. The genome must already be normalized.
PlanEvaluation simulate_repaired(const Instance& instance, const Genome& genome);

}  // namespace blend
