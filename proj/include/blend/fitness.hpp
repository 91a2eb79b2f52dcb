#pragma once

#include <cstddef>
#include <string_view>
#include <optional>

#include "blend/model.hpp"
#include "blend/uncertainty.hpp"

namespace blend {

/// Constraint violations followed by the objective, compared in this order.
/// u, v, q and g are minimized; w and objective are maximized.
struct FitnessVector {
    double u = 0.0;          // sum of max{|K - k|, 1}; floor is the parcel count
    double v = 0.0;          // duration overrun, days
    double w = 0.0;          // min{total inventory, 0}
    double q = 0.0;          // Cu grade shortfall, or Cantelli excess in chance modes
    double g = 0.0;          // Fl recovery excess, or Cantelli excess in chance modes
    double objective = 0.0;  // tonnes Cu

    bool operator==(const FitnessVector&) const = default;

    /// Ranks below every finite vector; used for plans that hit a domain error.
    static FitnessVector worst();
};

bool is_feasible(const FitnessVector& f, std::size_t parcel_count);

enum class FitnessMode { Deterministic, ChanceCu, ChanceFl, ChanceBoth };

std::string_view mode_name(FitnessMode mode);  // "det", "cu", "fl", "both"
std::optional<FitnessMode> parse_mode(std::string_view name);

struct FitnessOptions {
    FitnessMode mode = FitnessMode::Deterministic;
    ChanceConfig chance;
    // Sum min{θ_ps, 0} per entry instead of clamping the grand total.
    bool strict_inventory = false;
};

struct Evaluation {
    Genome genome;  // normalized rows
    FitnessVector fitness;
    PlanEvaluation plan;
    bool valid = true;  // false when the plan raised a domain error
};

/// Normalizes rows, repairs each parcel's duration, simulates and scores.
Evaluation eval_fitness(const Instance& instance, Genome genome, const FitnessOptions& options);

/// Scores an already simulated plan.
FitnessVector score_plan(const Instance& instance, const Genome& genome, const PlanEvaluation& plan,
                         const FitnessOptions& options);

enum class Preference { First, Second, Tie };

Preference lex_compare(const FitnessVector& a, const FitnessVector& b);

}  // namespace blend
