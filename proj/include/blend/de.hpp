#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "blend/fitness.hpp"
#include "blend/model.hpp"

namespace blend {

using Rng = std::mt19937_64;

/// Seed of the `stream`-th independent child of `base` (splitmix64 finalizer
/// applied to base + stream * golden gamma). Run r of an experiment uses
/// child_seed(seed, r).
std::uint64_t child_seed(std::uint64_t base, std::uint64_t stream);

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DeConfig {
    std::size_t pop_size = 10;
    std::size_t generations = 10000;
    double f_scale = 0.5;
    double crossover_rate = 0.9;
    std::uint64_t seed = 0;
    FitnessOptions fitness;

    /// Throws ConfigError.
    void validate() const;
};

struct Member {
    Genome genome;
    FitnessVector fitness;
    PlanEvaluation plan;
};

struct Population {
    std::vector<Member> members;
    std::size_t best_index = 0;

    const Member& best() const { return members[best_index]; }
    void refresh_best();
};

struct RunResult {
    Genome best_genome;
    FitnessVector best_fitness;
    PlanEvaluation best_plan;
    bool feasible = false;
    bool population_feasible = false;  // every final member feasible
    std::size_t generations_run = 0;
    std::vector<double> best_objective_history;  // entry 0 is the initial population
};

Member evaluate_member(const Instance& instance, Genome genome, const FitnessOptions& options);

Population init_population(const Instance& instance, const DeConfig& config, Rng& rng);
Population init_population(const Instance& instance, const DeConfig& config);

/// V = X_i + F (X_best - X_i) + F (X_r1 - X_r2), clamped to [0, 1].
Genome mutate_target_to_best(const Genome& x_i, const Genome& x_best, const Genome& x_r1, const Genome& x_r2,
                             double f_scale);

/// Entry j comes from the mutant when a fresh uniform draw is <= Cr or j == j_rand.
Genome crossover_binomial(const Genome& x_i, const Genome& v_i, double crossover_rate, std::size_t j_rand, Rng& rng);

struct MutationIndices {
    std::size_t r1 = 0;
    std::size_t r2 = 0;
};

/// Two distinct indices from [0, np) excluding `target`.
MutationIndices sample_mutation_indices(Rng& rng, std::size_t np, std::size_t target);

/// The trial survives ties.
const Member& select(const Member& target, const Member& trial);

struct RunHooks {
    std::function<void(std::size_t target, MutationIndices)> on_mutation;
    std::function<void(std::size_t generation, const Population&)> on_generation;
};

RunResult run(const Instance& instance, const DeConfig& config, const RunHooks& hooks = {});

}  // namespace blend
