#include "blend/de.hpp"

#include <algorithm>

namespace blend {

std::uint64_t child_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + (stream + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void DeConfig::validate() const {
    if (pop_size < 4) throw ConfigError("population size must be at least 4");
    if (!(f_scale > 0.0)) throw ConfigError("scale factor F must be positive");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("crossover rate must lie in [0, 1]");
    const auto& c = fitness.chance;
    if (!(c.alpha_cu > 0.0 && c.alpha_cu < 1.0)) throw ConfigError("alpha_cu must lie in (0, 1)");
    if (!(c.alpha_fl > 0.0 && c.alpha_fl < 1.0)) throw ConfigError("alpha_fl must lie in (0, 1)");
}

void Population::refresh_best() {
    best_index = 0;
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (lex_compare(members[i].fitness, members[best_index].fitness) == Preference::First) best_index = i;
    }
}

Member evaluate_member(const Instance& instance, Genome genome, const FitnessOptions& options) {
    Evaluation ev = eval_fitness(instance, std::move(genome), options);
    return {std::move(ev.genome), ev.fitness, std::move(ev.plan)};
}

Population init_population(const Instance& instance, const DeConfig& config, Rng& rng) {
    config.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Population pop;
    pop.members.reserve(config.pop_size);
    for (std::size_t i = 0; i < config.pop_size; ++i) {
        Genome g(instance.parcel_count(), instance.stockpile_count);
        for (double& x : g.flat()) x = unit(rng);
        pop.members.push_back(evaluate_member(instance, std::move(g), config.fitness));
    }
    pop.refresh_best();
    return pop;
}

Population init_population(const Instance& instance, const DeConfig& config) {
    Rng rng(config.seed);
    return init_population(instance, config, rng);
}

Genome mutate_target_to_best(const Genome& x_i, const Genome& x_best, const Genome& x_r1, const Genome& x_r2,
                             double f_scale) {
    Genome v = x_i;
    auto out = v.flat();
    const auto xi = x_i.flat();
    const auto xb = x_best.flat();
    const auto a = x_r1.flat();
    const auto b = x_r2.flat();
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double raw = xi[j] + f_scale * (xb[j] - xi[j]) + f_scale * (a[j] - b[j]);
        out[j] = std::clamp(raw, 0.0, 1.0);
    }
    return v;
}

Genome crossover_binomial(const Genome& x_i, const Genome& v_i, double crossover_rate, std::size_t j_rand, Rng& rng) {
    if (j_rand >= x_i.size()) throw std::out_of_range("j_rand outside the genome");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Genome u = x_i;
    auto out = u.flat();
    const auto v = v_i.flat();
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double draw = unit(rng);
        if (draw <= crossover_rate || j == j_rand) out[j] = v[j];
    }
    return u;
}

MutationIndices sample_mutation_indices(Rng& rng, std::size_t np, std::size_t target) {
    // Draw from the np - 1 non-target slots, then the np - 2 remaining ones.
    std::uniform_int_distribution<std::size_t> first(0, np - 2);
    std::uniform_int_distribution<std::size_t> second(0, np - 3);
    std::size_t r1 = first(rng);
    if (r1 >= target) ++r1;
    std::size_t r2 = second(rng);
    const std::size_t lo = std::min(target, r1);
    const std::size_t hi = std::max(target, r1);
    if (r2 >= lo) ++r2;
    if (r2 >= hi) ++r2;
    return {r1, r2};
}

const Member& select(const Member& target, const Member& trial) {
    return lex_compare(trial.fitness, target.fitness) == Preference::Second ? target : trial;
}

RunResult run(const Instance& instance, const DeConfig& config, const RunHooks& hooks) {
    config.validate();
    Rng rng(config.seed);
    Population pop = init_population(instance, config, rng);
    const std::size_t np = config.pop_size;
    const std::size_t dim = instance.parcel_count() * instance.stockpile_count;
    std::uniform_int_distribution<std::size_t> pick_dim(0, dim - 1);

    RunResult result;
    result.best_objective_history.reserve(config.generations + 1);
    result.best_objective_history.push_back(pop.best().fitness.objective);

    std::vector<Member> trials(np);
    for (std::size_t gen = 0; gen < config.generations; ++gen) {
        // X_best is frozen for the whole generation.
        const Genome& best = pop.best().genome;
        for (std::size_t i = 0; i < np; ++i) {
            const MutationIndices r = sample_mutation_indices(rng, np, i);
            if (hooks.on_mutation) hooks.on_mutation(i, r);
            const Genome& x_i = pop.members[i].genome;
            Genome v = mutate_target_to_best(x_i, best, pop.members[r.r1].genome, pop.members[r.r2].genome,
                                             config.f_scale);
            const std::size_t j_rand = pick_dim(rng);
            trials[i] = evaluate_member(instance, crossover_binomial(x_i, v, config.crossover_rate, j_rand, rng),
                                        config.fitness);
        }
        for (std::size_t i = 0; i < np; ++i) {
            if (&select(pop.members[i], trials[i]) == &trials[i]) pop.members[i] = std::move(trials[i]);
        }
        pop.refresh_best();
        result.best_objective_history.push_back(pop.best().fitness.objective);
        if (hooks.on_generation) hooks.on_generation(gen + 1, pop);
    }

    const Member& best = pop.best();
    const std::size_t P = instance.parcel_count();
    result.best_genome = best.genome;
    result.best_fitness = best.fitness;
    result.best_plan = best.plan;
    result.feasible = is_feasible(best.fitness, P);
    result.population_feasible = std::all_of(pop.members.begin(), pop.members.end(),
                                             [P](const Member& m) { return is_feasible(m.fitness, P); });
    result.generations_run = config.generations;
    return result;
}

}  // namespace blend
