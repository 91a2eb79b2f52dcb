#include <cmath>
#include <optional>
#include <set>

#include "blend/de.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace blend;
using blend::testing::golden;

namespace {

Genome filled(double v) { return Genome(1, 4, v); }

Member member_with(const FitnessVector& f) {
    Member m;
    m.fitness = f;
    return m;
}

}  // namespace

TEST_CASE("child seeds are distinct and stable") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(child_seed(42, r));
    CHECK(seen.size() == 1000);
    CHECK(child_seed(42, 7) == child_seed(42, 7));
    CHECK(child_seed(42, 0) != child_seed(43, 0));
}

TEST_CASE("config validation") {
    DeConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.pop_size = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.f_scale = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.crossover_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.fitness.chance.alpha_cu = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = {};
    cfg.pop_size = 3;
    CHECK_THROWS_AS(init_population(golden(1), cfg), ConfigError);
    CHECK_THROWS_AS(run(golden(1), cfg), ConfigError);
}

TEST_CASE("initial population shape and range") {
    const Instance inst = golden(1);
    DeConfig cfg;
    cfg.seed = 5;
    const Population pop = init_population(inst, cfg);
    REQUIRE(pop.members.size() == 10);
    for (const Member& m : pop.members) {
        CHECK(m.genome.parcels() == 3);
        CHECK(m.genome.stockpiles() == 7);
        CHECK(m.genome.size() == 21);
        for (double x : m.genome.flat()) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
        for (std::size_t p = 0; p < 3; ++p) {
            double sum = 0.0;
            for (double x : m.genome.row(p)) sum += x;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
    for (const Member& m : pop.members) CHECK(lex_compare(m.fitness, pop.best().fitness) != Preference::First);
}

TEST_CASE("initial population is deterministic per seed") {
    const Instance inst = golden(2);
    DeConfig cfg;
    cfg.seed = 77;
    const Population a = init_population(inst, cfg);
    const Population b = init_population(inst, cfg);
    for (std::size_t i = 0; i < a.members.size(); ++i) {
        CHECK(a.members[i].genome == b.members[i].genome);
        CHECK(a.members[i].fitness == b.members[i].fitness);
    }
    cfg.seed = 78;
    CHECK_FALSE(init_population(inst, cfg).members[0].genome == a.members[0].genome);
}

TEST_CASE("mutation with F = 0 returns the target") {
    Genome x(2, 3);
    for (std::size_t j = 0; j < 6; ++j) x.flat()[j] = 0.1 * double(j);
    CHECK(mutate_target_to_best(x, Genome(2, 3, 0.9), Genome(2, 3, 0.3), Genome(2, 3, 0.7), 0.0) == x);
}

TEST_CASE("mutation arithmetic and clamping") {
    // 0.2 + 0.5 (0.4 - 0.2) + 0.5 (0.6 - 0.2) = 0.5
    const Genome v = mutate_target_to_best(filled(0.2), filled(0.4), filled(0.6), filled(0.2), 0.5);
    for (double x : v.flat()) CHECK(x == doctest::Approx(0.5).epsilon(1e-15));

    const Genome hi = mutate_target_to_best(filled(0.9), filled(1.0), filled(1.0), filled(0.0), 1.0);
    for (double x : hi.flat()) CHECK(x == 1.0);
    const Genome lo = mutate_target_to_best(filled(0.1), filled(0.0), filled(0.0), filled(1.0), 1.0);
    for (double x : lo.flat()) CHECK(x == 0.0);
}

TEST_CASE("crossover extremes") {
    Rng rng(1);
    const Genome x = Genome(3, 7, 0.25);
    const Genome v = Genome(3, 7, 0.75);
    CHECK(crossover_binomial(x, v, 1.0, 4, rng) == v);

    for (std::size_t j_rand = 0; j_rand < 21; ++j_rand) {
        const Genome u = crossover_binomial(x, v, 0.0, j_rand, rng);
        for (std::size_t j = 0; j < 21; ++j) CHECK(u.flat()[j] == (j == j_rand ? 0.75 : 0.25));
    }
    CHECK_THROWS_AS(crossover_binomial(x, v, 0.5, 21, rng), std::out_of_range);
}

TEST_CASE("crossover at Cr = 0.5 is deterministic and mixes") {
    const Genome x = Genome(3, 7, 0.25);
    const Genome v = Genome(3, 7, 0.75);
    Rng a(99), b(99);
    const Genome ua = crossover_binomial(x, v, 0.5, 0, a);
    const Genome ub = crossover_binomial(x, v, 0.5, 0, b);
    CHECK(ua == ub);
    std::size_t from_v = 0;
    for (double u : ua.flat()) from_v += u == 0.75;
    CHECK(from_v >= 1);
    CHECK(from_v < 21);
}

TEST_CASE("mutation indices are distinct from each other and the target") {
    Rng rng(3);
    for (std::size_t np : {4u, 5u, 10u, 30u}) {
        std::set<std::size_t> seen;
        for (int i = 0; i < 5000; ++i) {
            const std::size_t target = std::size_t(i) % np;
            const MutationIndices r = sample_mutation_indices(rng, np, target);
            CHECK(r.r1 < np);
            CHECK(r.r2 < np);
            CHECK(r.r1 != target);
            CHECK(r.r2 != target);
            CHECK(r.r1 != r.r2);
            seen.insert(r.r1);
            seen.insert(r.r2);
        }
        CHECK(seen.size() == np);
    }
}

TEST_CASE("selection") {
    const Member feasible_a = member_with({3, 0, 0, 0, 0, 1e8});
    const Member feasible_b = member_with({3, 0, 0, 0, 0, 1e8});
    CHECK(&select(feasible_a, feasible_b) == &feasible_b);

    const Member infeasible = member_with({3, 0, 0, 0.01, 0, 9e9});
    CHECK(&select(infeasible, feasible_a) == &feasible_a);
    CHECK(&select(feasible_a, infeasible) == &feasible_a);

    const Member better = member_with({3, 0, 0, 0, 0, 2e8});
    CHECK(&select(feasible_a, better) == &better);
    CHECK(&select(better, feasible_a) == &better);
}

TEST_CASE("zero generations returns the best initial member") {
    const Instance inst = golden(1);
    DeConfig cfg;
    cfg.seed = 11;
    cfg.generations = 0;
    const Population pop = init_population(inst, cfg);
    const RunResult r = run(inst, cfg);
    CHECK(r.generations_run == 0);
    CHECK(r.best_genome == pop.best().genome);
    CHECK(r.best_fitness == pop.best().fitness);
    REQUIRE(r.best_objective_history.size() == 1);
    CHECK(r.best_objective_history[0] == pop.best().fitness.objective);
}

TEST_CASE("run is deterministic per seed") {
    const Instance inst = golden(3);
    DeConfig cfg;
    cfg.seed = 8;
    cfg.generations = 50;
    const RunResult a = run(inst, cfg);
    const RunResult b = run(inst, cfg);
    CHECK(a.best_genome == b.best_genome);
    CHECK(a.best_fitness == b.best_fitness);
    CHECK(a.best_objective_history == b.best_objective_history);
    CHECK(a.best_objective_history.size() == 51);
}

TEST_CASE("the best member never gets worse and stays normalized") {
    const Instance inst = golden(1);
    DeConfig cfg;
    cfg.seed = 21;
    cfg.generations = 200;
    cfg.fitness.mode = FitnessMode::ChanceBoth;
    std::optional<FitnessVector> previous;
    std::vector<FitnessVector> previous_members;
    bool ok = true;
    RunHooks hooks;
    hooks.on_generation = [&](std::size_t, const Population& pop) {
        const FitnessVector best = pop.best().fitness;
        if (previous && lex_compare(best, *previous) == Preference::Second) ok = false;
        previous = best;
        for (std::size_t i = 0; i < pop.members.size(); ++i) {
            const Member& m = pop.members[i];
            if (!previous_members.empty() && lex_compare(m.fitness, previous_members[i]) == Preference::Second) {
                ok = false;
            }
            for (std::size_t p = 0; p < m.genome.parcels(); ++p) {
                double sum = 0.0;
                for (double x : m.genome.row(p)) sum += x;
                if (std::abs(sum - 1.0) > 1e-12) ok = false;
            }
        }
        previous_members.clear();
        for (const Member& m : pop.members) previous_members.push_back(m.fitness);
    };
    const RunResult r = run(inst, cfg, hooks);
    CHECK(ok);
    CHECK(r.best_fitness == *previous);
}

TEST_CASE("mutation indices seen by the run obey the discipline") {
    const Instance inst = golden(2);
    DeConfig cfg;
    cfg.seed = 4;
    cfg.pop_size = 6;
    cfg.generations = 100;
    std::size_t calls = 0;
    bool ok = true;
    std::size_t expected_target = 0;
    RunHooks hooks;
    hooks.on_mutation = [&](std::size_t target, MutationIndices r) {
        if (target != expected_target) ok = false;
        expected_target = (expected_target + 1) % cfg.pop_size;
        if (r.r1 == target || r.r2 == target || r.r1 == r.r2 || r.r1 >= cfg.pop_size || r.r2 >= cfg.pop_size) {
            ok = false;
        }
        ++calls;
    };
    run(inst, cfg, hooks);
    CHECK(ok);
    CHECK(calls == 600);
}

TEST_CASE("population feasibility flag agrees with the members") {
    const Instance inst = golden(1);
    DeConfig cfg;
    cfg.seed = 2;
    cfg.generations = 300;
    bool all_feasible = false;
    RunHooks hooks;
    hooks.on_generation = [&](std::size_t, const Population& pop) {
        all_feasible = true;
        for (const Member& m : pop.members) all_feasible = all_feasible && is_feasible(m.fitness, 3);
    };
    const RunResult r = run(inst, cfg, hooks);
    CHECK(r.population_feasible == all_feasible);
    CHECK(r.feasible == is_feasible(r.best_fitness, 3));
}
