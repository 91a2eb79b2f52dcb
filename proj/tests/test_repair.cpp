#include <cmath>
#include <random>

#include "blend/repair.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace blend;

TEST_CASE("normalize_rows divides by the row sum") {
    Genome g(1, 3);
    g(0, 0) = 2;
    g(0, 1) = 2;
    g(0, 2) = 4;
    const Genome n = normalize_rows(g);
    CHECK(n(0, 0) == 0.25);
    CHECK(n(0, 1) == 0.25);
    CHECK(n(0, 2) == 0.5);
}

TEST_CASE("normalize_rows leaves a normalized row alone") {
    Genome g(1, 4);
    g(0, 0) = 0.125;
    g(0, 1) = 0.375;
    g(0, 2) = 0.25;
    g(0, 3) = 0.25;
    const Genome n = normalize_rows(g);
    for (std::size_t s = 0; s < 4; ++s) CHECK(std::abs(n(0, s) - g(0, s)) <= 1e-15);
}

TEST_CASE("normalize_rows replaces a zero row by the uniform split") {
    Genome g(2, 7, 0.0);
    g(1, 3) = 1.0;
    const Genome n = normalize_rows(g);
    for (std::size_t s = 0; s < 7; ++s) CHECK(n(0, s) == 1.0 / 7.0);
    CHECK(n(1, 3) == 1.0);
}

TEST_CASE("normalize_rows is idempotent and scale invariant") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0), scale(0.01, 100.0);
    for (int i = 0; i < 1000; ++i) {
        Genome g(4, 7);
        for (double& v : g.flat()) v = unit(rng);
        const Genome once = normalize_rows(g);
        const Genome twice = normalize_rows(once);
        Genome scaled = g;
        const double a = scale(rng);
        for (double& v : scaled.flat()) v *= a;
        const Genome from_scaled = normalize_rows(scaled);
        for (std::size_t p = 0; p < 4; ++p) {
            double sum = 0.0;
            for (double v : once.row(p)) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(twice.flat()[j] == doctest::Approx(once.flat()[j]).epsilon(1e-14));
            CHECK(from_scaled.flat()[j] == doctest::Approx(once.flat()[j]).epsilon(1e-14));
        }
    }
}

TEST_CASE("concentrate_rate is the concentrate after one day") {
    const Instance inst = blend::testing::golden(1);
    const GradeMap g = inst.months[0].haul[2].grades;
    const ConcentrateRate rate = concentrate_rate(g, inst.factors);
    const double g_cu = g[Material::Cu], g_s = g[Material::S];
    const double r_cu = cu_recovery(g_cu, g_s, inst.factors);
    for (double d : {0.5, 1.0, 7.0}) {
        const double w = parcel_tonnage(d, g, inst.factors);
        const double k = concentrate(w * g_cu * r_cu, g_cu, g_s, inst.factors);
        CHECK(k == doctest::Approx(rate.zeta * d).epsilon(1e-12));
    }
}

TEST_CASE("concentrate_rate is zero when the tonnage bracket vanishes") {
    ProcessingFactors f;
    f.delta = 0.98;
    f.phi_base = 0.0;
    f.gamma1 = 7;
    f.gamma2 = 36;
    f.mu_cu1 = 2.5;
    GradeMap ones;
    for (Material m : kMaterials) ones[m] = 1.0;
    CHECK(concentrate_rate(ones, f).zeta == 0.0);
}

TEST_CASE("concentrate_rate matches the independent formula evaluation") {
    // Oracle blends from tests/oracles/straight_line.py (instance 1, Random(42)).
    const Instance inst = blend::testing::golden(1);
    const double rows[3][7] = {
        {0.18437764074488008, 0.007211809158334411, 0.07930424089022711, 0.06436244052963921, 0.21236023462194906,
         0.1951251578526451, 0.25725847620232506},
        {0.05842566283626757, 0.2835448928245132, 0.020024679923732115, 0.14693167843108962, 0.339614839333163,
         0.01783301628159032, 0.1336252303696442},
        {0.1792151498712662, 0.15027559276701352, 0.06078972940438578, 0.16249864085165602, 0.2232123007892324,
         0.0017921281415207073, 0.2222164581749253}};
    const double expected[] = {-8648.4268766329515, 107074.0582966441, 69118.052758137201};
    std::vector<GradeMap> stock;
    for (const auto& h : inst.months[0].haul) stock.push_back(h.grades);
    for (std::size_t p = 0; p < 3; ++p) {
        const GradeMap blend = parcel_grades(rows[p], stock);
        CHECK(concentrate_rate(blend, inst.factors).zeta == doctest::Approx(expected[p]).epsilon(1e-12));
    }
}

TEST_CASE("repair_duration finds the closed-form root") {
    const auto r = repair_duration({50000}, 750000, 30);
    CHECK(r.feasible);
    CHECK(std::abs(r.concentrate - 750000) <= 1.0);
    CHECK(r.duration == doctest::Approx(15.0).epsilon(1e-4));
    CHECK(r.concentrate == 50000 * r.duration);
}

TEST_CASE("repair_duration reports unreachable targets") {
    const auto r = repair_duration({10000}, 750000, 30);
    CHECK_FALSE(r.feasible);
    CHECK(r.duration == 30);
    CHECK(r.concentrate == 300000);

    const auto neg = repair_duration({-5.0}, 750000, 30);
    CHECK_FALSE(neg.feasible);
    CHECK(neg.duration == 0);
    CHECK(neg.concentrate == 0);
}

TEST_CASE("repair_duration returns zero for a zero target") {
    const auto r = repair_duration({50000}, 0, 30);
    CHECK(r.feasible);
    CHECK(r.duration == 0);
    CHECK(r.iterations == 0);
}

TEST_CASE("repair_duration properties on random rates") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> log_zeta(-3.0, 7.0), target(0.0, 1.0e6), month(1.0, 31.0);
    for (int i = 0; i < 20000; ++i) {
        const double zeta = std::pow(10.0, log_zeta(rng));
        const double K = target(rng);
        const double D = month(rng);
        const auto r = repair_duration({zeta}, K, D);
        CHECK(r.duration >= 0.0);
        CHECK(r.duration <= D);
        const double root = K / zeta;
        if (root > 0.0 && root <= D) {
            REQUIRE(r.feasible);
            CHECK(K - 1.0 <= zeta * r.duration);
            CHECK(zeta * r.duration <= K + 1.0);
            // Band half-width in days is 1/zeta, so log2(D zeta) halvings always land in it.
            const double bound = std::ceil(std::log2(std::max(D * zeta, 1.0))) + 1.0;
            CHECK(static_cast<double>(r.iterations) <= bound);
        } else if (zeta * D < K - 1.0) {
            CHECK_FALSE(r.feasible);
            CHECK(r.duration == D);
        }
        if (r.feasible) CHECK(std::abs(zeta * r.duration - K) <= 1.0);
    }
}
