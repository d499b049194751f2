#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "mlhr/optimizer.hpp"

using namespace mlhr;
using namespace mlhr::optimizer;

namespace {

// Independent O(n^2) dominance filter used as the sorting oracle.
bool oracle_dominates(const std::vector<double>& a, const std::vector<double>& b) {
    bool strict = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] > b[k]) return false;
        if (a[k] < b[k]) strict = true;
    }
    return strict;
}

std::vector<std::vector<std::size_t>> oracle_fronts(ObjectiveRows pts) {
    std::vector<std::size_t> alive(pts.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
    std::vector<std::vector<std::size_t>> fronts;
    while (!alive.empty()) {
        std::vector<std::size_t> front, rest;
        for (std::size_t i : alive) {
            bool dominated = false;
            for (std::size_t j : alive)
                if (j != i && oracle_dominates(pts[j], pts[i])) {
                    dominated = true;
                    break;
                }
            (dominated ? rest : front).push_back(i);
        }
        fronts.push_back(front);
        alive = rest;
    }
    return fronts;
}

ObjectiveRows random_points(Rng& rng, std::size_t n, std::size_t m) {
    ObjectiveRows pts(n, std::vector<double>(m));
    for (auto& p : pts)
        for (double& v : p) v = rng.uniform();
    return pts;
}

std::size_t evals_to_reach(const std::vector<HistoryRow>& hist, double target) {
    for (const auto& row : hist)
        if (row.hypervolume >= target) return row.true_evals;
    return std::numeric_limits<std::size_t>::max();
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("non_dominated_sort basics") {
    const auto single = non_dominated_sort({{1.0, 2.0}});
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::vector<std::size_t>{0});

    const auto pair = non_dominated_sort({{1.0, 2.0}, {2.0, 1.0}});
    REQUIRE(pair.size() == 1);
    CHECK(pair[0].size() == 2);

    // A dominated point drops to the second front.
    const auto three = non_dominated_sort({{1.0, 2.0}, {2.0, 1.0}, {2.0, 2.0}});
    REQUIRE(three.size() == 2);
    CHECK(three[1] == std::vector<std::size_t>{2});
}

TEST_CASE("non_dominated_sort matches the brute-force oracle on 100 fixtures") {
    Rng rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        const ObjectiveRows pts = random_points(rng, 50, 2);
        const auto got = non_dominated_sort(pts);
        const auto want = oracle_fronts(pts);
        REQUIRE(got.size() == want.size());
        for (std::size_t f = 0; f < got.size(); ++f) {
            auto a = got[f];
            auto b = want[f];
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b);
        }
    }
}

TEST_CASE("fronts are invariant under objective-wise monotone maps") {
    Rng rng(7);
    const ObjectiveRows pts = random_points(rng, 30, 2);
    ObjectiveRows mapped = pts;
    for (auto& p : mapped) {
        p[0] = std::exp(p[0]);
        p[1] = 2.0 * p[1] + 5.0;
    }
    CHECK(non_dominated_sort(pts) == non_dominated_sort(mapped));
}

TEST_CASE("crowding distance: sentinels at the edges, equal gaps inside") {
    const ObjectiveRows front{{0.0, 3.0}, {1.0, 2.0}, {2.0, 1.0}, {3.0, 0.0}};
    const auto d = crowding_distance(front);
    CHECK(std::isinf(d[0]));
    CHECK(std::isinf(d[3]));
    CHECK(d[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    CHECK(std::isinf(crowding_distance({{1.0, 1.0}})[0]));
    const auto two = crowding_distance({{0.0, 1.0}, {1.0, 0.0}});
    CHECK(std::isinf(two[0]));
    CHECK(std::isinf(two[1]));
}

TEST_CASE("hypervolume_2d agrees with hand-computed unions") {
    CHECK(hypervolume_2d({{0.0, 0.0}}, 1.1, 1.1) == doctest::Approx(1.21).epsilon(1e-12));
    CHECK(hypervolume_2d({{0.2, 0.5}, {0.5, 0.2}}, 1.1, 1.1) ==
          doctest::Approx(0.72).epsilon(1e-12));
    // A point outside the reference corner adds nothing.
    CHECK(hypervolume_2d({{0.2, 0.5}, {0.5, 0.2}, {1.2, 0.1}}, 1.1, 1.1) ==
          doctest::Approx(0.72).epsilon(1e-12));
    // Dominated and duplicate points add nothing either.
    CHECK(hypervolume_2d({{0.2, 0.5}, {0.5, 0.2}, {0.6, 0.6}, {0.2, 0.5}}, 1.1, 1.1) ==
          doctest::Approx(0.72).epsilon(1e-12));
    CHECK(hypervolume_2d({}, 1.1, 1.1) == 0.0);
}

TEST_CASE("constraint_eval encodes the three design constraints") {
    const CandidateSummary base{10.0, 0.25, 4.0};

    // Identical candidate: the volume constraint is strict, so it trips.
    const auto same = constraint_eval(base, base, 0.01);
    REQUIRE(same.size() == 3);
    CHECK(same[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(same[1] == 0.0);
    CHECK(same[2] == 0.0);

    // Deep volume cut with matching area and better torque density: feasible.
    const CandidateSummary good{6.0, 0.25, 4.5};
    const auto ok = constraint_eval(good, base, 0.01);
    CHECK(ok == std::vector<double>{0.0, 0.0, 0.0});

    // Hand-checked fixtures across all three components.
    Rng rng(19);
    for (int rep = 0; rep < 10; ++rep) {
        CandidateSummary c;
        c.v_pm = rng.uniform(5.0, 15.0);
        c.a_eta = rng.uniform(0.0, 0.5);
        c.tpv = rng.uniform(2.0, 6.0);
        const auto v = constraint_eval(c, base, 0.01);
        CHECK(v[0] == std::max(0.0, c.v_pm - 10.0 * 0.99));
        CHECK(v[1] == std::max(0.0, 0.25 - c.a_eta));
        CHECK(v[2] == std::max(0.0, 4.0 - c.tpv));
    }
    CHECK_THROWS_AS(constraint_eval(base, base, 1.5), std::invalid_argument);
}

TEST_CASE("config validation") {
    Nsga2Config cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.pop_size = 21;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.p_mutation = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.elitism_rate = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("bundled benchmark evaluates to its closed form") {
    const Nsga2Problem p = zdt1_problem(8);
    const auto at_origin = *p.objectives(std::vector<double>(8, 0.0));
    CHECK(at_origin[0] == 0.0);
    CHECK(at_origin[1] == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> corner(8, 0.0);
    corner[0] = 1.0;
    const auto at_corner = *p.objectives(corner);
    CHECK(at_corner[0] == 1.0);
    CHECK(at_corner[1] == doctest::Approx(0.0).epsilon(1e-12));

    const auto mid = *p.objectives(std::vector<double>(8, 0.5));
    const double g = 1.0 + 9.0 * 0.5;
    CHECK(mid[1] == doctest::Approx(g * (1.0 - std::sqrt(0.5 / g))).epsilon(1e-12));
}

TEST_CASE("single-objective bowl converges near the analytic minimum") {
    Nsga2Problem p;
    p.dims = 2;
    p.n_objectives = 1;
    p.bounds = {{0.0, 1.0}, {0.0, 1.0}};
    p.objectives = [](const std::vector<double>& x) -> std::optional<std::vector<double>> {
        const double a = x[0] - 0.3, b = x[1] - 0.7;
        return std::vector<double>{a * a + b * b};
    };
    Nsga2Config cfg;
    cfg.pop_size = 20;
    cfg.max_generations = 30;
    cfg.seed = 5;
    const Nsga2Result r = nsga2_run(p, cfg, Sampler::kPlain);
    CHECK(!r.aborted);
    CHECK(r.history.back().best_cost <= 1e-2);
    CHECK(r.true_evals == 20u + 30u * 20u);
}

TEST_CASE("plain run: monotone archive hypervolume and exact reproducibility") {
    const Nsga2Problem p = zdt1_problem(8);
    Nsga2Config cfg;
    cfg.pop_size = 100;
    cfg.max_generations = 25;
    cfg.seed = 33;

    const Nsga2Result a = nsga2_run(p, cfg, Sampler::kPlain, 1);
    CHECK(!a.aborted);
    REQUIRE(a.history.size() == 26);
    for (std::size_t i = 1; i < a.history.size(); ++i) {
        CHECK(a.history[i].hypervolume >= a.history[i - 1].hypervolume);
        CHECK(a.history[i].true_evals > a.history[i - 1].true_evals);
    }
    CHECK(a.history.back().hypervolume > 0.0);
    CHECK(a.population.size() == 100);

    // Front members never dominate each other.
    for (const auto& m1 : a.front.members)
        for (const auto& m2 : a.front.members)
            CHECK(!oracle_dominates(m1.objectives, m2.objectives));

    const Nsga2Result b = nsga2_run(p, cfg, Sampler::kPlain, 1);
    const Nsga2Result c = nsga2_run(p, cfg, Sampler::kPlain, 2);
    REQUIRE(b.history.size() == a.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].hypervolume == b.history[i].hypervolume);
        CHECK(a.history[i].hypervolume == c.history[i].hypervolume);
        CHECK(a.history[i].best_cost == b.history[i].best_cost);
        CHECK(a.history[i].best_cost == c.history[i].best_cost);
    }
    REQUIRE(a.front.members.size() == c.front.members.size());
    for (std::size_t i = 0; i < a.front.members.size(); ++i)
        CHECK(a.front.members[i].objectives == c.front.members[i].objectives);
}

TEST_CASE("surrogate-screened sampler reaches the target with fewer evaluations") {
    const Nsga2Problem p = zdt1_problem(6);
    int wins = 0, reached = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Nsga2Config plain_cfg;
        plain_cfg.pop_size = 16;
        plain_cfg.max_generations = 25;
        plain_cfg.seed = seed;
        const Nsga2Result plain = nsga2_run(p, plain_cfg, Sampler::kPlain);

        Nsga2Config mlhr_cfg = plain_cfg;
        mlhr_cfg.max_generations = 40;
        mlhr_cfg.mlhr_batch = 4;
        const Nsga2Result assisted = nsga2_run(p, mlhr_cfg, Sampler::kMlhr);

        const double target = 0.95 * plain.history.back().hypervolume;
        const std::size_t ep = evals_to_reach(plain.history, target);
        const std::size_t em = evals_to_reach(assisted.history, target);
        if (em != std::numeric_limits<std::size_t>::max()) ++reached;
        if (em < ep) ++wins;
    }
    CHECK(reached >= 2);
    CHECK(wins >= 2);
}

TEST_CASE("evaluator failure aborts with partial history") {
    auto counter = std::make_shared<int>(0);
    Nsga2Problem p;
    p.dims = 2;
    p.n_objectives = 2;
    p.bounds = {{0.0, 1.0}, {0.0, 1.0}};
    p.objectives =
        [counter](const std::vector<double>& x) -> std::optional<std::vector<double>> {
        if (++*counter > 150) return std::nullopt;
        return std::vector<double>{x[0], 1.0 - x[0] + x[1]};
    };
    Nsga2Config cfg;
    cfg.pop_size = 20;
    cfg.max_generations = 50;
    cfg.seed = 2;
    const Nsga2Result r = nsga2_run(p, cfg, Sampler::kPlain, 1);
    CHECK(r.aborted);
    CHECK(r.history.size() >= 2);
    CHECK(r.history.size() < 51);
    CHECK(r.true_evals < 150);
}

}  // TEST_SUITE
