#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "srb/measures.hpp"
#include "srb/systems.hpp"

using namespace srb;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

Box unit_box2() {
    return {v2(0.0, 0.0), v2(1.0, 1.0)};
}

GridHistogram random_counts(const Box& box, const std::vector<int>& res,
                            std::uint64_t seed) {
    GridHistogram h(box, res);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) h.deposit(v2(u(rng), u(rng)), 1.0);
    return h;
}

} // namespace

TEST_CASE("grid histogram indexing roundtrip") {
    GridHistogram h(unit_box2(), {8, 8});
    CHECK(h.cell_count() == 64);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vec x = v2(u(rng), u(rng));
        long flat = h.cell_index(x);
        REQUIRE(flat >= 0);
        Vec c = h.cell_center(flat);
        CHECK(std::abs(c[0] - x[0]) <= 0.5 * h.cell_width(0) + 1e-15);
        CHECK(std::abs(c[1] - x[1]) <= 0.5 * h.cell_width(1) + 1e-15);
    }
    CHECK(h.cell_index(v2(1.5, 0.5)) == -1);
    // Depositing outside the box is a no-op.
    h.deposit(v2(2.0, 2.0), 1.0);
    CHECK(h.total_mass == 0.0);
}

TEST_CASE("histogram merge is associative bit-exactly on count data") {
    Box box = unit_box2();
    GridHistogram a = random_counts(box, {16, 16}, 1);
    GridHistogram b = random_counts(box, {16, 16}, 2);
    GridHistogram c = random_counts(box, {16, 16}, 3);

    GridHistogram left = a;
    left.add(b);
    left.add(c); // (a + b) + c

    GridHistogram bc = b;
    bc.add(c);
    GridHistogram right = a;
    right.add(bc); // a + (b + c)

    CHECK(left.total_mass == right.total_mass);
    for (std::size_t i = 0; i < left.masses.size(); ++i) {
        CHECK(left.masses[i] == right.masses[i]);
    }

    GridHistogram other(box, {8, 8});
    CHECK_THROWS_AS(left.add(other), GridMismatch);
    CHECK_THROWS_AS(left.l1_distance(other), GridMismatch);
}

TEST_CASE("histogram normalization and integration") {
    GridHistogram h(unit_box2(), {32, 32});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 4000; ++i) h.deposit(v2(u(rng), u(rng)), 1.0);
    double mass_before = h.total_mass;
    CHECK(mass_before == 4000.0);
    h.normalize();
    CHECK(h.total_mass == 1.0);
    double sum = 0.0;
    for (double m : h.masses) sum += m;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    // Midpoint integration of x0 against the exactly uniform histogram.
    GridHistogram uniform(unit_box2(), {32, 32});
    for (std::size_t c = 0; c < uniform.masses.size(); ++c) uniform.masses[c] = 1.0;
    uniform.total_mass = static_cast<double>(uniform.cell_count());
    double integral = uniform.integrate([](const Vec& x) { return x[0]; });
    CHECK(integral == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l1 distance of disjoint histograms is 2") {
    GridHistogram a(unit_box2(), {4, 4});
    GridHistogram b(unit_box2(), {4, 4});
    a.deposit(v2(0.1, 0.1), 3.0);
    b.deposit(v2(0.9, 0.9), 7.0);
    CHECK(a.l1_distance(b) == doctest::Approx(2.0));
    CHECK(a.l1_distance(a) == 0.0);
}

TEST_CASE("standard suite: counts and sup-norm bound") {
    TestFunctionSuite s2 = TestFunctionSuite::standard(unit_box2());
    CHECK(s2.functions.size() == 9); // 4 monomials + 1 cross + 4 trig
    Box box3{v3(-1.0, -1.0, 0.0), v3(1.0, 1.0, 6.28)};
    TestFunctionSuite s3 = TestFunctionSuite::standard(box3);
    CHECK(s3.functions.size() == 15); // 6 + 3 + 6

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vec x = v3(-1.0 + 2.0 * u(rng), -1.0 + 2.0 * u(rng), 6.28 * u(rng));
        for (const TestFunction& f : s3.functions) {
            CHECK(std::abs(f.eval(x)) <= 1.0 + 1e-12);
            CHECK(f.lipschitz > 0.0);
        }
    }
}

TEST_CASE("weak-star distance basics") {
    TestFunctionSuite suite = TestFunctionSuite::standard(unit_box2());
    GridHistogram a = random_counts(unit_box2(), {16, 16}, 4);
    a.normalize();
    CHECK(weak_star_distance(a, a, suite) == 0.0);
    GridHistogram b(unit_box2(), {8, 8});
    CHECK_THROWS_AS(weak_star_distance(a, b, suite), GridMismatch);
}

TEST_CASE("birkhoff average matches a hand-rolled orbit sum") {
    SystemHandle sys = make_cat_map();
    auto h = [](const Vec& x) { return std::sin(6.283185307179586 * x[0]) + x[1]; };
    Vec x0 = v2(0.123, 0.456);
    BirkhoffResult res = birkhoff_average(sys, x0, h, 50);
    double sum = 0.0;
    Vec p = x0;
    for (int k = 0; k < 50; ++k) {
        sum += h(p);
        p = sys.map(p);
    }
    CHECK(res.value == doctest::Approx(sum / 50.0).epsilon(1e-14));
    CHECK(res.steps == 50);
    CHECK_FALSE(res.truncated);

    // Constant observables average to themselves exactly.
    BirkhoffResult c = birkhoff_average(sys, x0, [](const Vec&) { return 0.25; }, 7);
    CHECK(c.value == 0.25);
}

TEST_CASE("push-forward checkpoints, mass, and degenerate ensembles") {
    SystemHandle sys = make_cat_map();
    Checkpoints cps = pushforward_lebesgue(sys, 40, 300, {16, 16}, 5);
    REQUIRE(cps.steps == std::vector<int>{10, 20, 40});
    for (const GridHistogram& h : cps.histograms) {
        CHECK(h.total_mass == 1.0);
        double sum = 0.0;
        for (double m : h.masses) sum += m;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(pushforward_lebesgue(sys, 40, 0, {16, 16}, 5), EmptyEnsemble);
    CHECK_THROWS_AS(pushforward_lebesgue(sys, 0, 10, {16, 16}, 5), EmptyEnsemble);

    // Nearly every slowdown orbit escapes within a few steps.
    SystemHandle ns = make_neutral_slowdown(NeutralSlowdownParams{});
    CHECK_THROWS_AS(pushforward_lebesgue(ns, 40, 64, {16, 16}, 5), DegenerateEnsemble);
}

TEST_CASE("push-forward is deterministic and worker-count independent") {
    SystemHandle sys = make_cat_map();
    Checkpoints a = pushforward_lebesgue(sys, 30, 2500, {16, 16}, 42, 1);
    Checkpoints b = pushforward_lebesgue(sys, 30, 2500, {16, 16}, 42, 3);
    Checkpoints c = pushforward_lebesgue(sys, 30, 2500, {16, 16}, 43, 1);
    for (std::size_t k = 0; k < a.histograms.size(); ++k) {
        CHECK(a.histograms[k].masses == b.histograms[k].masses);
    }
    // A different seed must actually change the ensemble.
    CHECK(a.histograms.back().masses != c.histograms.back().masses);
}

TEST_CASE("invariance defect of the exact cat SRB measure is small") {
    SystemHandle sys = make_cat_map();
    TestFunctionSuite suite = TestFunctionSuite::standard(sys.trapping_region);
    GridHistogram uniform(sys.trapping_region, {32, 32});
    for (std::size_t c = 0; c < uniform.masses.size(); ++c) uniform.masses[c] = 1.0;
    uniform.total_mass = static_cast<double>(uniform.cell_count());
    DefectEstimate defect = invariance_defect(sys, uniform, suite, 8, 77);
    CHECK(defect.value < 0.05);
    CHECK(defect.error_bar > 0.0);
    CHECK(defect.error_bar < 0.05);
}

TEST_CASE("basin fraction of the exact cat SRB measure") {
    SystemHandle sys = make_cat_map();
    TestFunctionSuite suite = TestFunctionSuite::standard(sys.trapping_region);
    GridHistogram uniform(sys.trapping_region, {32, 32});
    for (std::size_t c = 0; c < uniform.masses.size(); ++c) uniform.masses[c] = 1.0;
    uniform.total_mass = static_cast<double>(uniform.cell_count());
    // tol is ~6 sigma of the Birkhoff fluctuation at n = 2000.
    double fraction = basin_fraction(sys, uniform, suite, 50, 2000, 0.08, 13);
    CHECK(fraction == 1.0);
    CHECK_THROWS_AS(basin_fraction(sys, uniform, suite, 0, 10, 0.1, 13), EmptySample);
}

TEST_CASE("leaf construction along the cat unstable direction") {
    SystemHandle sys = make_cat_map();
    Vec eig_u = v2(1.0, (std::sqrt(5.0) - 1.0) / 2.0).normalized();
    Cone cone(eig_u, 0.3);
    LeafSegment leaf = construct_unstable_leaf(sys, v2(0.2, 0.3), 0.5, 16, cone);

    REQUIRE(leaf.samples.size() >= 2);
    CHECK(leaf.n_history == 16);
    CHECK(leaf.length == doctest::Approx(0.5).epsilon(0.1));
    CHECK(leaf.base_index >= 0);
    CHECK((leaf.base_point - leaf.samples[static_cast<std::size_t>(leaf.base_index)])
              .norm() == 0.0);

    double weight_sum = 0.0;
    for (double w : leaf.weights) weight_sum += w;
    CHECK(weight_sum == doctest::Approx(leaf.length).epsilon(1e-12));

    for (std::size_t i = 1; i < leaf.arc_length.size(); ++i) {
        CHECK(leaf.arc_length[i] > leaf.arc_length[i - 1]);
    }
    // df-propagated tangents collapse onto the unstable eigendirection.
    for (const Vec& t : leaf.tangents) {
        CHECK(splitting_angle(t, eig_u) < 1e-6);
    }
    // Backward chains really are backward orbits and contract uniformly.
    const auto& chain = leaf.backward_chains.front();
    REQUIRE(chain.size() == 17);
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
        CHECK(sys.metric_distance(Vec(sys.map(chain[k + 1])), chain[k]) < 1e-12);
    }
    double sep0 = sys.metric_distance(leaf.backward_chains.front()[0],
                                      leaf.backward_chains.back()[0]);
    double sep16 = sys.metric_distance(leaf.backward_chains.front()[16],
                                       leaf.backward_chains.back()[16]);
    CHECK(sep16 < 0.01 * sep0);

    CHECK_THROWS_AS(construct_unstable_leaf(sys, v2(5.0, 5.0), 0.5, 16, cone),
                    LeafConstructionFailed);
}

TEST_CASE("leaf push-forward conserves mass and matches across workers") {
    SystemHandle sys = make_cat_map();
    Vec eig_u = v2(1.0, (std::sqrt(5.0) - 1.0) / 2.0).normalized();
    LeafSegment leaf = construct_unstable_leaf(sys, v2(0.2, 0.3), 0.5, 14, Cone(eig_u, 0.3));
    Checkpoints a = pushforward_leaf(sys, leaf, 40, {16, 16}, 1);
    Checkpoints b = pushforward_leaf(sys, leaf, 40, {16, 16}, 4);
    for (std::size_t k = 0; k < a.histograms.size(); ++k) {
        CHECK(a.histograms[k].total_mass == 1.0);
        CHECK(a.histograms[k].masses == b.histograms[k].masses);
    }
    LeafSegment empty;
    CHECK_THROWS_AS(pushforward_leaf(sys, empty, 10, {16, 16}), InvalidLeaf);
}

TEST_CASE("domain sampling and box wrapping") {
    SystemHandle sol = make_solenoid(SolenoidParams{});
    for (std::uint64_t i = 0; i < 50; ++i) {
        Vec x = sample_domain_point(sol, 21, i);
        CHECK(sol.in_domain(x));
        Vec y = sample_domain_point(sol, 21, i);
        CHECK((x - y).norm() == 0.0); // streams are pure functions of (seed, index)
    }
    Vec wrapped = wrap_to_box(sol, v3(0.1, 0.2, 7.0));
    CHECK(wrapped[2] == doctest::Approx(7.0 - 6.283185307179586).epsilon(1e-12));
    CHECK(wrapped[0] == 0.1);
}
