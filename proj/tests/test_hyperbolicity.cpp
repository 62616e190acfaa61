#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "srb/hyperbolicity.hpp"
#include "srb/rng.hpp"
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

const double kCatChi = std::log((3.0 + std::sqrt(5.0)) / 2.0); // 0.9624...

} // namespace

TEST_CASE("solenoid lyapunov spectrum equals the cocycle diagonal") {
    SystemHandle sys = make_solenoid(SolenoidParams{0.5, 0.25, 0.25});
    LyapunovEstimate est = lyapunov_spectrum(sys, v3(0.1, 0.1, 1.0), 5000);
    REQUIRE(est.exponents.size() == 3);
    // Triangular jacobian with constant diagonal: the exponents are exact.
    CHECK(est.exponents[0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK(est.exponents[1] == doctest::Approx(std::log(0.25)).epsilon(1e-4));
    CHECK(est.exponents[2] == doctest::Approx(std::log(0.25)).epsilon(1e-4));
    CHECK(est.mean_log_det ==
          doctest::Approx(std::log(2.0 * 0.25 * 0.25)).epsilon(1e-12));
    CHECK_FALSE(est.truncated);
}

TEST_CASE("cat map lyapunov exponents are +- log((3+sqrt5)/2)") {
    SystemHandle sys = make_cat_map();
    LyapunovEstimate est = lyapunov_spectrum(sys, v2(0.21, 0.37), 20000);
    CHECK(est.exponents[0] == doctest::Approx(kCatChi).epsilon(1e-3));
    CHECK(est.exponents[1] == doctest::Approx(-kCatChi).epsilon(1e-3));
    CHECK(est.mean_log_det == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("unstable/stable direction estimates recover the cat eigenvectors") {
    SystemHandle sys = make_cat_map();
    Orbit orbit = iterate_orbit(sys, v2(0.13, 0.52), 60);
    Vec eu = estimate_unstable_direction(sys, orbit, 40);
    Vec es = estimate_stable_direction(sys, orbit, 40);
    Vec eig_u = v2(1.0, (std::sqrt(5.0) - 1.0) / 2.0).normalized();
    Vec eig_s = v2(1.0, -(std::sqrt(5.0) + 1.0) / 2.0).normalized();
    CHECK(splitting_angle(eu, eig_u) < 1e-8);
    CHECK(splitting_angle(es, eig_s) < 1e-8);
    CHECK(splitting_angle(es, eu) > 0.5); // genuinely transverse splitting
}

TEST_CASE("splitting angle and cone membership basics") {
    CHECK(splitting_angle(v2(1, 0), v2(0, 1)) == doctest::Approx(1.5707963267948966));
    CHECK(splitting_angle(v2(1, 0), v2(-3, 0)) == doctest::Approx(0.0));
    Cone K(v2(1.0, 0.0), 0.3);
    CHECK(cone_contains(K, v2(5.0, 0.5)));
    CHECK_FALSE(cone_contains(K, v2(1.0, 1.0)));
    CHECK_FALSE(cone_contains(K, v2(0.0, 1.0)));
    CHECK_THROWS_AS(cone_contains(K, v2(0.0, 0.0)), ZeroVector);
    CHECK_THROWS_AS(Cone(v2(0.0, 0.0), 0.3), ZeroVector);
}

TEST_CASE("cone extremal growth brackets the cat eigenvalues") {
    SystemHandle sys = make_cat_map();
    Vec x = v2(0.4, 0.4);
    Cone tight_u(v2(1.0, (std::sqrt(5.0) - 1.0) / 2.0), 1e-4);
    Cone tight_s(v2(1.0, -(std::sqrt(5.0) + 1.0) / 2.0), 1e-4);
    double lu = lambda_u(sys, tight_u, x);
    double ls = lambda_s(sys, tight_s, x);
    CHECK(lu == doctest::Approx(kCatChi).epsilon(1e-4));
    CHECK(ls == doctest::Approx(-kCatChi).epsilon(1e-4));
    // Widening the unstable cone can only lower the infimum.
    Cone wide_u(v2(1.0, (std::sqrt(5.0) - 1.0) / 2.0), 0.3);
    CHECK(lambda_u(sys, wide_u, x) <= lu + 1e-12);
}

TEST_CASE("cone invariance holds for the cat map default cones") {
    SystemHandle sys = make_cat_map();
    ConeField field;
    Cone cu(v2(1.0, (std::sqrt(5.0) - 1.0) / 2.0), 0.3);
    Cone cs(v2(1.0, -(std::sqrt(5.0) + 1.0) / 2.0), 0.3);
    field.unstable = [cu](const Vec&) { return cu; };
    field.stable = [cs](const Vec&) { return cs; };
    ConeViolationReport rep = check_cone_invariance(sys, field, 200, 7);
    CHECK(rep.samples == 200);
    CHECK(rep.unstable_violations == 0);
    CHECK(rep.stable_violations == 0);
    CHECK(rep.worst_unstable_margin > 0.0);
    CHECK(rep.worst_stable_margin > 0.0);
}

TEST_CASE("effective rates satisfy the defect and rate inequalities") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> alpha_dist(0.1, 1.0);
    for (int i = 0; i < 500; ++i) {
        double lu = u(rng), ls = u(rng), alpha = alpha_dist(rng);
        auto [delta, lambda] = effective_rates(lu, ls, alpha);
        CHECK(delta >= 0.0);
        CHECK(lambda <= lu - delta + 1e-15);
        CHECK(lambda <= -ls + 1e-15);
        if (ls <= lu) CHECK(delta == 0.0);
    }
    CHECK_THROWS_AS(effective_rates(1.0, 0.0, 0.0), ParameterOutOfRange);
    CHECK_THROWS_AS(effective_rates(1.0, 0.0, 1.5), ParameterOutOfRange);
}

TEST_CASE("effective hyperbolic times: fast scan equals brute force") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len_dist(1, 80);
    std::uniform_real_distribution<double> rate_dist(-0.5, 1.0);
    std::uniform_real_distribution<double> bar_dist(0.05, 0.6);
    for (int trial = 0; trial < 1000; ++trial) {
        int len = len_dist(rng);
        std::vector<double> rates(static_cast<std::size_t>(len));
        for (double& r : rates) r = rate_dist(rng);
        double bar = bar_dist(rng);
        CHECK(effective_hyperbolic_times(rates, bar) ==
              effective_hyperbolic_times_bruteforce(rates, bar));
    }
    CHECK_THROWS_AS(effective_hyperbolic_times({1.0}, 0.0), ParameterOutOfRange);
}

TEST_CASE("effective times on a constant-rate sequence") {
    // rate 1.0 everywhere, lambda_bar below it: every iterate is effective.
    std::vector<double> rates(50, 1.0);
    std::vector<int> times = effective_hyperbolic_times(rates, 0.5);
    REQUIRE(times.size() == 50);
    CHECK(times.front() == 1);
    CHECK(times.back() == 50);
    auto [upper, lower] = asymptotic_density(times, 50);
    CHECK(upper == 1.0);
    CHECK(lower == 1.0);
}

TEST_CASE("asymptotic density window") {
    CHECK(asymptotic_density({}, 100) == std::pair<double, double>{0.0, 0.0});
    std::vector<int> evens;
    for (int k = 2; k <= 100; k += 2) evens.push_back(k);
    auto [upper, lower] = asymptotic_density(evens, 100);
    CHECK(upper == doctest::Approx(0.5).epsilon(0.02));
    CHECK(lower == doctest::Approx(0.5).epsilon(0.02));
    CHECK(upper >= lower);
    CHECK_THROWS_AS(asymptotic_density({1}, 1), ParameterOutOfRange);
}

TEST_CASE("eh diagnostics on the cat map: uniform hyperbolicity") {
    SystemHandle sys = make_cat_map();
    ConeField field;
    Cone cu(v2(1.0, (std::sqrt(5.0) - 1.0) / 2.0), 0.01);
    Cone cs(v2(1.0, -(std::sqrt(5.0) + 1.0) / 2.0), 0.01);
    field.unstable = [cu](const Vec&) { return cu; };
    field.stable = [cs](const Vec&) { return cs; };
    Orbit orbit = iterate_orbit(sys, v2(0.31, 0.17), 400);
    HyperbolicityReport rep =
        eh_diagnostics(sys, orbit, field, 1.0, 0.5 * kCatChi, {0.5, 1.56});
    CHECK(rep.effective_time_density == 1.0);
    CHECK(rep.eh1_running_average == doctest::Approx(kCatChi).epsilon(0.01));
    CHECK(rep.domination_ratio_max < 1.0);
    for (std::size_t k = 0; k < rep.lambda.size(); ++k) {
        CHECK(rep.delta[k] >= 0.0);
        CHECK(rep.lambda[k] <= rep.lambda_u[k] - rep.delta[k] + 1e-12);
        CHECK(rep.lambda[k] <= -rep.lambda_s[k] + 1e-12);
        CHECK(rep.theta[k] >= 0.0);
    }
    // The eigendirections are orthogonal, so the cone gap sits at pi/2 - 0.02
    // at every step: below 1.56 always, below 0.5 never.
    CHECK(rep.eh2_profile.at(0.5) == 0.0);
    CHECK(rep.eh2_profile.at(1.56) == 1.0);

    std::string csv = report_rates_csv(rep);
    CHECK(csv.rfind("step,lambda_u,lambda_s,delta,lambda,theta,is_effective_time\n", 0) == 0);
    nlohmann::json j = report_to_json(rep);
    CHECK(j.at("effective_time_density").get<double>() == 1.0);
}

TEST_CASE("domination check is the verbatim inequality") {
    CHECK(check_domination(0.4, 1.0, 0.5));
    CHECK_FALSE(check_domination(0.5, 1.0, 0.5));
    CHECK_THROWS_AS(check_domination(-1.0, 1.0, 0.5), ParameterOutOfRange);
    CHECK_THROWS_AS(check_domination(0.4, 1.0, 1.0), ParameterOutOfRange);
}

TEST_CASE("nue averages and entropy formula arithmetic") {
    auto [cs, cu] = nue_averages({0.1, 0.3}, {1.0, 2.0, 3.0});
    CHECK(cs == doctest::Approx(0.2));
    CHECK(cu == doctest::Approx(2.0));
    CHECK_THROWS_AS(nue_averages({}, {1.0}), EmptyEnsemble);

    LyapunovEstimate a;
    a.exponents = {0.7, -0.2, 0.1};
    LyapunovEstimate b;
    b.exponents = {-0.5, -1.0};
    CHECK(entropy_formula_rhs({{a, 0.5}, {b, 0.5}}) == doctest::Approx(0.4));
    CHECK_THROWS_AS(entropy_formula_rhs({}), EmptyEnsemble);
}

TEST_CASE("regularity proxy levels") {
    RegularityProxy p = regularity_proxy({1.2, 1.1}, {0.8, 1.2});
    CHECK(p.C_n == doctest::Approx(1.2));
    CHECK(p.K_n == doctest::Approx(0.8));
    CHECK(p.level == 2); // C_n <= 2 and K_n >= 1/2
    RegularityProxy q = regularity_proxy({0.5}, {0.05});
    CHECK(q.level == 20); // forced up by the small splitting angle
}
