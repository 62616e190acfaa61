#include "srb/hyperbolicity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "srb/rng.hpp"

namespace srb {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec generic_direction(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = 1.0 / std::sqrt(2.0 + i);
    v.normalize();
    return v;
}

double aligned_residual(const Vec& a, const Vec& b) {
    return std::min((a - b).norm(), (a + b).norm());
}

/// Any unit vector orthogonal to c.
Vec orthogonal_unit(const Vec& c) {
    int d = static_cast<int>(c.size());
    int j = 0;
    for (int i = 1; i < d; ++i) {
        if (std::abs(c[i]) < std::abs(c[j])) j = i;
    }
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    Vec u = e - c.dot(e) * c;
    u.normalize();
    return u;
}

} // namespace

Cone::Cone(const Vec& center, double angle) : half_angle(angle) {
    if (center.norm() == 0.0) throw ZeroVector("cone center must be nonzero");
    center_direction = center.normalized();
}

LyapunovEstimate lyapunov_spectrum(const SystemHandle& sys, const Vec& x0, int n,
                                   int renorm_every) {
    const int d = sys.dimension;
    Orbit orbit = iterate_orbit(sys, x0, n);
    LyapunovEstimate est;
    est.truncated = orbit.halt_reason != HaltReason::completed;
    const int steps = orbit.steps();
    est.n_steps = steps;
    if (steps == 0) throw OrbitHalted("orbit halted before the first step");

    Mat frame = Mat::Identity(d, d);
    Vec log_sums = Vec::Zero(d);
    double log_det_sum = 0.0;
    for (int k = 0; k < steps; ++k) {
        Mat J = sys.jacobian(orbit.points[k]);
        log_det_sum += std::log(std::abs(J.determinant()));
        frame = J * frame;
        if ((k + 1) % renorm_every == 0 || k + 1 == steps) {
            Eigen::HouseholderQR<Mat> qr(frame);
            Mat Q = qr.householderQ() * Mat::Identity(d, d);
            Mat R = Q.transpose() * frame;
            for (int i = 0; i < d; ++i) {
                log_sums[i] += std::log(std::abs(R(i, i)));
            }
            frame = Q;
            est.convergence_history.push_back(log_sums.maxCoeff() / (k + 1));
            if (est.convergence_history.size() > 64) {
                est.convergence_history.erase(est.convergence_history.begin());
            }
        }
    }
    est.exponents.resize(d);
    for (int i = 0; i < d; ++i) est.exponents[i] = log_sums[i] / steps;
    std::sort(est.exponents.rbegin(), est.exponents.rend());
    est.mean_log_det = log_det_sum / steps;
    return est;
}

Vec estimate_unstable_direction(const SystemHandle& sys, const Orbit& orbit_history,
                                int k_back, double tol) {
    const int m = orbit_history.steps();
    if (k_back < 1 || k_back > m) throw HistoryTooShort("k_back exceeds orbit length");
    Vec v = generic_direction(sys.dimension);
    double residual = 1.0;
    double log_growth = 0.0;
    for (int i = m - k_back; i < m; ++i) {
        Vec w = sys.jacobian(orbit_history.points[i]) * v;
        double norm = w.norm();
        if (norm == 0.0) throw NoDominantDirection("df image vanished");
        log_growth += std::log(norm);
        w /= norm;
        residual = aligned_residual(w, v);
        v = w;
    }
    if (residual > std::max(tol, 1e-6)) {
        throw NoDominantDirection("residual stagnated at " + std::to_string(residual));
    }
    if (log_growth / k_back <= 1e-12) {
        throw NoDominantDirection("no expansion along the orbit history");
    }
    return v;
}

Vec estimate_stable_direction(const SystemHandle& sys, const Orbit& orbit_future,
                              int k_fwd, double tol) {
    const int m = orbit_future.steps();
    if (k_fwd < 1 || k_fwd > m) throw HistoryTooShort("k_fwd exceeds orbit length");
    const int d = sys.dimension;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lus;
    lus.reserve(k_fwd);
    for (int i = 0; i < k_fwd; ++i) {
        lus.emplace_back(Eigen::MatrixXd(sys.jacobian(orbit_future.points[i])));
    }
    Vec w = generic_direction(d);
    double residual = 1.0;
    double sweep_growth = 0.0;
    for (int sweep = 0; sweep < 8; ++sweep) {
        Eigen::VectorXd u = w;
        // (df^k)^-T then (df^k)^-1: one power-iteration step of the inverse Gram.
        for (int i = 0; i < k_fwd; ++i) u = lus[i].transpose().solve(u);
        for (int i = k_fwd - 1; i >= 0; --i) u = lus[i].solve(u);
        double norm = u.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw NoDominantDirection("inverse cocycle degenerate");
        }
        sweep_growth = std::log(norm) / (2.0 * k_fwd);
        Vec next = u / norm;
        residual = aligned_residual(next, w);
        w = next;
        if (residual < tol && sweep > 0) break;
    }
    if (sweep_growth <= 1e-12) {
        throw NoDominantDirection("no contraction along the forward orbit");
    }
    if (residual > std::max(tol, 1e-6)) {
        throw NoDominantDirection("residual stagnated at " + std::to_string(residual));
    }
    return w;
}

double splitting_angle(const Vec& e_s, const Vec& e_u) {
    double c = std::abs(e_s.normalized().dot(e_u.normalized()));
    return std::acos(std::min(1.0, c));
}

bool cone_contains(const Cone& K, const Vec& v) {
    if (v.norm() == 0.0) throw ZeroVector("cone membership of the zero vector");
    return splitting_angle(v, K.center_direction) < K.half_angle;
}

ConeViolationReport check_cone_invariance(const SystemHandle& sys,
                                          const ConeField& field, int samples,
                                          std::uint64_t seed) {
    ConeViolationReport rep;
    rep.worst_unstable_margin = kPi;
    rep.worst_stable_margin = kPi;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int d = sys.dimension;
    for (int s = 0; s < samples; ++s) {
        auto rng = make_stream(seed, static_cast<std::uint64_t>(s));
        Vec x(d);
        bool found = false;
        for (int tries = 0; tries < 200 && !found; ++tries) {
            for (int i = 0; i < d; ++i) {
                x[i] = sys.trapping_region.lo[i] +
                       unit(rng) * sys.trapping_region.width(i);
            }
            found = sys.in_domain(x) &&
                    (!sys.is_singular() || sys.singularity_distance(x) > 1e-9) &&
                    sys.in_domain(sys.map(x));
        }
        if (!found) continue;
        Vec fx = sys.map(x);
        Mat J = sys.jacobian(x);

        auto random_orthogonal = [&](const Vec& c) {
            Vec r(d);
            for (int i = 0; i < d; ++i) r[i] = 2.0 * unit(rng) - 1.0;
            Vec u = r - c.dot(r) * c;
            double norm = u.norm();
            return norm > 1e-12 ? Vec(u / norm) : orthogonal_unit(c);
        };

        Cone Ku = field.unstable(x);
        Cone Ku_next = field.unstable(fx);
        double phi = (2.0 * unit(rng) - 1.0) * Ku.half_angle;
        Vec v = std::cos(phi) * Ku.center_direction +
                std::sin(phi) * random_orthogonal(Ku.center_direction);
        Vec Jv = J * v;
        double margin = Ku_next.half_angle - splitting_angle(Jv, Ku_next.center_direction);
        rep.worst_unstable_margin = std::min(rep.worst_unstable_margin, margin);
        if (margin <= 0.0) rep.unstable_violations++;

        // (H)(b) contrapositive: v outside K^s(x) must stay outside K^s(f(x)).
        Cone Ks = field.stable(x);
        Cone Ks_next = field.stable(fx);
        double gap = kPi / 2.0 - Ks.half_angle;
        double psi = Ks.half_angle + 1e-9 + unit(rng) * std::max(gap - 1e-9, 0.0);
        Vec u = std::cos(psi) * Ks.center_direction +
                std::sin(psi) * random_orthogonal(Ks.center_direction);
        Vec Ju = J * u;
        double smargin = splitting_angle(Ju, Ks_next.center_direction) - Ks_next.half_angle;
        rep.worst_stable_margin = std::min(rep.worst_stable_margin, smargin);
        if (smargin <= 0.0) rep.stable_violations++;

        rep.samples++;
    }
    return rep;
}

namespace {

/// Extremize log|J v| over the closed cone. `maximize` false -> infimum.
double cone_extremal_log_growth(const Mat& J, const Cone& cone, bool maximize,
                                int boundary_samples) {
    const int d = static_cast<int>(cone.center_direction.size());
    const Vec& c = cone.center_direction;
    const double a = cone.half_angle;
    auto value = [&J](const Vec& v) { return (J * v).norm(); };
    double best = value(c);
    auto consider = [&](double g) {
        best = maximize ? std::max(best, g) : std::min(best, g);
    };

    // Interior critical directions: singular directions of J inside the cone.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>
        eig(Eigen::MatrixXd(J.transpose() * J));
    for (int i = 0; i < d; ++i) {
        Vec dir = eig.eigenvectors().col(i);
        if (splitting_angle(dir, c) <= a) consider(value(dir));
    }

    if (d == 2) {
        Vec u = orthogonal_unit(c);
        auto at = [&](double phi) {
            return value(Vec(std::cos(phi) * c + std::sin(phi) * u));
        };
        consider(at(a));
        consider(at(-a));
    } else {
        Vec u1 = orthogonal_unit(c);
        Vec u2(3);
        u2 << c[1] * u1[2] - c[2] * u1[1],
              c[2] * u1[0] - c[0] * u1[2],
              c[0] * u1[1] - c[1] * u1[0];
        u2.normalize();
        auto at = [&](double t) {
            Vec v = std::cos(a) * c +
                    std::sin(a) * (std::cos(t) * u1 + std::sin(t) * u2);
            return value(v);
        };
        double best_t = 0.0, best_g = at(0.0);
        for (int k = 0; k < boundary_samples; ++k) {
            double t = 2.0 * kPi * k / boundary_samples;
            double g = at(t);
            if (maximize ? (g > best_g) : (g < best_g)) {
                best_g = g;
                best_t = t;
            }
        }
        // Golden-section refinement around the best boundary sample.
        double span = 2.0 * kPi / boundary_samples;
        double lo = best_t - span, hi = best_t + span;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = at(x1), f2 = at(x2);
        for (int it = 0; it < 48; ++it) {
            bool move_lo = maximize ? (f1 < f2) : (f1 > f2);
            if (move_lo) {
                lo = x1; x1 = x2; f1 = f2;
                x2 = lo + gr * (hi - lo); f2 = at(x2);
            } else {
                hi = x2; x2 = x1; f2 = f1;
                x1 = hi - gr * (hi - lo); f1 = at(x1);
            }
        }
        consider(at(0.5 * (lo + hi)));
        consider(best_g);
    }
    return std::log(best);
}

} // namespace

double lambda_u(const SystemHandle& sys, const Cone& cone_u, const Vec& x,
                int boundary_samples) {
    return cone_extremal_log_growth(sys.jacobian(x), cone_u, /*maximize=*/false,
                                    boundary_samples);
}

double lambda_s(const SystemHandle& sys, const Cone& cone_s, const Vec& x,
                int boundary_samples) {
    return cone_extremal_log_growth(sys.jacobian(x), cone_s, /*maximize=*/true,
                                    boundary_samples);
}

std::pair<double, double> effective_rates(double lam_u, double lam_s,
                                          double holder_alpha) {
    if (holder_alpha <= 0.0 || holder_alpha > 1.0) {
        throw ParameterOutOfRange("holder_alpha must lie in (0,1]");
    }
    double delta = std::max(0.0, lam_s - lam_u) / holder_alpha;
    double lambda = std::min(lam_u - delta, -lam_s);
    return {delta, lambda};
}

std::vector<int> effective_hyperbolic_times(const std::vector<double>& rate_seq,
                                            double lambda_bar) {
    if (lambda_bar <= 0.0) throw ParameterOutOfRange("lambda_bar must be positive");
    std::vector<int> times;
    // n is effective iff T_n >= max_{k<n} T_k, where T_i = S_i - lambda_bar*i.
    double S = 0.0;
    double prefix_max = 0.0; // T_0
    for (std::size_t n = 1; n <= rate_seq.size(); ++n) {
        S += rate_seq[n - 1];
        double T = S - lambda_bar * static_cast<double>(n);
        if (T >= prefix_max) times.push_back(static_cast<int>(n));
        prefix_max = std::max(prefix_max, T);
    }
    return times;
}

std::vector<int> effective_hyperbolic_times_bruteforce(
    const std::vector<double>& rate_seq, double lambda_bar) {
    if (lambda_bar <= 0.0) throw ParameterOutOfRange("lambda_bar must be positive");
    const int len = static_cast<int>(rate_seq.size());
    std::vector<double> S(len + 1, 0.0);
    for (int i = 0; i < len; ++i) S[i + 1] = S[i] + rate_seq[i];
    std::vector<int> times;
    for (int n = 1; n <= len; ++n) {
        bool ok = true;
        for (int k = 0; k < n && ok; ++k) {
            ok = S[n] - S[k] >= lambda_bar * (n - k);
        }
        if (ok) times.push_back(n);
    }
    return times;
}

std::pair<double, double> asymptotic_density(const std::vector<int>& times, int N) {
    if (N < 2) throw ParameterOutOfRange("horizon must be at least 2");
    double upper = 0.0, lower = 1.0;
    std::size_t idx = 0;
    int count = 0;
    // Window [1, M]: effective times are iterate indices starting at 1, so a
    // sequence where every iterate qualifies has density exactly 1.
    for (int M = 1; M <= N; ++M) {
        while (idx < times.size() && times[idx] <= M) {
            ++count;
            ++idx;
        }
        if (M >= N / 2) {
            double density = static_cast<double>(count) / M;
            upper = std::max(upper, density);
            lower = std::min(lower, density);
        }
    }
    return {upper, lower};
}

HyperbolicityReport eh_diagnostics(const SystemHandle& sys, const Orbit& orbit,
                                   const ConeField& field, double holder_alpha,
                                   double lambda_bar,
                                   const std::vector<double>& angle_thresholds) {
    const int n = orbit.steps();
    if (n < 100) throw HistoryTooShort("eh_diagnostics needs an orbit of length >= 100");
    HyperbolicityReport rep;
    rep.lambda_u.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Vec& x = orbit.points[k];
        Cone Ku = field.unstable(x);
        Cone Ks = field.stable(x);
        double lu = lambda_u(sys, Ku, x);
        double ls = lambda_s(sys, Ks, x);
        auto [delta, lam] = effective_rates(lu, ls, holder_alpha);
        double gap = splitting_angle(Ks.center_direction, Ku.center_direction) -
                     Ku.half_angle - Ks.half_angle;
        rep.lambda_u.push_back(lu);
        rep.lambda_s.push_back(ls);
        rep.delta.push_back(delta);
        rep.lambda.push_back(lam);
        rep.theta.push_back(std::max(0.0, gap));
        rep.domination_ratio_max =
            std::max(rep.domination_ratio_max, std::exp(ls - lu));
    }
    rep.eh1_running_average =
        std::accumulate(rep.lambda.begin(), rep.lambda.end(), 0.0) / n;

    if (lambda_bar <= 0.0) {
        // Default: half the EH1 average after burn-in.
        int burn = std::min(1000, n / 2);
        double tail = std::accumulate(rep.lambda.begin() + burn, rep.lambda.end(), 0.0) /
                      (n - burn);
        lambda_bar = 0.5 * tail;
        if (lambda_bar <= 0.0) lambda_bar = 1e-9;
    }
    rep.lambda_bar = lambda_bar;

    std::vector<double> expansion(n);
    for (int k = 0; k < n; ++k) expansion[k] = rep.lambda_u[k] - rep.delta[k];
    rep.effective_times = effective_hyperbolic_times(expansion, lambda_bar);
    rep.effective_time_density = asymptotic_density(rep.effective_times, n).first;

    for (double thr : angle_thresholds) {
        std::vector<int> below;
        for (int k = 0; k < n; ++k) {
            if (rep.theta[k] < thr) below.push_back(k + 1); // 1-based iterate index
        }
        rep.eh2_profile[thr] = asymptotic_density(below, n).first;
    }
    return rep;
}

bool check_domination(double df_s_norm, double df_u_conorm, double chi) {
    if (df_s_norm <= 0.0 || df_u_conorm <= 0.0) {
        throw ParameterOutOfRange("norms must be positive");
    }
    if (chi <= 0.0 || chi >= 1.0) throw ParameterOutOfRange("chi must lie in (0,1)");
    return df_s_norm < chi * df_u_conorm;
}

std::pair<double, double> nue_averages(const std::vector<double>& cs_log_rates,
                                       const std::vector<double>& cu_log_conorms) {
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) throw EmptyEnsemble("no rates supplied");
        return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    return {mean(cs_log_rates), mean(cu_log_conorms)};
}

double entropy_formula_rhs(
    const std::vector<std::pair<LyapunovEstimate, double>>& weighted_samples) {
    if (weighted_samples.empty()) throw EmptyEnsemble("entropy_formula_rhs");
    double total = 0.0;
    for (const auto& [est, weight] : weighted_samples) {
        double positive_sum = 0.0;
        for (double chi : est.exponents) {
            if (chi > 0.0) positive_sum += chi;
        }
        total += weight * positive_sum;
    }
    return total;
}

RegularityProxy regularity_proxy(const std::vector<double>& distortion_ratios,
                                 const std::vector<double>& splitting_angles) {
    RegularityProxy proxy;
    for (double r : distortion_ratios) proxy.C_n = std::max(proxy.C_n, r);
    proxy.K_n = splitting_angles.empty() ? 0.0 : kPi / 2.0;
    for (double a : splitting_angles) proxy.K_n = std::min(proxy.K_n, a);
    double needed = proxy.C_n;
    if (proxy.K_n > 0.0) needed = std::max(needed, 1.0 / proxy.K_n);
    proxy.level = std::max(1, static_cast<int>(std::ceil(needed)));
    return proxy;
}

nlohmann::json report_to_json(const HyperbolicityReport& rep) {
    nlohmann::json j;
    j["lambda_bar"] = rep.lambda_bar;
    j["eh1_running_average"] = rep.eh1_running_average;
    j["effective_time_density"] = rep.effective_time_density;
    j["effective_time_count"] = rep.effective_times.size();
    j["domination_ratio_max"] = rep.domination_ratio_max;
    nlohmann::json profile = nlohmann::json::array();
    for (const auto& [thr, density] : rep.eh2_profile) {
        profile.push_back({{"threshold", thr}, {"upper_density", density}});
    }
    j["eh2_profile"] = profile;
    j["n_steps"] = rep.lambda.size();
    return j;
}

std::string report_rates_csv(const HyperbolicityReport& rep) {
    std::ostringstream out;
    out.precision(17);
    out << "step,lambda_u,lambda_s,delta,lambda,theta,is_effective_time\n";
    std::size_t idx = 0;
    for (std::size_t k = 0; k < rep.lambda.size(); ++k) {
        int step = static_cast<int>(k) + 1;
        bool effective = false;
        while (idx < rep.effective_times.size() && rep.effective_times[idx] < step) ++idx;
        if (idx < rep.effective_times.size() && rep.effective_times[idx] == step) {
            effective = true;
        }
        out << step << "," << rep.lambda_u[k] << "," << rep.lambda_s[k] << ","
            << rep.delta[k] << "," << rep.lambda[k] << "," << rep.theta[k] << ","
            << (effective ? 1 : 0) << "\n";
    }
    return out.str();
}

} // namespace srb
