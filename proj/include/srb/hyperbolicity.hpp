#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "srb/system.hpp"

namespace srb {

struct LyapunovEstimate {
    std::vector<double> exponents;        // sorted descending, per unit time
    int n_steps = 0;
    std::vector<double> convergence_history; // tail of running top-exponent estimates
    bool truncated = false;               // orbit halted before the requested n
    double mean_log_det = 0.0;            // average log|det df| along the orbit
};

/// Open cone around a center line: v in K iff angle(v, span E) < half_angle.
struct Cone {
    Vec center_direction; // unit
    double half_angle = 0.0;

    Cone() = default;
    Cone(const Vec& center, double angle);
};

struct ConeField {
    std::function<Cone(const Vec&)> stable;
    std::function<Cone(const Vec&)> unstable;
};

struct ConeViolationReport {
    int samples = 0;
    int unstable_violations = 0;
    int stable_violations = 0;
    double worst_unstable_margin = 0.0; // min over samples of (half_angle - angle)
    double worst_stable_margin = 0.0;
};

struct HyperbolicityReport {
    std::vector<double> lambda_u;  // per step, log rates
    std::vector<double> lambda_s;
    std::vector<double> delta;     // defect from domination
    std::vector<double> lambda;    // effective rate min(lambda_u - delta, -lambda_s)
    std::vector<double> theta;     // cone gap angle per step
    std::vector<int> effective_times;
    double lambda_bar = 0.0;
    double eh1_running_average = 0.0;
    std::map<double, double> eh2_profile; // angle threshold -> upper density
    double effective_time_density = 0.0;
    double domination_ratio_max = 0.0;    // max exp(lambda_s - lambda_u)
};

struct RegularityProxy {
    double C_n = 1.0;  // finite-time distortion constant
    double K_n = 0.0;  // minimal splitting angle seen
    int level = 1;     // smallest l with C_n <= l and K_n >= 1/l
};

/// Benettin-style exponent estimation: push an orthonormal frame through df
/// along the orbit, re-orthonormalize every `renorm_every` steps via QR, and
/// average the log diagonal growth factors.
LyapunovEstimate lyapunov_spectrum(const SystemHandle& sys, const Vec& x0, int n,
                                   int renorm_every = 10);

/// Dominant expanding direction at the final point of `orbit_history`,
/// from pushing a generic vector through df along the last k_back steps.
/// Throws NoDominantDirection when the residual stagnates (e.g. isometries).
Vec estimate_unstable_direction(const SystemHandle& sys, const Orbit& orbit_history,
                                int k_back, double tol = 1e-10);

/// Most contracted direction at the first point of `orbit_future`: power
/// iteration on the inverse Gram cocycle (df^n)^-1 (df^n)^-T over forward steps.
Vec estimate_stable_direction(const SystemHandle& sys, const Orbit& orbit_future,
                              int k_fwd, double tol = 1e-10);

/// Angle in [0, pi/2] between the lines spanned by two unit vectors.
double splitting_angle(const Vec& e_s, const Vec& e_u);

bool cone_contains(const Cone& K, const Vec& v);

ConeViolationReport check_cone_invariance(const SystemHandle& sys,
                                          const ConeField& field, int samples,
                                          std::uint64_t seed);

/// inf / sup of log |df_x v| over unit vectors in the closed cone, by
/// boundary sampling plus golden-section refinement (and interior critical
/// directions from the singular vectors of df_x).
double lambda_u(const SystemHandle& sys, const Cone& cone_u, const Vec& x,
                int boundary_samples = 720);
double lambda_s(const SystemHandle& sys, const Cone& cone_s, const Vec& x,
                int boundary_samples = 720);

/// Defect from domination and effective rate:
///   delta = (1/alpha) max(0, lambda_s - lambda_u),
///   lambda = min(lambda_u - delta, -lambda_s).
std::pair<double, double> effective_rates(double lam_u, double lam_s,
                                          double holder_alpha);

/// {n : sum_{j=k}^{n-1} rate_j >= lambda_bar (n-k) for all 0 <= k < n},
/// computed in O(n) by a prefix-maximum scan of S_i - lambda_bar * i.
std::vector<int> effective_hyperbolic_times(const std::vector<double>& rate_seq,
                                            double lambda_bar);

/// O(n^2) evaluation straight from the definition; test oracle.
std::vector<int> effective_hyperbolic_times_bruteforce(
    const std::vector<double>& rate_seq, double lambda_bar);

/// Finite-horizon proxy for limsup/liminf densities: running extrema of
/// (1/M) #(set in [0,M)) over M in [N/2, N].
std::pair<double, double> asymptotic_density(const std::vector<int>& times, int N);

HyperbolicityReport eh_diagnostics(const SystemHandle& sys, const Orbit& orbit,
                                   const ConeField& field, double holder_alpha,
                                   double lambda_bar,
                                   const std::vector<double>& angle_thresholds);

/// Domination inequality |df|E^cs| < chi |df|E^cu^-1|^-1, verbatim.
bool check_domination(double df_s_norm, double df_u_conorm, double chi);

/// Finite-horizon Birkhoff averages of the supplied per-step log rates.
std::pair<double, double> nue_averages(const std::vector<double>& cs_log_rates,
                                       const std::vector<double>& cu_log_conorms);

/// Weighted ensemble average of the sums of positive exponents.
double entropy_formula_rhs(
    const std::vector<std::pair<LyapunovEstimate, double>>& weighted_samples);

/// Finite-time regularity level from per-point distortion ratios and
/// splitting angles.
RegularityProxy regularity_proxy(const std::vector<double>& distortion_ratios,
                                 const std::vector<double>& splitting_angles);

nlohmann::json report_to_json(const HyperbolicityReport& report);
std::string report_rates_csv(const HyperbolicityReport& report);

} // namespace srb
