#pragma once

#include <nlohmann/json.hpp>

#include "srb/system.hpp"

namespace srb {

/// Smale-Williams solenoid on the solid torus D^2 x S^1:
///   f(x, y, theta) = (alpha x + a cos theta, beta y + a sin theta, 2 theta).
struct SolenoidParams {
    double a = 0.5;
    double alpha = 0.25;
    double beta = 0.25;
};

/// Geometric Lorenz return map on (-1,1)^2 with singularity line y = 0.
struct LorenzMapParams {
    double A = 0.5;
    double B = 0.25;
    double nu = 2.0;
    double nu0 = 0.75;
};

/// Lozi map f(x,y) = (1 + b y - a |x|, x) on (-c,c)^2, singularity line x = 0.
struct LoziParams {
    double a = 1.7;
    double b = 0.5;
    double c = 0.95;
};

/// Belykh map, piecewise affine on (-1,1)^2 with switching line y = k x.
struct BelykhParams {
    double lambda1 = 0.49;
    double lambda2 = 1.9;
    double mu1 = 0.49;
    double mu2 = 1.9;
    double k = 0.2;
};

/// Time-1 map of x' = psi(|x|) A x with A = diag(gamma, -beta) and
/// psi(r) = r^alpha near the origin: a hyperbolic fixed point made neutral.
struct NeutralSlowdownParams {
    double gamma = 1.0;
    double beta = 1.0;
    double alpha = 0.5;
    double r0 = 0.1;
    double r1 = 0.3;
    double integrator_step = 1e-3;
};

SystemHandle make_solenoid(const SolenoidParams& p);
SystemHandle make_lorenz_map(const LorenzMapParams& p);
SystemHandle make_lozi(const LoziParams& p);
SystemHandle make_belykh(const BelykhParams& p);
SystemHandle make_neutral_slowdown(const NeutralSlowdownParams& p);

/// Linear toral automorphism (x,y) -> (2x+y, x+y) mod 1. Not one of the
/// attractor examples; included as an analytic oracle whose SRB measure is
/// Lebesgue, with rho^u identically 1 and exponents +-log((3+sqrt 5)/2).
SystemHandle make_cat_map();

/// The interpolation profile psi used by the neutral slowdown model,
/// exposed for tests (monotone C^1, psi(r)=r^alpha for r<=r0, 1 for r>=r1).
double slowdown_profile(const NeutralSlowdownParams& p, double r);
double slowdown_profile_derivative(const NeutralSlowdownParams& p, double r);

/// Construct any named system from a JSON parameter record.
/// Known names: solenoid, lorenz_map, lozi, belykh, neutral_slowdown, cat_map.
SystemHandle make_system(const std::string& name, const nlohmann::json& params);

/// Parameter schemas and short references for every known system.
nlohmann::json list_systems();

} // namespace srb
