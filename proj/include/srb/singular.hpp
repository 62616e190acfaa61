#pragma once

#include <cstdint>
#include <vector>

#include "srb/system.hpp"

namespace srb {

enum class CoreDirection { forward, backward, both };

/// Does the orbit of z stay at distance >= e^{-eps n} / ell from S+ for
/// n = 0..horizon, forward (D+), backward (D-), or both (D0)?
struct CoreMembership {
    double eps = 0.0;
    int ell = 1;
    int horizon = 0;
    bool verdict_forward = true;
    bool verdict_backward = true;
    bool verdict_core = true;
    int first_violation_step = -1; // -1 when every verdict holds
    bool backward_checked = false;
};

struct CoreConditionFit {
    int n = 0;
    std::vector<double> eps_grid;       // decreasing
    std::vector<double> mass_estimates; // shared-sample, exactly nested
    double fitted_C = 0.0;
    double fitted_q = 0.0;
    double q_lo = 0.0; // bootstrap 95% interval
    double q_hi = 0.0;
    int sample = 0;
};

/// Directions not requested are reported vacuously true; verdict_core is
/// always the conjunction of the two direction verdicts.
CoreMembership core_membership(const SystemHandle& sys, const Vec& z, double eps,
                               int ell, int horizon = 1000,
                               CoreDirection direction = CoreDirection::both);

/// Mass of {x : d(f^n x, S+) < eps} per grid entry, by uniform sampling with
/// one shared sample set across the whole grid; (C, q) from least squares on
/// log mass vs log eps over the nonzero entries.
CoreConditionFit core_condition_estimate(const SystemHandle& sys, int n,
                                         const std::vector<double>& eps_grid,
                                         int sample, std::uint64_t seed);

/// Empirical blow-up constants |d2f_x| <= C1 d(x, S+)^{-alpha1} from
/// finite-difference Hessian norms at points steered to log-uniform
/// singularity distances; (C2, alpha2) for the inverse where available.
SingularBlowupCheck blowup_constants(const SystemHandle& sys, int sample,
                                     std::uint64_t seed);

nlohmann::json core_fit_to_json(const SystemHandle& sys, const CoreConditionFit& fit,
                                std::uint64_t seed);

} // namespace srb
