#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srb/errors.hpp"
#include "srb/types.hpp"

namespace srb {

/// Empirical constants of the second-derivative blow-up bounds near the
/// singularity set, obtained by log-log regression (see singular module).
struct SingularBlowupCheck {
    double C1 = 0.0;
    double alpha1 = 0.0;
    double C2 = 0.0;
    double alpha2 = 0.0;
    bool forward_bounded = false;  // piecewise-affine branches: d2f == 0
    bool backward_available = false;
    bool backward_bounded = false;
};

/// Uniform abstraction over a concrete map: evaluation, differentiation,
/// singularity geometry, optional explicit inverse.
///
/// Handles are immutable after construction and safe to share across
/// concurrent workers; all member callables are pure.
struct SystemHandle {
    std::string name;
    int dimension = 0;
    Box trapping_region;
    nlohmann::json parameters;

    std::function<Vec(const Vec&)> map;
    std::function<Mat(const Vec&)> jacobian;

    // Euclidean distance to S+ = N union boundary(U); absent for smooth systems.
    std::function<double(const Vec&)> singularity_distance;

    // Explicit inverse branch, where the map admits a closed form.
    std::function<Vec(const Vec&)> inverse;

    // Extra domain constraint beyond the bounding box (e.g. the solenoid disc).
    std::function<bool(const Vec&)> in_domain_extra;

    // Per-axis period for toroidal coordinates (0 = not periodic).
    Vec axis_period;

    bool invertible_on_attractor = false;
    bool smooth = true;
    // Result of the numerical f(U \ N) subset U check done at construction.
    bool trapping_verified = false;

    bool is_singular() const { return static_cast<bool>(singularity_distance); }

    bool in_domain(const Vec& x) const {
        if (!trapping_region.contains(x)) return false;
        if (in_domain_extra && !in_domain_extra(x)) return false;
        return true;
    }

    /// Distance respecting periodic axes (used by histogram/leaf geometry).
    double metric_distance(const Vec& a, const Vec& b) const;
};

enum class HaltReason { completed, hit_singularity_buffer, left_region };

const char* halt_reason_name(HaltReason r);

struct Orbit {
    std::vector<Vec> points;
    HaltReason halt_reason = HaltReason::completed;
    std::uint64_t start_seed = 0;

    int steps() const { return static_cast<int>(points.size()) - 1; }
};

/// f(x). Throws SingularInput within machine tolerance of the singularity set.
Vec evaluate_map(const SystemHandle& sys, const Vec& x);

/// Analytic Jacobian df_x. Throws SingularInput / BoundaryInput on the
/// piecewise-definition boundaries of Lozi and Belykh.
Mat evaluate_jacobian(const SystemHandle& sys, const Vec& x);

/// Iterate up to n steps, recording up to n+1 points. Halts early (as a
/// result, not an error) when the singularity buffer is entered or the next
/// point leaves the trapping region.
Orbit iterate_orbit(const SystemHandle& sys, const Vec& x0, int n,
                    double halt_distance = 1e-12);

/// Exact closed-form distance to S+. Throws NotSingularSystem for smooth maps.
double distance_to_singularity(const SystemHandle& sys, const Vec& x);

/// Central finite-difference Jacobian, the oracle for the analytic one.
Mat finite_difference_jacobian(const SystemHandle& sys, const Vec& x,
                               double h = 1e-5);

/// CSV export: header `step,x0,...,x{d-1},halt_reason`.
std::string orbit_to_csv(const Orbit& orbit);

} // namespace srb
