#include "srb/system.hpp"

#include <cmath>
#include <sstream>

namespace srb {

double SystemHandle::metric_distance(const Vec& a, const Vec& b) const {
    double s = 0.0;
    for (int i = 0; i < dimension; ++i) {
        double d = std::abs(a[i] - b[i]);
        if (axis_period.size() == dimension && axis_period[i] > 0.0) {
            double p = axis_period[i];
            d = std::fmod(d, p);
            d = std::min(d, p - d);
        }
        s += d * d;
    }
    return std::sqrt(s);
}

const char* halt_reason_name(HaltReason r) {
    switch (r) {
        case HaltReason::completed: return "completed";
        case HaltReason::hit_singularity_buffer: return "hit_singularity_buffer";
        case HaltReason::left_region: return "left_region";
    }
    return "unknown";
}

Vec evaluate_map(const SystemHandle& sys, const Vec& x) {
    if (sys.is_singular() && sys.singularity_distance(x) <= 1e-15) {
        throw SingularInput("point on or within machine tolerance of S+");
    }
    return sys.map(x);
}

Mat evaluate_jacobian(const SystemHandle& sys, const Vec& x) {
    if (sys.is_singular() && sys.singularity_distance(x) <= 1e-15) {
        // Let the branch test raise its own BoundaryInput when the point sits
        // exactly on a piecewise-definition boundary.
        (void)sys.jacobian(x);
        throw SingularInput("point on or within machine tolerance of S+");
    }
    return sys.jacobian(x);
}

Orbit iterate_orbit(const SystemHandle& sys, const Vec& x0, int n,
                    double halt_distance) {
    Orbit orbit;
    orbit.points.reserve(static_cast<std::size_t>(n) + 1);
    orbit.points.push_back(x0);
    Vec x = x0;
    for (int k = 0; k < n; ++k) {
        if (sys.is_singular() && sys.singularity_distance(x) < halt_distance) {
            orbit.halt_reason = HaltReason::hit_singularity_buffer;
            return orbit;
        }
        Vec next = sys.map(x);
        if (!sys.in_domain(next)) {
            orbit.halt_reason = HaltReason::left_region;
            return orbit;
        }
        orbit.points.push_back(next);
        x = next;
    }
    orbit.halt_reason = HaltReason::completed;
    return orbit;
}

double distance_to_singularity(const SystemHandle& sys, const Vec& x) {
    if (!sys.is_singular()) {
        throw NotSingularSystem("system '" + sys.name + "' is smooth");
    }
    return sys.singularity_distance(x);
}

Mat finite_difference_jacobian(const SystemHandle& sys, const Vec& x, double h) {
    const int d = sys.dimension;
    Mat J(d, d);
    for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        Vec fp = sys.map(xp);
        Vec fm = sys.map(xm);
        for (int i = 0; i < d; ++i) {
            double diff = fp[i] - fm[i];
            // Periodic output coordinates: take the short branch so the
            // difference quotient is not polluted by the wrap.
            if (sys.axis_period.size() == d && sys.axis_period[i] > 0.0) {
                double p = sys.axis_period[i];
                diff = std::remainder(diff, p);
            }
            J(i, j) = diff / (2.0 * h);
        }
    }
    return J;
}

std::string orbit_to_csv(const Orbit& orbit) {
    std::ostringstream out;
    out.precision(17);
    const int d = orbit.points.empty() ? 0 : static_cast<int>(orbit.points[0].size());
    out << "step";
    for (int i = 0; i < d; ++i) out << ",x" << i;
    out << ",halt_reason\n";
    for (std::size_t k = 0; k < orbit.points.size(); ++k) {
        out << k;
        for (int i = 0; i < d; ++i) out << "," << orbit.points[k][i];
        if (k + 1 == orbit.points.size()) {
            out << "," << halt_reason_name(orbit.halt_reason);
        } else {
            out << ",";
        }
        out << "\n";
    }
    return out.str();
}

} // namespace srb
