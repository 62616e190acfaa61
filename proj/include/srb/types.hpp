#pragma once

#include <Eigen/Dense>

namespace srb {

// Small fixed-capacity vectors/matrices: every system in the lab is 2- or
// 3-dimensional, so we cap the size at 4 and keep everything on the stack.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

/// Axis-aligned box, used for trapping regions and histogram supports.
struct Box {
    Vec lo;
    Vec hi;

    int dimension() const { return static_cast<int>(lo.size()); }

    bool contains(const Vec& x) const {
        for (int i = 0; i < x.size(); ++i) {
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        }
        return true;
    }

    double width(int axis) const { return hi[axis] - lo[axis]; }

    Vec center() const { return 0.5 * (lo + hi); }
};

} // namespace srb
