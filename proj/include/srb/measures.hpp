#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srb/hyperbolicity.hpp"
#include "srb/system.hpp"

namespace srb {

/// Box-partition empirical measure: the numerical carrier of the
/// push-forward sequences mu_n and nu_n.
struct GridHistogram {
    Box box;
    std::vector<int> resolution; // cells per axis
    std::vector<double> masses;  // flat, row-major over axes
    double total_mass = 0.0;

    GridHistogram() = default;
    GridHistogram(const Box& b, const std::vector<int>& res);

    int dimension() const { return static_cast<int>(resolution.size()); }
    std::size_t cell_count() const { return masses.size(); }

    /// Flat cell index, or -1 if the point is outside the box.
    long cell_index(const Vec& x) const;
    Vec cell_center(long flat) const;
    double cell_width(int axis) const {
        return box.width(axis) / resolution[axis];
    }

    void deposit(const Vec& x, double weight);
    void add(const GridHistogram& other);      // associative merge
    void normalize();                          // total_mass -> 1
    bool same_grid(const GridHistogram& other) const;

    /// Midpoint-rule integral of h against the histogram.
    double integrate(const std::function<double(const Vec&)>& h) const;

    /// L1 distance between two normalized histograms on the same grid.
    double l1_distance(const GridHistogram& other) const;
};

struct TestFunction {
    std::string name;
    std::function<double(const Vec&)> eval;
    double lipschitz = 0.0;
};

/// Finite surrogate for the C^1 observables quantified over in the basin
/// definition: coordinate monomials up to degree 2 plus the first
/// trigonometric modes per axis, scaled to sup-norm <= 1 on the box.
struct TestFunctionSuite {
    std::vector<TestFunction> functions;

    static TestFunctionSuite standard(const Box& box);
};

/// Sampled curve approximating a local unstable manifold, with exact
/// backward orbits stored from the forward construction.
struct LeafSegment {
    Vec base_point;                   // sample at the seed parameter t = 0
    int base_index = 0;
    std::vector<Vec> samples;         // ordered along the curve
    std::vector<Vec> tangents;        // unit, df-propagated from the seed segment
    std::vector<double> weights;      // trapezoid arc-length weights, sum = length
    std::vector<double> arc_length;   // cumulative, arc_length[0] = 0
    double length = 0.0;
    int n_history = 0;
    // backward_chains[i][k] = f^{-k}(samples[i]), k = 0..n_history
    std::vector<std::vector<Vec>> backward_chains;
    std::vector<std::vector<Vec>> backward_tangents;
};

struct Checkpoints {
    std::vector<int> steps;           // e.g. {n/4, n/2, n}
    std::vector<GridHistogram> histograms;
};

Checkpoints pushforward_lebesgue(const SystemHandle& sys, int n, int ensemble,
                                 const std::vector<int>& grid, std::uint64_t seed,
                                 int workers = 1);

Checkpoints pushforward_leaf(const SystemHandle& sys, const LeafSegment& leaf,
                             int n, const std::vector<int>& grid, int workers = 1);

double weak_star_distance(const GridHistogram& mu, const GridHistogram& nu,
                          const TestFunctionSuite& suite);

struct DefectEstimate {
    double value = 0.0;
    double error_bar = 0.0;
};

/// max_h |int h(f(x)) dmu - int h dmu| with the first integral probed by
/// per-cell Monte Carlo sampling.
DefectEstimate invariance_defect(const SystemHandle& sys, const GridHistogram& mu,
                                 const TestFunctionSuite& suite, int probe,
                                 std::uint64_t seed);

struct BirkhoffResult {
    double value = 0.0;
    bool truncated = false;
    int steps = 0;
};

BirkhoffResult birkhoff_average(const SystemHandle& sys, const Vec& x,
                                const std::function<double(const Vec&)>& h, int n);

/// Fraction of Lebesgue-sampled points whose Birkhoff averages match the
/// histogram integrals within tol for every function in the suite.
double basin_fraction(const SystemHandle& sys, const GridHistogram& mu,
                      const TestFunctionSuite& suite, int sample, int n,
                      double tol, std::uint64_t seed, int workers = 1);

LeafSegment construct_unstable_leaf(const SystemHandle& sys, const Vec& x_seed,
                                    double target_length, int n_grow,
                                    const Cone& cone,
                                    double seed_length = 1e-6,
                                    int samples_per_length = 512);

/// Reduce periodic axes into the trapping box (identity otherwise).
Vec wrap_to_box(const SystemHandle& sys, const Vec& x);

/// Uniform sample from the system domain, stream keyed by (seed, index).
Vec sample_domain_point(const SystemHandle& sys, std::uint64_t seed,
                        std::uint64_t index);

} // namespace srb
