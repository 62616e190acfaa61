#pragma once

#include <string>
#include <vector>

#include "srb/measures.hpp"

namespace srb {

/// |df_x e_u| for a unit vector e_u: the one-dimensional unstable Jacobian.
double unstable_jacobian(const SystemHandle& sys, const Vec& x, const Vec& e_u);

struct RhoResult {
    double value = 1.0;
    int truncation_n = 0;
    double tail_bound = 0.0;   // bound on |log rho_inf - log rho_n|
    double contraction = 0.0;  // measured backward contraction rate
};

/// Finite product rho^u_n(y, z) = prod_{k=0}^{n-1}
///   Jac(df|E^u(f^{-k} z)) / Jac(df|E^u(f^{-k} y)),
/// evaluated on the exact backward chains stored in the leaf.
double rho_u_n(const SystemHandle& sys, const LeafSegment& leaf, int y_index,
               int z_index, int n);

/// Truncated limit with a geometric tail bound from the measured backward
/// contraction and the empirical Lipschitz constant of log Jac^u.
RhoResult rho_u_limit(const SystemHandle& sys, const LeafSegment& leaf,
                      int y_index, int z_index, double tol = 1e-10);

struct DensityProfile {
    std::vector<double> arc_length;
    std::vector<double> rho;   // rho^u(base, y), = 1 at the base sample
    std::vector<double> d;     // conditional density, quadrature sum = 1
    double normalizer = 0.0;   // int rho^u(base, y) dm^u over the leaf
};

DensityProfile conditional_density_profile(const SystemHandle& sys,
                                           const LeafSegment& leaf,
                                           double tol = 1e-10);

std::string profile_to_csv(const DensityProfile& profile);

/// Compare the mass nu puts near the leaf against the predicted conditional
/// density: L1 distance between the two arc-length bin distributions.
/// Throws InsufficientMass when less than 1% of nu lies within the band.
double absolute_continuity_check(const SystemHandle& sys, const LeafSegment& leaf,
                                 const GridHistogram& nu,
                                 const DensityProfile& profile, double band_width,
                                 int bins = 32);

} // namespace srb
