#include "srb/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace srb {

double unstable_jacobian(const SystemHandle& sys, const Vec& x, const Vec& e_u) {
    double n = e_u.norm();
    if (!(n > 0.0)) throw ZeroVector("unstable direction is zero");
    return (sys.jacobian(x) * (e_u / n)).norm();
}

namespace {

void check_indices(const LeafSegment& leaf, int y_index, int z_index) {
    const int m = static_cast<int>(leaf.samples.size());
    if (y_index < 0 || y_index >= m || z_index < 0 || z_index >= m) {
        throw InvalidLeaf("sample index outside the leaf");
    }
}

double log_factor(const SystemHandle& sys, const LeafSegment& leaf, int y_index,
                  int z_index, int k) {
    const auto& cy = leaf.backward_chains[static_cast<std::size_t>(y_index)];
    const auto& cz = leaf.backward_chains[static_cast<std::size_t>(z_index)];
    const auto& ty = leaf.backward_tangents[static_cast<std::size_t>(y_index)];
    const auto& tz = leaf.backward_tangents[static_cast<std::size_t>(z_index)];
    double jz = unstable_jacobian(sys, cz[static_cast<std::size_t>(k)],
                                  tz[static_cast<std::size_t>(k)]);
    double jy = unstable_jacobian(sys, cy[static_cast<std::size_t>(k)],
                                  ty[static_cast<std::size_t>(k)]);
    return std::log(jz) - std::log(jy);
}

} // namespace

double rho_u_n(const SystemHandle& sys, const LeafSegment& leaf, int y_index,
               int z_index, int n) {
    check_indices(leaf, y_index, z_index);
    if (n < 0 || n > leaf.n_history) {
        throw HistoryTooShort("leaf stores " + std::to_string(leaf.n_history) +
                              " backward steps, requested " + std::to_string(n));
    }
    double log_rho = 0.0;
    for (int k = 0; k < n; ++k) log_rho += log_factor(sys, leaf, y_index, z_index, k);
    return std::exp(log_rho);
}

RhoResult rho_u_limit(const SystemHandle& sys, const LeafSegment& leaf,
                      int y_index, int z_index, double tol) {
    check_indices(leaf, y_index, z_index);
    RhoResult res;
    if (y_index == z_index) return res;

    const int depth = leaf.n_history;
    const auto& cy = leaf.backward_chains[static_cast<std::size_t>(y_index)];
    const auto& cz = leaf.backward_chains[static_cast<std::size_t>(z_index)];

    std::vector<double> sep(static_cast<std::size_t>(depth) + 1);
    for (int k = 0; k <= depth; ++k) {
        sep[static_cast<std::size_t>(k)] =
            sys.metric_distance(cy[static_cast<std::size_t>(k)],
                                cz[static_cast<std::size_t>(k)]);
    }
    if (sep[0] == 0.0) return res;

    double rho_geo = std::pow(sep[static_cast<std::size_t>(depth)] / sep[0], 1.0 / depth);
    if (!(rho_geo < 0.999)) {
        throw NoContraction("backward chains do not contract (rate " +
                            std::to_string(rho_geo) + ")");
    }
    res.contraction = rho_geo;

    std::vector<double> logs(static_cast<std::size_t>(depth));
    double lipschitz = 0.0;
    for (int k = 0; k < depth; ++k) {
        logs[static_cast<std::size_t>(k)] = log_factor(sys, leaf, y_index, z_index, k);
        if (sep[static_cast<std::size_t>(k)] > 0.0) {
            lipschitz = std::max(lipschitz, std::abs(logs[static_cast<std::size_t>(k)]) /
                                                sep[static_cast<std::size_t>(k)]);
        }
    }

    auto tail = [&](int n) {
        return lipschitz * sep[static_cast<std::size_t>(n)] / (1.0 - rho_geo);
    };
    int n = depth;
    for (int cand = 1; cand <= depth; ++cand) {
        if (tail(cand) < tol) {
            n = cand;
            break;
        }
    }
    double log_rho = 0.0;
    for (int k = 0; k < n; ++k) log_rho += logs[static_cast<std::size_t>(k)];
    res.value = std::exp(log_rho);
    res.truncation_n = n;
    res.tail_bound = tail(n);
    return res;
}

DensityProfile conditional_density_profile(const SystemHandle& sys,
                                           const LeafSegment& leaf, double tol) {
    if (leaf.samples.size() < 2) throw InvalidLeaf("leaf has fewer than two samples");
    DensityProfile profile;
    const int m = static_cast<int>(leaf.samples.size());
    profile.arc_length = leaf.arc_length;
    profile.rho.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        profile.rho[static_cast<std::size_t>(i)] =
            rho_u_limit(sys, leaf, leaf.base_index, i, tol).value;
    }
    double normalizer = 0.0;
    for (int i = 0; i < m; ++i) {
        normalizer += leaf.weights[static_cast<std::size_t>(i)] *
                      profile.rho[static_cast<std::size_t>(i)];
    }
    if (!(normalizer > 0.0)) throw InvalidLeaf("degenerate density normalizer");
    profile.normalizer = normalizer;
    profile.d.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        profile.d[static_cast<std::size_t>(i)] =
            profile.rho[static_cast<std::size_t>(i)] / normalizer;
    }
    return profile;
}

std::string profile_to_csv(const DensityProfile& profile) {
    std::ostringstream out;
    out.precision(17);
    out << "arc_length,rho,d\n";
    for (std::size_t i = 0; i < profile.arc_length.size(); ++i) {
        out << profile.arc_length[i] << "," << profile.rho[i] << "," << profile.d[i]
            << "\n";
    }
    return out.str();
}

double absolute_continuity_check(const SystemHandle& sys, const LeafSegment& leaf,
                                 const GridHistogram& nu,
                                 const DensityProfile& profile, double band_width,
                                 int bins) {
    if (leaf.samples.size() < 2) throw InvalidLeaf("leaf has fewer than two samples");
    if (bins < 2) throw InvalidLeaf("need at least two arc-length bins");

    const std::size_t m = leaf.samples.size();
    std::vector<Vec> wrapped(m);
    for (std::size_t i = 0; i < m; ++i) wrapped[i] = wrap_to_box(sys, leaf.samples[i]);

    auto bin_of = [&](double arc) {
        int b = static_cast<int>(arc / leaf.length * bins);
        return std::clamp(b, 0, bins - 1);
    };

    std::vector<double> empirical(static_cast<std::size_t>(bins), 0.0);
    double band_mass = 0.0;
    double norm = nu.total_mass > 0.0 ? nu.total_mass : 1.0;
    // Sub-cell quadrature: assigning whole cells to arc-length bins would
    // quantize the band at the grid scale, which dominates the L1 error.
    const int sub = 4;
    const int d = nu.dimension();
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    const double subweight = 1.0 / std::pow(static_cast<double>(sub), d);
    for (std::size_t c = 0; c < nu.masses.size(); ++c) {
        double mass = nu.masses[c] / norm;
        if (mass == 0.0) continue;
        Vec center = nu.cell_center(static_cast<long>(c));
        // Quick reject: cell centers farther than band + cell diagonal.
        double coarse = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            coarse = std::min(coarse, sys.metric_distance(center, wrapped[i]));
        }
        double diag = 0.0;
        for (int a = 0; a < d; ++a) diag += nu.cell_width(a) * nu.cell_width(a);
        if (coarse > band_width + std::sqrt(diag)) continue;

        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            Vec x = center;
            for (int a = 0; a < d; ++a) {
                x[a] += ((idx[static_cast<std::size_t>(a)] + 0.5) / sub - 0.5) *
                        nu.cell_width(a);
            }
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < m; ++i) {
                double dist = sys.metric_distance(x, wrapped[i]);
                if (dist < best) {
                    best = dist;
                    best_i = i;
                }
            }
            // Skip the caps beyond the segment ends as well as points
            // outside the band.
            if (best <= band_width && best_i != 0 && best_i != m - 1) {
                empirical[static_cast<std::size_t>(bin_of(leaf.arc_length[best_i]))] +=
                    mass * subweight;
                band_mass += mass * subweight;
            }
            int a = 0;
            while (a < d && ++idx[static_cast<std::size_t>(a)] == sub) {
                idx[static_cast<std::size_t>(a++)] = 0;
            }
            if (a == d) break;
        }
    }
    if (band_mass < 0.01) {
        throw InsufficientMass("only " + std::to_string(band_mass) +
                               " of the measure lies within the leaf band");
    }
    for (double& e : empirical) e /= band_mass;

    std::vector<double> predicted(static_cast<std::size_t>(bins), 0.0);
    double pred_total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double w = leaf.weights[i] * profile.d[i];
        predicted[static_cast<std::size_t>(bin_of(leaf.arc_length[i]))] += w;
        pred_total += w;
    }
    for (double& p : predicted) p /= pred_total;

    double l1 = 0.0;
    for (int b = 0; b < bins; ++b) {
        l1 += std::abs(empirical[static_cast<std::size_t>(b)] -
                       predicted[static_cast<std::size_t>(b)]);
    }
    return l1;
}

} // namespace srb
