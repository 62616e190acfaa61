#include "srb/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srb/measures.hpp"
#include "srb/rng.hpp"

namespace srb {

namespace {

struct DirectionScan {
    bool verdict = true;
    int first_violation = -1;
};

DirectionScan scan_direction(const SystemHandle& sys, Vec p, double eps, int ell,
                             int horizon, const std::function<Vec(const Vec&)>& step) {
    DirectionScan out;
    for (int n = 0; n <= horizon; ++n) {
        double threshold = std::exp(-eps * n) / ell;
        double d;
        try {
            d = sys.singularity_distance(p);
        } catch (const Error&) {
            d = 0.0;
        }
        if (d < threshold) {
            out.verdict = false;
            out.first_violation = n;
            return out;
        }
        if (n == horizon) break;
        try {
            p = step(p);
        } catch (const Error&) {
            out.verdict = false;
            out.first_violation = n + 1;
            return out;
        }
    }
    return out;
}

/// Slope/intercept of the least-squares line through (x_i, y_i).
std::pair<double, double> linear_fit(const std::vector<double>& x,
                                     const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    return {slope, intercept};
}

/// q from masses over the nonzero grid entries; nan when fewer than two.
double fit_q(const std::vector<double>& eps_grid, const std::vector<double>& masses,
             double* intercept_out = nullptr) {
    std::vector<double> lx, ly;
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
        if (masses[e] > 0.0) {
            lx.push_back(std::log(eps_grid[e]));
            ly.push_back(std::log(masses[e]));
        }
    }
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    auto [slope, intercept] = linear_fit(lx, ly);
    if (intercept_out) *intercept_out = intercept;
    return slope;
}

} // namespace

CoreMembership core_membership(const SystemHandle& sys, const Vec& z, double eps,
                               int ell, int horizon, CoreDirection direction) {
    if (!sys.is_singular()) {
        throw NotSingularSystem("system '" + sys.name + "' has no singularity set");
    }
    if (eps <= 0.0) throw ParameterOutOfRange("eps must be positive");
    if (ell < 1) throw ParameterOutOfRange("ell must be at least 1");

    CoreMembership out;
    out.eps = eps;
    out.ell = ell;
    out.horizon = horizon;

    if (direction != CoreDirection::backward) {
        DirectionScan fwd = scan_direction(sys, z, eps, ell, horizon, sys.map);
        out.verdict_forward = fwd.verdict;
        if (!fwd.verdict) out.first_violation_step = fwd.first_violation;
    }
    if (direction != CoreDirection::forward) {
        if (!sys.inverse) {
            throw InverseUnavailable("system '" + sys.name +
                                     "' provides no inverse branch for D-");
        }
        DirectionScan bwd = scan_direction(sys, z, eps, ell, horizon, sys.inverse);
        out.verdict_backward = bwd.verdict;
        out.backward_checked = true;
        if (!bwd.verdict &&
            (out.first_violation_step < 0 || bwd.first_violation < out.first_violation_step)) {
            out.first_violation_step = bwd.first_violation;
        }
    }
    out.verdict_core = out.verdict_forward && out.verdict_backward;
    return out;
}

CoreConditionFit core_condition_estimate(const SystemHandle& sys, int n,
                                         const std::vector<double>& eps_grid,
                                         int sample, std::uint64_t seed) {
    if (!sys.is_singular()) {
        throw NotSingularSystem("system '" + sys.name + "' has no singularity set");
    }
    if (sample <= 0) throw EmptySample("core-condition estimate needs samples");
    if (eps_grid.empty()) throw ParameterOutOfRange("empty eps grid");
    for (std::size_t e = 0; e + 1 < eps_grid.size(); ++e) {
        if (!(eps_grid[e] > eps_grid[e + 1]) || eps_grid[e + 1] < 0.0) {
            throw ParameterOutOfRange("eps grid must be decreasing and nonnegative");
        }
    }

    // One shared sample set: the per-point distance d(f^n x, S+) is computed
    // once, so the sublevel events are exactly nested across the grid.
    // Points whose orbit leaves U or hits S+ before step n have no n-th
    // image in U+; they fall outside the event for every eps.
    std::vector<double> final_distance(static_cast<std::size_t>(sample));
    for (int i = 0; i < sample; ++i) {
        Vec p = sample_domain_point(sys, seed, static_cast<std::uint64_t>(i));
        double d = std::numeric_limits<double>::infinity();
        bool dead = false;
        for (int k = 0; k < n && !dead; ++k) {
            if (!sys.in_domain(p) || sys.singularity_distance(p) <= 0.0) {
                dead = true;
                break;
            }
            try {
                p = sys.map(p);
            } catch (const Error&) {
                dead = true;
            }
        }
        if (!dead && sys.in_domain(p)) d = std::max(0.0, sys.singularity_distance(p));
        final_distance[static_cast<std::size_t>(i)] = d;
    }

    auto masses_of = [&](const std::vector<double>& dist) {
        std::vector<double> m(eps_grid.size(), 0.0);
        for (double d : dist) {
            for (std::size_t e = 0; e < eps_grid.size(); ++e) {
                if (d < eps_grid[e]) m[e] += 1.0;
            }
        }
        for (double& v : m) v /= static_cast<double>(dist.size());
        return m;
    };

    CoreConditionFit fit;
    fit.n = n;
    fit.eps_grid = eps_grid;
    fit.sample = sample;
    fit.mass_estimates = masses_of(final_distance);

    double intercept = 0.0;
    double q = fit_q(eps_grid, fit.mass_estimates, &intercept);
    if (!std::isfinite(q)) {
        throw AllMassZero("fewer than two eps entries with nonzero mass; "
                          "no power-law fit (consistent with unbounded q)");
    }
    fit.fitted_q = q;
    fit.fitted_C = std::exp(intercept);

    const int B = 200;
    std::vector<double> qs;
    std::vector<double> resampled(static_cast<std::size_t>(sample));
    for (int b = 0; b < B; ++b) {
        auto rng = make_stream(seed ^ 0x626f6f747374ULL, static_cast<std::uint64_t>(b));
        std::uniform_int_distribution<int> pick(0, sample - 1);
        for (int i = 0; i < sample; ++i) {
            resampled[static_cast<std::size_t>(i)] =
                final_distance[static_cast<std::size_t>(pick(rng))];
        }
        double qb = fit_q(eps_grid, masses_of(resampled));
        if (std::isfinite(qb)) qs.push_back(qb);
    }
    if (qs.size() >= 10) {
        std::sort(qs.begin(), qs.end());
        auto pct = [&](double p) {
            double idx = p * (static_cast<double>(qs.size()) - 1.0);
            return qs[static_cast<std::size_t>(std::lround(idx))];
        };
        fit.q_lo = pct(0.025);
        fit.q_hi = pct(0.975);
    } else {
        fit.q_lo = fit.q_hi = fit.fitted_q;
    }
    return fit;
}

namespace {

/// Frobenius norm of the finite-difference second derivative tensor of g.
double hessian_norm(const std::function<Vec(const Vec&)>& g, const Vec& x, double h) {
    const int d = static_cast<int>(x.size());
    Vec g0 = g(x);
    double ssq = 0.0;
    for (int i = 0; i < d; ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        Vec second = (g(xp) - 2.0 * g0 + g(xm)) / (h * h);
        ssq += second.squaredNorm();
        for (int j = i + 1; j < d; ++j) {
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h; xpp[j] += h;
            xpm[i] += h; xpm[j] -= h;
            xmp[i] -= h; xmp[j] += h;
            xmm[i] -= h; xmm[j] -= h;
            Vec mixed = (g(xpp) - g(xpm) - g(xmp) + g(xmm)) / (4.0 * h * h);
            ssq += 2.0 * mixed.squaredNorm();
        }
    }
    return std::sqrt(ssq);
}

/// Steer a point toward prescribed singularity distance delta by walking
/// along the finite-difference gradient of the distance function.
bool steer_to_distance(const SystemHandle& sys, Vec& x, double delta) {
    const int d = sys.dimension;
    for (int iter = 0; iter < 6; ++iter) {
        double dist = sys.singularity_distance(x);
        if (dist <= 0.0) return false;
        if (std::abs(dist - delta) <= 0.05 * delta) break;
        Vec grad(d);
        double h = 1e-7;
        for (int i = 0; i < d; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            grad[i] = (sys.singularity_distance(xp) - sys.singularity_distance(xm)) /
                      (2.0 * h);
        }
        double g2 = grad.squaredNorm();
        if (!(g2 > 1e-12)) return false;
        x -= (dist - delta) * grad / g2;
        if (!sys.in_domain(x)) return false;
    }
    double dist = sys.singularity_distance(x);
    return std::abs(dist - delta) <= 0.3 * delta && sys.in_domain(x);
}

struct EnvelopeFit {
    double C = 0.0;
    double alpha = 0.0;
    bool ok = false;
};

/// Fit log max-per-bin Hessian norm against log distance: the bound is a
/// sup, so the regression runs over per-bin envelopes, not raw samples.
EnvelopeFit envelope_fit(const std::vector<std::pair<double, double>>& pts) {
    const int bins = 8;
    double lo = std::log(1e-6), hi = std::log(1e-2);
    std::vector<double> best(bins, 0.0);
    for (const auto& [delta, norm] : pts) {
        int b = static_cast<int>((std::log(delta) - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        best[static_cast<std::size_t>(b)] =
            std::max(best[static_cast<std::size_t>(b)], norm);
    }
    std::vector<double> lx, ly;
    for (int b = 0; b < bins; ++b) {
        if (best[static_cast<std::size_t>(b)] > 0.0) {
            lx.push_back(lo + (b + 0.5) * (hi - lo) / bins);
            ly.push_back(std::log(best[static_cast<std::size_t>(b)]));
        }
    }
    EnvelopeFit out;
    if (lx.size() < 3) return out;
    auto [slope, intercept] = linear_fit(lx, ly);
    out.alpha = -slope;
    out.C = std::exp(intercept);
    out.ok = true;
    return out;
}

} // namespace

SingularBlowupCheck blowup_constants(const SystemHandle& sys, int sample,
                                     std::uint64_t seed) {
    if (!sys.is_singular()) {
        throw NotSingularSystem("system '" + sys.name + "' has no singularity set");
    }
    if (sample <= 0) throw EmptySample("blow-up estimation needs samples");

    SingularBlowupCheck out;
    out.backward_available = static_cast<bool>(sys.inverse);

    // Classification pass at moderate distances, where finite-difference
    // noise (~eps_machine / h^2) is far below the 1e-6 threshold.
    double moderate_max_fwd = 0.0;
    std::vector<double> moderate_bwd;
    int accepted = 0;
    for (int s = 0; s < 4 * sample && accepted < sample; ++s) {
        auto rng = make_stream(seed ^ 0x636c617373ULL, static_cast<std::uint64_t>(s));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double delta = std::pow(10.0, -2.0 + unit(rng) * 1.0); // [1e-2, 1e-1]
        Vec x(sys.dimension);
        for (int i = 0; i < sys.dimension; ++i) {
            x[i] = sys.trapping_region.lo[i] + unit(rng) * sys.trapping_region.width(i);
        }
        if (!sys.in_domain(x) || !steer_to_distance(sys, x, delta)) continue;
        double h = delta / 4.0;
        try {
            moderate_max_fwd = std::max(moderate_max_fwd, hessian_norm(sys.map, x, h));
            if (sys.inverse) moderate_bwd.push_back(hessian_norm(sys.inverse, x, h));
        } catch (const Error&) {
            continue;
        }
        ++accepted;
    }

    if (moderate_max_fwd < 1e-6) {
        out.forward_bounded = true;
        out.C1 = moderate_max_fwd;
        out.alpha1 = 0.0;
    } else {
        // Blow-up regression: log-uniform distances down to 1e-6.
        std::vector<std::pair<double, double>> pts;
        for (int s = 0; s < 4 * sample && static_cast<int>(pts.size()) < sample; ++s) {
            auto rng = make_stream(seed ^ 0x666f7277ULL, static_cast<std::uint64_t>(s));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            double delta = std::pow(10.0, -6.0 + unit(rng) * 4.0);
            Vec x(sys.dimension);
            for (int i = 0; i < sys.dimension; ++i) {
                x[i] = sys.trapping_region.lo[i] + unit(rng) * sys.trapping_region.width(i);
            }
            if (!sys.in_domain(x) || !steer_to_distance(sys, x, delta)) continue;
            try {
                pts.emplace_back(sys.singularity_distance(x),
                                 hessian_norm(sys.map, x, delta / 20.0));
            } catch (const Error&) {
                continue;
            }
        }
        EnvelopeFit fit = envelope_fit(pts);
        if (!fit.ok) throw EmptySample("too few usable blow-up sample points");
        out.C1 = fit.C;
        out.alpha1 = fit.alpha;
        out.forward_bounded = fit.alpha <= 0.05;
    }

    if (out.backward_available && !moderate_bwd.empty()) {
        // Median: robust against the few samples whose stencil straddles the
        // inverse's own non-smoothness locus.
        std::sort(moderate_bwd.begin(), moderate_bwd.end());
        double median = moderate_bwd[moderate_bwd.size() / 2];
        out.backward_bounded = median < 1e-6;
        out.C2 = median;
        out.alpha2 = 0.0;
    }
    return out;
}

nlohmann::json core_fit_to_json(const SystemHandle& sys, const CoreConditionFit& fit,
                                std::uint64_t seed) {
    return nlohmann::json{{"system", sys.name},
                          {"parameters", sys.parameters},
                          {"n", fit.n},
                          {"eps_grid", fit.eps_grid},
                          {"masses", fit.mass_estimates},
                          {"C", fit.fitted_C},
                          {"q", fit.fitted_q},
                          {"q_ci", {fit.q_lo, fit.q_hi}},
                          {"sample", fit.sample},
                          {"seed", seed}};
}

} // namespace srb
