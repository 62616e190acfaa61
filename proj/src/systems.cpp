#include "srb/systems.hpp"

#include <cmath>

namespace srb {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require(bool ok, const std::string& field, const std::string& constraint) {
    if (!ok) {
        throw ParameterOutOfRange("parameter '" + field + "' violates " + constraint);
    }
}

/// Sampled check that f maps the domain (minus a singularity buffer) into
/// itself; the result is recorded on the handle, not enforced.
bool verify_trapping(const SystemHandle& sys, int per_axis, double buffer) {
    const int d = sys.dimension;
    std::vector<int> idx(d, 0);
    while (true) {
        Vec x(d);
        for (int i = 0; i < d; ++i) {
            double t = (idx[i] + 0.5) / per_axis;
            x[i] = sys.trapping_region.lo[i] + t * sys.trapping_region.width(i);
        }
        bool skip = !sys.in_domain(x) ||
                    (sys.is_singular() && sys.singularity_distance(x) < buffer);
        if (!skip && !sys.in_domain(sys.map(x))) return false;
        int i = 0;
        while (i < d && ++idx[i] == per_axis) idx[i++] = 0;
        if (i == d) break;
    }
    return true;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

} // namespace

SystemHandle make_solenoid(const SolenoidParams& p) {
    require(p.a > 0.0 && p.a < 1.0, "a", "a in (0,1)");
    double cap = std::min(p.a, 1.0 - p.a);
    require(p.alpha > 0.0 && p.alpha < cap, "alpha", "alpha in (0, min{a,1-a})");
    require(p.beta > 0.0 && p.beta < cap, "beta", "beta in (0, min{a,1-a})");

    SystemHandle sys;
    sys.name = "solenoid";
    sys.dimension = 3;
    sys.trapping_region = {vec3(-1.0, -1.0, 0.0), vec3(1.0, 1.0, kTwoPi)};
    sys.parameters = {{"a", p.a}, {"alpha", p.alpha}, {"beta", p.beta}};
    sys.axis_period = vec3(0.0, 0.0, kTwoPi);
    sys.invertible_on_attractor = true;
    sys.smooth = true;
    sys.in_domain_extra = [](const Vec& x) {
        return x[0] * x[0] + x[1] * x[1] <= 1.0;
    };
    const double a = p.a, al = p.alpha, be = p.beta;
    sys.map = [a, al, be](const Vec& x) {
        double th = 2.0 * x[2];
        th = std::fmod(th, kTwoPi);
        if (th < 0.0) th += kTwoPi;
        return vec3(al * x[0] + a * std::cos(x[2]),
                    be * x[1] + a * std::sin(x[2]), th);
    };
    sys.jacobian = [a, al, be](const Vec& x) {
        Mat J(3, 3);
        J << al, 0.0, -a * std::sin(x[2]),
             0.0, be, a * std::cos(x[2]),
             0.0, 0.0, 2.0;
        return J;
    };
    sys.trapping_verified = verify_trapping(sys, 24, 0.0);
    return sys;
}

SystemHandle make_lorenz_map(const LorenzMapParams& p) {
    require(p.A > 0.0 && p.A < 1.0, "A", "A in (0,1)");
    require(p.B > 0.0 && p.B < 0.5, "B", "B in (0,1/2)");
    require(p.nu > 1.0, "nu", "nu > 1");
    require(p.nu0 > 1.0 / (1.0 + p.A) && p.nu0 < 1.0, "nu0", "nu0 in (1/(1+A), 1)");

    SystemHandle sys;
    sys.name = "lorenz_map";
    sys.dimension = 2;
    sys.trapping_region = {vec2(-1.0, -1.0), vec2(1.0, 1.0)};
    sys.parameters = {{"A", p.A}, {"B", p.B}, {"nu", p.nu}, {"nu0", p.nu0}};
    sys.smooth = false;
    sys.invertible_on_attractor = false;
    sys.singularity_distance = [](const Vec& x) {
        return std::min({std::abs(x[1]), 1.0 - std::abs(x[0]), 1.0 - std::abs(x[1])});
    };
    const double A = p.A, B = p.B, nu = p.nu, nu0 = p.nu0;
    sys.map = [A, B, nu, nu0](const Vec& x) {
        double y = x[1];
        if (y == 0.0) throw SingularInput("lorenz_map on the line y = 0");
        double s = y > 0.0 ? 1.0 : -1.0;
        double u = std::abs(y);
        return vec2((-B * std::pow(u, nu0) + B * s * std::pow(u, nu) + 1.0) * s,
                    ((1.0 + A) * std::pow(u, nu0) - A) * s);
    };
    sys.jacobian = [A, B, nu, nu0](const Vec& x) {
        double y = x[1];
        if (y == 0.0) throw SingularInput("lorenz_map jacobian on the line y = 0");
        double s = y > 0.0 ? 1.0 : -1.0;
        double u = std::abs(y);
        // d/dy of each component; both are independent of x.
        double dxdy = -B * nu0 * std::pow(u, nu0 - 1.0) + s * B * nu * std::pow(u, nu - 1.0);
        double dydy = (1.0 + A) * nu0 * std::pow(u, nu0 - 1.0);
        Mat J(2, 2);
        J << 0.0, dxdy, 0.0, dydy;
        return J;
    };
    sys.trapping_verified = verify_trapping(sys, 200, 1e-4);
    return sys;
}

SystemHandle make_lozi(const LoziParams& p) {
    require(p.a > 0.0, "a", "a > 0");
    require(p.b > 0.0, "b", "b > 0");
    require(p.c > 0.0 && p.c < 1.0, "c", "c in (0,1)");

    SystemHandle sys;
    sys.name = "lozi";
    sys.dimension = 2;
    sys.trapping_region = {vec2(-p.c, -p.c), vec2(p.c, p.c)};
    sys.parameters = {{"a", p.a}, {"b", p.b}, {"c", p.c}};
    sys.smooth = false;
    sys.invertible_on_attractor = true;
    const double a = p.a, b = p.b, c = p.c;
    sys.singularity_distance = [c](const Vec& x) {
        return std::min({std::abs(x[0]), c - std::abs(x[0]), c - std::abs(x[1])});
    };
    sys.map = [a, b](const Vec& x) {
        if (x[0] == 0.0) throw SingularInput("lozi on the line x = 0");
        return vec2(1.0 + b * x[1] - a * std::abs(x[0]), x[0]);
    };
    sys.jacobian = [a, b](const Vec& x) {
        if (x[0] == 0.0) throw BoundaryInput("lozi jacobian at x = 0: |x| not differentiable");
        Mat J(2, 2);
        J << (x[0] > 0.0 ? -a : a), b, 1.0, 0.0;
        return J;
    };
    sys.inverse = [a, b](const Vec& x) {
        // x' = 1 + b y - a|x|, y' = x  =>  x = y', y = (x' - 1 + a|y'|) / b
        return vec2(x[1], (x[0] - 1.0 + a * std::abs(x[1])) / b);
    };
    sys.trapping_verified = verify_trapping(sys, 200, 1e-4);
    return sys;
}

SystemHandle make_belykh(const BelykhParams& p) {
    require(std::abs(p.k) < 1.0, "k", "|k| < 1");
    double expansion_cap = 2.0 / (1.0 - std::abs(p.k));
    require(p.lambda1 > 0.0 && p.lambda1 < 0.5, "lambda1", "lambda1 in (0,1/2)");
    require(p.mu1 > 0.0 && p.mu1 < 0.5, "mu1", "mu1 in (0,1/2)");
    require(p.lambda2 > 1.0 && p.lambda2 < expansion_cap, "lambda2",
            "lambda2 in (1, 2/(1-|k|))");
    require(p.mu2 > 1.0 && p.mu2 < expansion_cap, "mu2", "mu2 in (1, 2/(1-|k|))");

    SystemHandle sys;
    sys.name = "belykh";
    sys.dimension = 2;
    sys.trapping_region = {vec2(-1.0, -1.0), vec2(1.0, 1.0)};
    sys.parameters = {{"lambda1", p.lambda1}, {"lambda2", p.lambda2},
                      {"mu1", p.mu1}, {"mu2", p.mu2}, {"k", p.k}};
    sys.smooth = false;
    sys.invertible_on_attractor = true;
    const double l1 = p.lambda1, l2 = p.lambda2, m1 = p.mu1, m2 = p.mu2, k = p.k;
    const double knorm = std::sqrt(1.0 + k * k);
    sys.singularity_distance = [k, knorm](const Vec& x) {
        return std::min({std::abs(x[1] - k * x[0]) / knorm,
                         1.0 - std::abs(x[0]), 1.0 - std::abs(x[1])});
    };
    sys.map = [l1, l2, m1, m2, k](const Vec& x) {
        if (x[1] > k * x[0]) {
            return vec2(l1 * (x[0] - 1.0) + 1.0, l2 * (x[1] - 1.0) + 1.0);
        }
        if (x[1] < k * x[0]) {
            return vec2(m1 * (x[0] + 1.0) - 1.0, m2 * (x[1] + 1.0) - 1.0);
        }
        throw SingularInput("belykh on the line y = kx");
    };
    sys.jacobian = [l1, l2, m1, m2, k](const Vec& x) {
        Mat J = Mat::Zero(2, 2);
        if (x[1] > k * x[0]) {
            J(0, 0) = l1;
            J(1, 1) = l2;
        } else if (x[1] < k * x[0]) {
            J(0, 0) = m1;
            J(1, 1) = m2;
        } else {
            throw BoundaryInput("belykh jacobian on the line y = kx");
        }
        return J;
    };
    sys.inverse = [l1, l2, m1, m2, k](const Vec& x) {
        Vec up = vec2((x[0] - 1.0) / l1 + 1.0, (x[1] - 1.0) / l2 + 1.0);
        Vec dn = vec2((x[0] + 1.0) / m1 - 1.0, (x[1] + 1.0) / m2 - 1.0);
        auto inside = [](const Vec& p) {
            return std::abs(p[0]) <= 1.0 && std::abs(p[1]) <= 1.0;
        };
        bool up_ok = up[1] > k * up[0];
        bool dn_ok = dn[1] < k * dn[0];
        if (up_ok && dn_ok) {
            // Both branch conditions hold; keep the preimage that stays in
            // the square (the other left the trapping region).
            if (inside(up) && !inside(dn)) return up;
            if (inside(dn) && !inside(up)) return dn;
            return up;
        }
        if (up_ok) return up;
        if (dn_ok) return dn;
        throw SingularInput("belykh point has no preimage in either branch");
    };
    sys.trapping_verified = verify_trapping(sys, 200, 1e-4);
    return sys;
}

double slowdown_profile(const NeutralSlowdownParams& p, double r) {
    if (r <= p.r0) return std::pow(r, p.alpha);
    if (r >= p.r1) return 1.0;
    // Monotone cubic Hermite between (r0, r0^alpha) and (r1, 1); slopes are
    // clamped against the secant so the interpolant cannot overshoot.
    double v0 = std::pow(p.r0, p.alpha);
    double d = (1.0 - v0) / (p.r1 - p.r0);
    double m0 = std::min(p.alpha * std::pow(p.r0, p.alpha - 1.0), 3.0 * d);
    double t = (r - p.r0) / (p.r1 - p.r0);
    double h = p.r1 - p.r0;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * m0 +
           (-2 * t3 + 3 * t2) * 1.0;
}

double slowdown_profile_derivative(const NeutralSlowdownParams& p, double r) {
    if (r <= 0.0) return 0.0;
    if (r < p.r0) return p.alpha * std::pow(r, p.alpha - 1.0);
    if (r >= p.r1) return 0.0;
    double v0 = std::pow(p.r0, p.alpha);
    double d = (1.0 - v0) / (p.r1 - p.r0);
    double m0 = std::min(p.alpha * std::pow(p.r0, p.alpha - 1.0), 3.0 * d);
    double h = p.r1 - p.r0;
    double t = (r - p.r0) / h;
    double t2 = t * t;
    return ((6 * t2 - 6 * t) * v0 + (3 * t2 - 4 * t + 1) * h * m0 +
            (-6 * t2 + 6 * t)) / h;
}

SystemHandle make_neutral_slowdown(const NeutralSlowdownParams& p) {
    require(p.gamma > 0.0, "gamma", "gamma > 0");
    require(p.beta > 0.0, "beta", "beta > 0");
    require(p.alpha > 0.0 && p.alpha < 1.0, "alpha", "alpha in (0,1)");
    require(p.r0 > 0.0 && p.r0 < p.r1, "r0", "0 < r0 < r1");
    require(p.r1 <= 1.0, "r1", "r1 <= 1");
    require(p.r0 < 1.0, "r0", "r0 < 1 (psi must stay within [0,1])");
    require(p.integrator_step > 0.0 && p.integrator_step <= 0.1,
            "integrator_step", "step in (0, 0.1]");

    SystemHandle sys;
    sys.name = "neutral_slowdown";
    sys.dimension = 2;
    sys.trapping_region = {vec2(-10.0, -10.0), vec2(10.0, 10.0)};
    sys.parameters = {{"gamma", p.gamma}, {"beta", p.beta}, {"alpha", p.alpha},
                      {"r0", p.r0}, {"r1", p.r1},
                      {"integrator_step", p.integrator_step}};
    sys.smooth = true;
    sys.invertible_on_attractor = true;

    const NeutralSlowdownParams q = p;
    auto field = [q](const Vec& x) {
        double r = x.norm();
        double psi = r > 0.0 ? slowdown_profile(q, r) : 0.0;
        return vec2(psi * q.gamma * x[0], -psi * q.beta * x[1]);
    };
    auto field_jacobian = [q](const Vec& x) {
        double r = x.norm();
        Mat A = Mat::Zero(2, 2);
        A(0, 0) = q.gamma;
        A(1, 1) = -q.beta;
        if (r < 1e-300) return Mat(Mat::Zero(2, 2));
        double psi = slowdown_profile(q, r);
        double dpsi = slowdown_profile_derivative(q, r);
        Vec Ax = vec2(q.gamma * x[0], -q.beta * x[1]);
        Mat J = psi * A;
        J += (dpsi / r) * (Ax * x.transpose());
        return J;
    };

    int n_steps = std::max(1, static_cast<int>(std::lround(1.0 / p.integrator_step)));
    double h = 1.0 / n_steps;

    sys.map = [field, n_steps, h](const Vec& x0) {
        if (x0.norm() == 0.0) return x0; // exact fixed point
        Vec x = x0;
        for (int i = 0; i < n_steps; ++i) {
            Vec k1 = field(x);
            Vec k2 = field(Vec(x + 0.5 * h * k1));
            Vec k3 = field(Vec(x + 0.5 * h * k2));
            Vec k4 = field(Vec(x + h * k3));
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return x;
    };
    // Variational RK4: integrate the tangent flow alongside the base point.
    sys.jacobian = [field, field_jacobian, n_steps, h](const Vec& x0) {
        if (x0.norm() == 0.0) return Mat(Mat::Identity(2, 2));
        Vec x = x0;
        Mat M = Mat::Identity(2, 2);
        for (int i = 0; i < n_steps; ++i) {
            Vec k1 = field(x);
            Mat K1 = field_jacobian(x) * M;
            Vec x2 = x + 0.5 * h * k1;
            Vec k2 = field(x2);
            Mat K2 = field_jacobian(x2) * Mat(M + 0.5 * h * K1);
            Vec x3 = x + 0.5 * h * k2;
            Vec k3 = field(x3);
            Mat K3 = field_jacobian(x3) * Mat(M + 0.5 * h * K2);
            Vec x4 = x + h * k3;
            Vec k4 = field(x4);
            Mat K4 = field_jacobian(x4) * Mat(M + h * K3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            M += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        }
        return M;
    };
    sys.trapping_verified = false; // expanding direction: not a trapping region
    return sys;
}

SystemHandle make_cat_map() {
    SystemHandle sys;
    sys.name = "cat_map";
    sys.dimension = 2;
    sys.trapping_region = {vec2(0.0, 0.0), vec2(1.0, 1.0)};
    sys.parameters = nlohmann::json::object();
    sys.axis_period = vec2(1.0, 1.0);
    sys.smooth = true;
    sys.invertible_on_attractor = true;
    auto wrap = [](double t) {
        t = std::fmod(t, 1.0);
        return t < 0.0 ? t + 1.0 : t;
    };
    sys.map = [wrap](const Vec& x) {
        return vec2(wrap(2.0 * x[0] + x[1]), wrap(x[0] + x[1]));
    };
    sys.jacobian = [](const Vec&) {
        Mat J(2, 2);
        J << 2.0, 1.0, 1.0, 1.0;
        return J;
    };
    sys.inverse = [wrap](const Vec& x) {
        return vec2(wrap(x[0] - x[1]), wrap(-x[0] + 2.0 * x[1]));
    };
    sys.trapping_verified = true;
    return sys;
}

SystemHandle make_system(const std::string& name, const nlohmann::json& params) {
    auto get = [&params](const char* key, double fallback) {
        return params.contains(key) ? params.at(key).get<double>() : fallback;
    };
    if (name == "solenoid") {
        SolenoidParams p;
        p.a = get("a", p.a);
        p.alpha = get("alpha", p.alpha);
        p.beta = get("beta", p.beta);
        return make_solenoid(p);
    }
    if (name == "lorenz_map") {
        LorenzMapParams p;
        p.A = get("A", p.A);
        p.B = get("B", p.B);
        p.nu = get("nu", p.nu);
        p.nu0 = get("nu0", p.nu0);
        return make_lorenz_map(p);
    }
    if (name == "lozi") {
        LoziParams p;
        p.a = get("a", p.a);
        p.b = get("b", p.b);
        p.c = get("c", p.c);
        return make_lozi(p);
    }
    if (name == "belykh") {
        BelykhParams p;
        p.lambda1 = get("lambda1", p.lambda1);
        p.lambda2 = get("lambda2", p.lambda2);
        p.mu1 = get("mu1", p.mu1);
        p.mu2 = get("mu2", p.mu2);
        p.k = get("k", p.k);
        return make_belykh(p);
    }
    if (name == "neutral_slowdown") {
        NeutralSlowdownParams p;
        p.gamma = get("gamma", p.gamma);
        p.beta = get("beta", p.beta);
        p.alpha = get("alpha", p.alpha);
        p.r0 = get("r0", p.r0);
        p.r1 = get("r1", p.r1);
        p.integrator_step = get("integrator_step", p.integrator_step);
        return make_neutral_slowdown(p);
    }
    if (name == "cat_map") {
        return make_cat_map();
    }
    throw ParameterOutOfRange("unknown system '" + name + "'");
}

nlohmann::json list_systems() {
    using nlohmann::json;
    json out = json::array();
    out.push_back({{"name", "solenoid"},
                   {"parameters", {"a", "alpha", "beta"}},
                   {"reference", "Smale-Williams solenoid on the solid torus"}});
    out.push_back({{"name", "lorenz_map"},
                   {"parameters", {"A", "B", "nu", "nu0"}},
                   {"reference", "geometric Lorenz return map (Afraimovich-Bykov-Shilnikov)"}});
    out.push_back({{"name", "lozi"},
                   {"parameters", {"a", "b", "c"}},
                   {"reference", "Lozi (1978), piecewise-affine Henon analogue"}});
    out.push_back({{"name", "belykh"},
                   {"parameters", {"lambda1", "lambda2", "mu1", "mu2", "k"}},
                   {"reference", "Belykh (1982), phase synchronization model"}});
    out.push_back({{"name", "neutral_slowdown"},
                   {"parameters", {"gamma", "beta", "alpha", "r0", "r1", "integrator_step"}},
                   {"reference", "Katok-type slowdown of a hyperbolic fixed point"}});
    out.push_back({{"name", "cat_map"},
                   {"parameters", json::array()},
                   {"reference", "Arnold cat map, analytic oracle (SRB measure = Lebesgue)"}});
    return out;
}

} // namespace srb
