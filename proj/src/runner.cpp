#include "srb/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "srb/density.hpp"
#include "srb/hyperbolicity.hpp"
#include "srb/measures.hpp"
#include "srb/rng.hpp"
#include "srb/singular.hpp"
#include "srb/systems.hpp"

namespace srb {

namespace {

using nlohmann::json;

const std::vector<std::string> kKinds = {
    "lyapunov",       "pushforward-lebesgue", "pushforward-leaf",
    "density-check",  "eh-diagnostics",       "core-condition",
    "basin",          "entropy-check"};

std::vector<int> default_grid(int dimension) {
    return std::vector<int>(static_cast<std::size_t>(dimension),
                            dimension >= 3 ? 32 : 64);
}

int default_n(const std::string& kind) {
    if (kind == "lyapunov") return 100000;
    if (kind == "entropy-check") return 10000;
    if (kind == "eh-diagnostics") return 5000;
    if (kind == "core-condition") return 8;
    if (kind == "basin") return 10000;
    return 1000; // push-forward family
}

int default_ensemble(const std::string& kind) {
    if (kind == "entropy-check") return 16;
    return 10000;
}

Vec vec_from_json(const json& j) {
    Vec v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

json vec_to_json(const Vec& v) {
    json j = json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

Cone cone_from_json(const json& j) {
    return Cone(vec_from_json(j.at("center")), j.at("half_angle").get<double>());
}

Vec unit(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return Vec(v / v.norm());
}

bool default_cones(const SystemHandle& sys, Cone* unstable, Cone* stable) {
    const double phi_u = (std::sqrt(5.0) - 1.0) / 2.0;
    const double phi_s = -(std::sqrt(5.0) + 1.0) / 2.0;
    if (sys.name == "cat_map") {
        *unstable = Cone(unit({1.0, phi_u}), 0.3);
        *stable = Cone(unit({1.0, phi_s}), 0.3);
        return true;
    }
    if (sys.name == "belykh") {
        *unstable = Cone(unit({0.0, 1.0}), 0.5);
        *stable = Cone(unit({1.0, 0.0}), 0.5);
        return true;
    }
    if (sys.name == "lozi") {
        *unstable = Cone(unit({1.0, 0.0}), 0.7);
        *stable = Cone(unit({0.0, 1.0}), 0.7);
        return true;
    }
    if (sys.name == "lorenz_map") {
        double B = sys.parameters.at("B").get<double>();
        double A = sys.parameters.at("A").get<double>();
        *unstable = Cone(unit({-B / (1.0 + A), 1.0}), 0.6);
        *stable = Cone(unit({1.0, 0.0}), 0.3);
        return true;
    }
    if (sys.name == "solenoid") {
        *unstable = Cone(unit({0.0, 0.0, 1.0}), 0.6);
        *stable = Cone(unit({1.0, 0.0, 0.0}), 0.7);
        return true;
    }
    return false;
}

Vec default_leaf_seed(const SystemHandle& sys) {
    if (sys.name == "solenoid") return vec_from_json(json{0.1, 0.1, 1.0});
    if (sys.name == "cat_map") return vec_from_json(json{0.2, 0.3});
    Vec c = sys.trapping_region.center();
    for (int i = 0; i < c.size(); ++i) c[i] += 0.1 * sys.trapping_region.width(i);
    return c;
}

std::string histogram_file(const SystemHandle& sys, const GridHistogram& h, int n,
                           std::uint64_t seed, int checkpoint) {
    json header = {{"system", sys.name},    {"parameters", sys.parameters},
                   {"grid", h.resolution},  {"n", n},
                   {"seed", seed},          {"checkpoint", checkpoint}};
    std::ostringstream out;
    out << header.dump() << "\n";
    out.precision(17);
    out << "cell_index";
    for (int i = 0; i < h.dimension(); ++i) out << ",center_coord_" << i;
    out << ",mass\n";
    for (std::size_t c = 0; c < h.masses.size(); ++c) {
        if (h.masses[c] == 0.0) continue;
        Vec center = h.cell_center(static_cast<long>(c));
        out << c;
        for (int i = 0; i < h.dimension(); ++i) out << "," << center[i];
        out << "," << h.masses[c] << "\n";
    }
    return out.str();
}

struct LeafSpec {
    Vec x_seed;
    double target_length = 0.5;
    int n_grow = 20;
    Cone cone;
};

LeafSpec leaf_spec(const SystemHandle& sys, const ExperimentConfig& cfg) {
    LeafSpec spec;
    Cone cu, cs;
    if (cfg.extra.contains("cone")) {
        spec.cone = cone_from_json(cfg.extra.at("cone"));
    } else if (default_cones(sys, &cu, &cs)) {
        spec.cone = cu;
    } else {
        throw LeafConstructionFailed("no cone configured for system '" + sys.name + "'");
    }
    spec.x_seed = cfg.extra.contains("x_seed") ? vec_from_json(cfg.extra.at("x_seed"))
                                               : default_leaf_seed(sys);
    if (sys.name == "solenoid") {
        // The theta axis carries most of the arc length; span many grid
        // cells so the arc-length binning resolves the profile.
        spec.target_length = 3.0;
        spec.n_grow = 24;
    }
    if (cfg.extra.contains("target_length")) {
        spec.target_length = cfg.extra.at("target_length").get<double>();
    }
    if (cfg.extra.contains("n_grow")) spec.n_grow = cfg.extra.at("n_grow").get<int>();
    return spec;
}

using Artifacts = std::vector<std::pair<std::string, std::string>>;

json checkpoint_report(const SystemHandle& sys, const Checkpoints& cps,
                       const TestFunctionSuite& suite, std::uint64_t seed) {
    std::vector<double> dists;
    for (std::size_t c = 0; c + 1 < cps.histograms.size(); ++c) {
        dists.push_back(weak_star_distance(cps.histograms[c], cps.histograms[c + 1], suite));
    }
    DefectEstimate defect =
        invariance_defect(sys, cps.histograms.back(), suite, 8, seed ^ 0xdefec7ULL);
    return json{{"checkpoints", cps.steps},
                {"weak_star_distances", dists},
                {"invariance_defect", defect.value},
                {"invariance_defect_error_bar", defect.error_bar}};
}

void run_kind(const SystemHandle& sys, const ExperimentConfig& cfg, int n,
              int ensemble, const std::vector<int>& grid, Artifacts* artifacts) {
    const TestFunctionSuite suite = TestFunctionSuite::standard(sys.trapping_region);

    if (cfg.kind == "lyapunov") {
        Vec x0 = cfg.extra.contains("x0") ? vec_from_json(cfg.extra.at("x0"))
                                          : sample_domain_point(sys, cfg.seed, 0);
        LyapunovEstimate est = lyapunov_spectrum(sys, x0, n);
        json out = {{"system", sys.name},       {"parameters", sys.parameters},
                    {"n", n},                   {"seed", cfg.seed},
                    {"x0", vec_to_json(x0)},    {"exponents", est.exponents},
                    {"n_steps", est.n_steps},   {"truncated", est.truncated},
                    {"mean_log_det", est.mean_log_det}};
        artifacts->emplace_back("exponents.json", out.dump(2) + "\n");
        return;
    }

    if (cfg.kind == "entropy-check") {
        std::vector<std::pair<LyapunovEstimate, double>> samples;
        json per_sample = json::array();
        for (int i = 0; i < ensemble; ++i) {
            Vec x0 = sample_domain_point(sys, cfg.seed, static_cast<std::uint64_t>(i));
            LyapunovEstimate est = lyapunov_spectrum(sys, x0, n);
            per_sample.push_back({{"exponents", est.exponents},
                                  {"truncated", est.truncated},
                                  {"n_steps", est.n_steps}});
            samples.emplace_back(std::move(est), 1.0);
        }
        double rhs = entropy_formula_rhs(samples);
        json out = {{"system", sys.name},   {"parameters", sys.parameters},
                    {"n", n},               {"ensemble", ensemble},
                    {"seed", cfg.seed},     {"entropy_rhs", rhs},
                    {"samples", per_sample}};
        artifacts->emplace_back("entropy.json", out.dump(2) + "\n");
        return;
    }

    if (cfg.kind == "pushforward-lebesgue") {
        Checkpoints cps = pushforward_lebesgue(sys, n, ensemble, grid, cfg.seed, cfg.workers);
        for (std::size_t c = 0; c < cps.histograms.size(); ++c) {
            artifacts->emplace_back(
                "histogram_" + std::to_string(c) + ".csv",
                histogram_file(sys, cps.histograms[c], n, cfg.seed, cps.steps[c]));
        }
        json report = checkpoint_report(sys, cps, suite, cfg.seed);
        report["system"] = sys.name;
        report["ensemble"] = ensemble;
        report["n"] = n;
        report["seed"] = cfg.seed;
        artifacts->emplace_back("report.json", report.dump(2) + "\n");
        return;
    }

    if (cfg.kind == "pushforward-leaf" || cfg.kind == "density-check") {
        LeafSpec spec = leaf_spec(sys, cfg);
        LeafSegment leaf = construct_unstable_leaf(sys, spec.x_seed, spec.target_length,
                                                   spec.n_grow, spec.cone);
        Checkpoints cps = pushforward_leaf(sys, leaf, n, grid, cfg.workers);
        if (cfg.kind == "pushforward-leaf") {
            for (std::size_t c = 0; c < cps.histograms.size(); ++c) {
                artifacts->emplace_back(
                    "histogram_" + std::to_string(c) + ".csv",
                    histogram_file(sys, cps.histograms[c], n, cfg.seed, cps.steps[c]));
            }
            json report = checkpoint_report(sys, cps, suite, cfg.seed);
            report["system"] = sys.name;
            report["n"] = n;
            report["seed"] = cfg.seed;
            report["leaf_length"] = leaf.length;
            report["leaf_samples"] = leaf.samples.size();
            artifacts->emplace_back("report.json", report.dump(2) + "\n");
            return;
        }
        DensityProfile profile = conditional_density_profile(sys, leaf);
        double band = std::numeric_limits<double>::infinity();
        for (int i = 0; i < sys.dimension; ++i) {
            band = std::min(band, 2.0 * cps.histograms.back().cell_width(i));
        }
        if (cfg.extra.contains("band_width")) {
            band = cfg.extra.at("band_width").get<double>();
        }
        double discrepancy =
            absolute_continuity_check(sys, leaf, cps.histograms.back(), profile, band);
        artifacts->emplace_back("profile.csv", profile_to_csv(profile));
        json report = {{"system", sys.name},       {"parameters", sys.parameters},
                       {"n", n},                   {"seed", cfg.seed},
                       {"band_width", band},       {"discrepancy", discrepancy},
                       {"normalizer", profile.normalizer},
                       {"leaf_length", leaf.length},
                       {"leaf_samples", leaf.samples.size()}};
        artifacts->emplace_back("report.json", report.dump(2) + "\n");
        return;
    }

    if (cfg.kind == "eh-diagnostics") {
        ConeField field;
        Cone cu, cs;
        if (cfg.extra.contains("unstable_cone") && cfg.extra.contains("stable_cone")) {
            cu = cone_from_json(cfg.extra.at("unstable_cone"));
            cs = cone_from_json(cfg.extra.at("stable_cone"));
        } else if (!default_cones(sys, &cu, &cs)) {
            throw ParameterOutOfRange("no cone field configured for '" + sys.name + "'");
        }
        field.unstable = [cu](const Vec&) { return cu; };
        field.stable = [cs](const Vec&) { return cs; };
        Orbit orbit;
        for (std::uint64_t i = 0; i < 50; ++i) {
            Vec x0 = cfg.extra.contains("x0") ? vec_from_json(cfg.extra.at("x0"))
                                              : sample_domain_point(sys, cfg.seed, i);
            orbit = iterate_orbit(sys, x0, n);
            if (static_cast<int>(orbit.points.size()) >= 100 || cfg.extra.contains("x0")) break;
        }
        double holder_alpha = cfg.extra.value("holder_alpha", 1.0);
        double lambda_bar = cfg.extra.value("lambda_bar", 0.0);
        std::vector<double> thresholds = {0.1, 0.2, 0.3};
        if (cfg.extra.contains("angle_thresholds")) {
            thresholds = cfg.extra.at("angle_thresholds").get<std::vector<double>>();
        }
        HyperbolicityReport report =
            eh_diagnostics(sys, orbit, field, holder_alpha, lambda_bar, thresholds);
        json out = report_to_json(report);
        out["system"] = sys.name;
        out["parameters"] = sys.parameters;
        out["n"] = n;
        out["seed"] = cfg.seed;
        artifacts->emplace_back("report.json", out.dump(2) + "\n");
        artifacts->emplace_back("rates.csv", report_rates_csv(report));
        return;
    }

    if (cfg.kind == "core-condition") {
        std::vector<double> eps_grid;
        if (cfg.extra.contains("eps_grid")) {
            eps_grid = cfg.extra.at("eps_grid").get<std::vector<double>>();
        } else {
            for (int e = 4; e <= 10; ++e) eps_grid.push_back(std::pow(2.0, -e));
        }
        CoreConditionFit fit = core_condition_estimate(sys, n, eps_grid, ensemble, cfg.seed);
        artifacts->emplace_back("core_fit.json",
                                core_fit_to_json(sys, fit, cfg.seed).dump(2) + "\n");
        json blowup;
        try {
            SingularBlowupCheck check = blowup_constants(sys, 120, cfg.seed ^ 0xb10bULL);
            blowup = {{"C1", check.C1},
                      {"alpha1", check.alpha1},
                      {"forward_bounded", check.forward_bounded},
                      {"backward_available", check.backward_available},
                      {"backward_bounded", check.backward_bounded},
                      {"C2", check.C2},
                      {"alpha2", check.alpha2}};
        } catch (const Error& e) {
            blowup = {{"error", e.name()}, {"message", e.what()}};
        }
        artifacts->emplace_back("blowup.json", blowup.dump(2) + "\n");
        return;
    }

    if (cfg.kind == "basin") {
        int mu_n = cfg.extra.value("mu_n", 2000);
        int mu_ensemble = cfg.extra.value("mu_ensemble", 20000);
        Checkpoints cps = pushforward_lebesgue(sys, mu_n, mu_ensemble, grid,
                                               cfg.seed ^ 0x6d75ULL, cfg.workers);
        double fraction = basin_fraction(sys, cps.histograms.back(), suite, ensemble, n,
                                         cfg.tol, cfg.seed, cfg.workers);
        json out = {{"system", sys.name},   {"parameters", sys.parameters},
                    {"n", n},               {"sample", ensemble},
                    {"tol", cfg.tol},       {"seed", cfg.seed},
                    {"mu_n", mu_n},         {"mu_ensemble", mu_ensemble},
                    {"basin_fraction", fraction}};
        artifacts->emplace_back("basin.json", out.dump(2) + "\n");
        return;
    }

    throw ParameterOutOfRange("unknown experiment kind '" + cfg.kind + "'");
}

} // namespace

const std::vector<std::string>& experiment_kinds() { return kKinds; }

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string library_version() { return "0.1.0"; }

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.kind = j.value("kind", "");
    cfg.system = j.value("system", "");
    cfg.params = j.value("params", json::object());
    cfg.n = j.value("n", 0);
    cfg.ensemble = j.value("ensemble", 0);
    if (j.contains("grid")) cfg.grid = j.at("grid").get<std::vector<int>>();
    cfg.tol = j.value("tol", 0.02);
    if (j.contains("seed")) {
        cfg.has_seed = true;
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    cfg.workers = j.value("workers", 1);
    cfg.out_dir = j.value("out", ".");
    cfg.extra = j.value("extra", json::object());
    return cfg;
}

json ExperimentConfig::to_json() const {
    json j = {{"schema_version", 1}, {"kind", kind},     {"system", system},
              {"params", params},    {"n", n},           {"ensemble", ensemble},
              {"tol", tol},          {"workers", workers}, {"out", out_dir},
              {"extra", extra}};
    if (!grid.empty()) j["grid"] = grid;
    if (has_seed) j["seed"] = seed;
    return j;
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> diags;
    if (cfg.kind.empty()) {
        diags.push_back("missing experiment kind");
    } else if (std::find(kKinds.begin(), kKinds.end(), cfg.kind) == kKinds.end()) {
        diags.push_back("unknown experiment kind '" + cfg.kind + "'");
    }
    if (!cfg.has_seed) diags.push_back("seed is mandatory");
    if (cfg.system.empty()) {
        diags.push_back("missing system name");
    } else {
        try {
            SystemHandle sys = make_system(cfg.system, cfg.params);
            if (!cfg.grid.empty() &&
                static_cast<int>(cfg.grid.size()) != sys.dimension) {
                diags.push_back("grid rank does not match system dimension");
            }
            if (cfg.kind == "core-condition" && !sys.is_singular()) {
                diags.push_back("core-condition requires a singular system");
            }
        } catch (const Error& e) {
            diags.push_back(e.name() + ": " + e.what());
        }
    }
    if (cfg.n < 0) diags.push_back("n must be nonnegative");
    if (cfg.ensemble < 0) diags.push_back("ensemble must be nonnegative");
    if (cfg.workers < 1) diags.push_back("workers must be at least 1");
    if (!(cfg.tol > 0.0)) diags.push_back("tol must be positive");
    for (int g : cfg.grid) {
        if (g <= 0) {
            diags.push_back("grid resolutions must be positive");
            break;
        }
    }
    return diags;
}

int run(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);

    json manifest;
    manifest["config"] = cfg.to_json();
    manifest["version"] = library_version();

    auto finish = [&](int code) {
        auto t1 = std::chrono::steady_clock::now();
        manifest["wall_time_seconds"] =
            std::chrono::duration<double>(t1 - t0).count();
        std::ofstream out(fs::path(cfg.out_dir) / "manifest.json");
        out << manifest.dump(2) << "\n";
        return code;
    };

    std::vector<std::string> diags = validate(cfg);
    if (!diags.empty()) {
        manifest["status"] = "validation_error";
        manifest["diagnostics"] = diags;
        return finish(2);
    }

    try {
        SystemHandle sys = make_system(cfg.system, cfg.params);
        int n = cfg.n > 0 ? cfg.n : default_n(cfg.kind);
        int ensemble = cfg.ensemble > 0 ? cfg.ensemble : default_ensemble(cfg.kind);
        std::vector<int> grid = cfg.grid.empty() ? default_grid(sys.dimension) : cfg.grid;

        Artifacts artifacts;
        run_kind(sys, cfg, n, ensemble, grid, &artifacts);

        json listing = json::array();
        for (const auto& [name, content] : artifacts) {
            std::ofstream out(fs::path(cfg.out_dir) / name, std::ios::binary);
            out << content;
            std::ostringstream hash;
            hash << std::hex << fnv1a64(content);
            listing.push_back({{"file", name}, {"fnv1a64", hash.str()}});
        }
        manifest["artifacts"] = listing;
        manifest["status"] = "ok";
        return finish(0);
    } catch (const Error& e) {
        manifest["status"] = "numerical_error";
        manifest["error"] = e.name();
        manifest["message"] = e.what();
        return finish(3);
    }
}

} // namespace srb
