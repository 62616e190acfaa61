#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "srb/runner.hpp"

using namespace srb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("srb_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig small_pushforward(const std::string& out) {
    ExperimentConfig cfg;
    cfg.kind = "pushforward-lebesgue";
    cfg.system = "cat_map";
    cfg.n = 40;
    cfg.ensemble = 1500;
    cfg.grid = {16, 16};
    cfg.has_seed = true;
    cfg.seed = 99;
    cfg.out_dir = out;
    return cfg;
}

} // namespace

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config json roundtrip") {
    json j = {{"kind", "lyapunov"},
              {"system", "solenoid"},
              {"params", {{"a", 0.5}}},
              {"n", 500},
              {"seed", 7},
              {"grid", {32, 32, 32}},
              {"workers", 2},
              {"out", "/tmp/x"},
              {"extra", {{"x0", {0.1, 0.1, 1.0}}}}};
    ExperimentConfig cfg = ExperimentConfig::from_json(j);
    CHECK(cfg.kind == "lyapunov");
    CHECK(cfg.system == "solenoid");
    CHECK(cfg.n == 500);
    CHECK(cfg.has_seed);
    CHECK(cfg.seed == 7);
    CHECK(cfg.workers == 2);
    CHECK(cfg.grid == std::vector<int>{32, 32, 32});
    CHECK(cfg.tol == 0.02); // default

    json back = cfg.to_json();
    CHECK(back.at("schema_version").get<int>() == 1);
    ExperimentConfig again = ExperimentConfig::from_json(back);
    CHECK(again.kind == cfg.kind);
    CHECK(again.seed == cfg.seed);
    CHECK(again.extra == cfg.extra);
}

TEST_CASE("validation reports every violation, not just the first") {
    ExperimentConfig cfg;
    cfg.kind = "frobnicate";
    cfg.system = "";
    cfg.n = -1;
    cfg.ensemble = -2;
    cfg.workers = 0;
    cfg.tol = 0.0;
    std::vector<std::string> diags = validate(cfg);
    CHECK(diags.size() == 7); // kind, seed, system, n, ensemble, workers, tol

    ExperimentConfig ok = small_pushforward("/tmp/unused");
    CHECK(validate(ok).empty());

    ExperimentConfig bad_grid = ok;
    bad_grid.grid = {16, 16, 16};
    CHECK(validate(bad_grid).size() == 1);

    ExperimentConfig core_smooth = ok;
    core_smooth.kind = "core-condition";
    core_smooth.system = "solenoid";
    core_smooth.grid.clear();
    CHECK(validate(core_smooth).size() == 1);
}

TEST_CASE("experiment kinds registry") {
    const auto& kinds = experiment_kinds();
    CHECK(kinds.size() == 8);
    CHECK(std::find(kinds.begin(), kinds.end(), "lyapunov") != kinds.end());
    CHECK(std::find(kinds.begin(), kinds.end(), "core-condition") != kinds.end());
}

TEST_CASE("run writes artifacts with correct hashes and is worker independent") {
    TempDir d1("run1"), d2("run2");
    ExperimentConfig a = small_pushforward(d1.path.string());
    ExperimentConfig b = small_pushforward(d2.path.string());
    b.workers = 3;
    REQUIRE(run(a) == 0);
    REQUIRE(run(b) == 0);

    json ma = json::parse(slurp(d1.path / "manifest.json"));
    json mb = json::parse(slurp(d2.path / "manifest.json"));
    CHECK(ma.at("status") == "ok");
    REQUIRE(ma.contains("artifacts"));
    REQUIRE(ma.at("artifacts").size() == mb.at("artifacts").size());
    CHECK(ma.at("artifacts").size() >= 4); // 3 checkpoint histograms + report

    for (std::size_t i = 0; i < ma.at("artifacts").size(); ++i) {
        const json& entry = ma.at("artifacts").at(i);
        std::string name = entry.at("file").get<std::string>();
        std::string content = slurp(d1.path / name);
        // Manifest hash matches the bytes on disk.
        std::ostringstream hash;
        hash << std::hex << fnv1a64(content);
        CHECK(entry.at("fnv1a64").get<std::string>() == hash.str());
        // Artifacts are byte-identical across worker counts.
        CHECK(content == slurp(d2.path / name));
        CHECK(mb.at("artifacts").at(i).at("fnv1a64") == entry.at("fnv1a64"));
    }
}

TEST_CASE("histogram artifact format: json header then csv") {
    TempDir d("hist");
    ExperimentConfig cfg = small_pushforward(d.path.string());
    REQUIRE(run(cfg) == 0);
    std::string content = slurp(d.path / "histogram_0.csv");
    std::istringstream in(content);
    std::string header_line, csv_header;
    REQUIRE(std::getline(in, header_line));
    json header = json::parse(header_line);
    CHECK(header.at("system") == "cat_map");
    CHECK(header.at("grid") == json({16, 16}));
    CHECK(header.at("seed").get<std::uint64_t>() == 99);
    REQUIRE(std::getline(in, csv_header));
    CHECK(csv_header == "cell_index,center_coord_0,center_coord_1,mass");
}

TEST_CASE("missing seed is a validation error with exit code 2") {
    TempDir d("noseed");
    ExperimentConfig cfg = small_pushforward(d.path.string());
    cfg.has_seed = false;
    CHECK(run(cfg) == 2);
    json manifest = json::parse(slurp(d.path / "manifest.json"));
    CHECK(manifest.at("status") == "validation_error");
    REQUIRE(manifest.contains("diagnostics"));
    CHECK(manifest.at("diagnostics").size() == 1);
}

TEST_CASE("numerical failure is exit code 3 with the error name recorded") {
    TempDir d("numfail");
    ExperimentConfig cfg;
    cfg.kind = "pushforward-lebesgue";
    cfg.system = "neutral_slowdown"; // nearly every orbit escapes immediately
    cfg.n = 40;
    cfg.ensemble = 64;
    cfg.grid = {16, 16};
    cfg.has_seed = true;
    cfg.seed = 1;
    cfg.out_dir = d.path.string();
    CHECK(run(cfg) == 3);
    json manifest = json::parse(slurp(d.path / "manifest.json"));
    CHECK(manifest.at("status") == "numerical_error");
    CHECK(manifest.at("error") == "DegenerateEnsemble");
}

TEST_CASE("lyapunov run end to end") {
    TempDir d("lyap");
    ExperimentConfig cfg;
    cfg.kind = "lyapunov";
    cfg.system = "solenoid";
    cfg.n = 2000;
    cfg.has_seed = true;
    cfg.seed = 7;
    cfg.out_dir = d.path.string();
    REQUIRE(run(cfg) == 0);
    json out = json::parse(slurp(d.path / "exponents.json"));
    REQUIRE(out.at("exponents").size() == 3);
    CHECK(out.at("exponents").at(0).get<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-4));
    CHECK(out.at("n_steps").get<int>() == 2000);
}
