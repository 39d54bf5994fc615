#include "helpers.hpp"

#include "optosqueeze/io.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace optosqueeze;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("optosqueeze_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string config_error_field(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        return e.field();
    }
    return "ok";
}

} // namespace

TEST_CASE("config parsing") {
    const RunConfig cfg = parse_config(R"(
# comment line
kappa = 0.5          # trailing comment
g0 = 4e-5
seed = 17
grad_mode = "fd"
target_db = 3.2
t_final = 6
n_bins = 600
thetas_deg = [0, 90]
kappas = 0.5, 1.5
fock_nonlinear = true
out_dir = "some/where"
)");
    CHECK(cfg.params.kappa == 0.5);
    CHECK(cfg.optimizer.seed == 17);
    CHECK(cfg.optimizer.grad_mode == GradientMode::FiniteDifference);
    CHECK(cfg.optimizer.target_db == 3.2);
    CHECK(cfg.t_final == 6.0);
    CHECK(cfg.resolved_bins() == 600);
    CHECK(cfg.thetas_deg == std::vector<double>{0.0, 90.0});
    CHECK(cfg.kappas == std::vector<double>{0.5, 1.5});
    CHECK(cfg.fock.include_nonlinear);
    CHECK(cfg.out_dir == "some/where");
}

TEST_CASE("config errors name the key") {
    CHECK(config_error_field("kapa = 0.2\n") == "kapa");
    CHECK(config_error_field("kappa = fast\n") == "kappa");
    CHECK(config_error_field("seed = -3\n") == "seed");
    CHECK(config_error_field("grad_mode = adjoint\n") == "grad_mode");
    CHECK(config_error_field("kappa 0.2\n") == "");

    RunConfig bad = parse_config("kappa = 0\n");
    try {
        validate_run_config(bad);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        CHECK(e.field() == "kappa");
    }
}

TEST_CASE("config files load and the shipped ones validate") {
    for (const char* name : {"default.conf", "squeeze_3db.conf", "ultrafast.conf"}) {
        const RunConfig cfg = load_config(fs::path(OPTOSQUEEZE_SOURCE_DIR) / "configs" / name);
        CHECK_NOTHROW(validate_run_config(cfg));
    }
    CHECK_THROWS_AS(load_config("/nonexistent/file.conf"), Error);
}

TEST_CASE("config serialization round-trips bit for bit") {
    RunConfig cfg;
    cfg.params.g0 = 4.000000000000001e-5;
    cfg.params.kappa = 0.1 + 0.2;
    cfg.optimizer.theta = std::acos(-1.0) / 3.0;
    cfg.optimizer.seed = 123456789012345ULL;
    cfg.optimizer.grad_mode = GradientMode::PaperPointwise;
    cfg.thetas_deg = {1.0 / 3.0, 2.0};
    cfg.pulse_file = "dir with space/pulse.csv";
    cfg.fock.dt = 1e-3;
    const std::string text = serialize_config(cfg);
    const RunConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.params.g0 == cfg.params.g0);
    CHECK(back.params.kappa == cfg.params.kappa);
    CHECK(back.optimizer.theta == cfg.optimizer.theta);
    CHECK(back.optimizer.seed == cfg.optimizer.seed);
    CHECK(back.optimizer.grad_mode == cfg.optimizer.grad_mode);
    CHECK(back.thetas_deg == cfg.thetas_deg);
    CHECK(back.pulse_file == cfg.pulse_file);
}

TEST_CASE("settings override file values") {
    RunConfig cfg = parse_config("seed = 1\nkappa = 0.2\n");
    apply_setting(cfg, "seed", "9");
    apply_setting(cfg, "kappa", "1.5");
    CHECK(cfg.optimizer.seed == 9);
    CHECK(cfg.params.kappa == 1.5);
    CHECK_THROWS_AS(apply_setting(cfg, "nope", "1"), Error);
}

TEST_CASE("default bin count") {
    CHECK(default_bins(120.0) == 2400);
    CHECK(default_bins(6.0) == 600);
    CHECK(default_bins(1.0) == 600);
    RunConfig cfg;
    cfg.t_final = 120.0;
    CHECK(cfg.resolved_bins() == 2400);
}

TEST_CASE("numbers are written with 17 significant digits") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(1.0) == "1");
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
        CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
    }
    CsvTable t({"a", "b"});
    t.add_row({1.0, 0.25});
    CHECK(t.str() == "a,b\n1,0.25\n");
}

TEST_CASE("pulse CSV round trip and re-binning") {
    const Pulse pulse = testing_helpers::random_pulse(6.0, 12, 3000.0, 4);
    const std::string text = pulse_csv(pulse);
    CHECK(text.rfind("t,omega,phi\n", 0) == 0);
    const LoadedPulse back = parse_pulse_csv(text);
    CHECK(back.warnings.empty());
    CHECK(back.pulse.omega == pulse.omega);
    CHECK(back.pulse.phi == pulse.phi);
    CHECK(back.pulse.t_final == doctest::Approx(6.0).epsilon(1e-15));

    const LoadedPulse fine = parse_pulse_csv(text, 24);
    REQUIRE(fine.warnings.size() == 1);
    CHECK(fine.pulse.n_bins() == 24);
    CHECK(fine.pulse.omega[0] == pulse.omega[0]);
    CHECK(fine.pulse.omega[1] == pulse.omega[0]);
    CHECK(fine.pulse.omega[23] == pulse.omega[11]);

    const Pulse coarse = rebin_nearest(pulse, 6);
    CHECK(coarse.n_bins() == 6);
    CHECK(coarse.t_final == pulse.t_final);

    CHECK_THROWS_AS(parse_pulse_csv("time,omega,phi\n0,1,2\n0.5,1,2\n"), Error);
    CHECK_THROWS_AS(parse_pulse_csv("t,omega,phi\n0,1,2\n0.5,1\n"), Error);
    CHECK_THROWS_AS(parse_pulse_csv("t,omega,phi\n0,1,2\n0.5,1,2\n0.7,1,2\n"), Error);
}

TEST_CASE("CSV emitters") {
    SystemParams p;
    const Pulse pulse = testing_helpers::random_pulse(1.0, 4, 1000.0, 1);
    const Simulation sim = simulate(pulse, p);
    const std::string traj = trajectory_csv(sim, 10);
    std::istringstream in(traj);
    std::string header;
    std::getline(in, header);
    CHECK(std::count(header.begin(), header.end(), ',') == 1 + 4 + 20 - 1);
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 5);

    const auto trace = squeezing_trace(sim.moments, 1.0, 10);
    const std::string sq = squeezing_csv(trace);
    CHECK(sq.rfind("t,variance,S_b,n_b", 0) == 0);

    const ControlGradient g = loss_gradient(pulse, p, LossWeights::quadrature(1.0), GradientMode::FullChain);
    CHECK(gradient_csv(g, pulse).rfind("bin,t,dL_domega,dL_dphi\n", 0) == 0);

    // Same inputs, same bytes.
    CHECK(trajectory_csv(simulate(pulse, p), 10) == traj);
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run writer and manifest") {
    const fs::path dir = scratch_dir("writer");
    RunConfig cfg;
    cfg.optimizer.seed = 5;
    {
        RunWriter w(dir / "run");
        w.write("a.csv", "x\n1\n");
        w.write("sub/b.txt", "hello");
        const fs::path manifest = w.finalize(cfg, "optimize --config x", 5);
        CHECK(manifest.filename() == "manifest.json");
        CHECK(w.files().size() == 2);
    }
    const auto j = nlohmann::json::parse(read_file(dir / "run" / "manifest.json"));
    CHECK(j["seed"] == 5);
    CHECK(j["command"] == "optimize --config x");
    CHECK(j["code_version"] == kCodeVersion);
    CHECK(j["config"].get<std::string>() == serialize_config(cfg));
    REQUIRE(j["files"].size() == 2);
    for (const auto& f : j["files"]) {
        const std::string content = read_file(dir / "run" / f["path"].get<std::string>());
        CHECK(f["sha256"] == sha256_hex(content));
        CHECK(f["bytes"] == content.size());
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        CHECK(entry.path().extension() != ".tmp");
    }
    fs::remove_all(dir);
}

TEST_CASE("result summary") {
    SystemParams p;
    RunConfig cfg;
    cfg.optimizer.max_iters = 2;
    cfg.t_final = 1.0;
    cfg.n_bins = 10;
    const OptimizationResult r = optimize(p, cfg.optimizer, 1.0, 10);
    const auto j = nlohmann::json::parse(result_json(cfg, r));
    for (const char* key : {"params", "config", "seed", "grad_mode", "best_loss", "best_db", "iterations", "wall_time"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["best_loss"].get<double>() == r.best_loss);
    CHECK(j["params"]["kappa"].get<double>() == p.kappa);
    CHECK(j["grad_mode"] == "full-chain");
}
