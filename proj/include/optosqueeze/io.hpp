// io.hpp: run configuration files, CSV emitters, pulse persistence, result
// summaries and hashed run manifests.

#pragma once

#include "optosqueeze/experiments.hpp"
#include "optosqueeze/oracle.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace optosqueeze {

// ------------------------------------------------------------------ config

// Everything a CLI run needs. Field names double as config-file keys.
struct RunConfig {
    SystemParams params;
    OptimizerConfig optimizer;
    double t_final = 120.0;
    std::size_t n_bins = 0; // 0 selects default_bins(t_final)
    std::size_t steps_per_bin = 10;

    // sweeps
    std::vector<double> thetas_deg{0.0, 45.0, 90.0, 135.0};
    std::vector<double> kappas{0.5, 1.0, 1.5};
    std::vector<double> etas{-0.1, -0.05, 0.0, 0.05, 0.1};
    std::string pulse_file; // pulse for the deviation sweep

    // noise / decay / wigner
    double sigma_omega = 0.0;
    double sigma_phi = 0.0;
    std::size_t trials = 10;
    double t_end = 300.0;
    int wigner_points = 201;
    std::size_t trace_stride = 10;

    // oracle
    FockConfig fock;
    double oracle_n_bar = 0.2;
    double oracle_t_final = 10.0;
    std::size_t oracle_bins = 200;
    double oracle_peak_omega = 3500.0;

    std::string out_dir = "runs";

    std::size_t resolved_bins() const;
    SimulationOptions simulation() const;
};

// Default control resolution: bins of width 0.05, and never fewer than 600.
std::size_t default_bins(double t_final);

// Parses "key = value" lines; '#' starts a comment. Values are numbers,
// quoted or bare strings, booleans, or bracketed/comma-separated number lists.
// Unknown keys and malformed values throw Error(Config, key).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
// Round-trips through parse_config.
std::string serialize_config(const RunConfig& cfg);
void validate_run_config(const RunConfig& cfg);

// ------------------------------------------------------------------ CSV

// 17 significant digits, so doubles round-trip exactly.
std::string format_number(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(const std::vector<double>& row);
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::string body_;
};

std::string pulse_csv(const Pulse& pulse);
std::string loss_history_csv(const OptimizationResult& result);
std::string squeezing_csv(const std::vector<SqueezingSample>& trace);
std::string trajectory_csv(const Simulation& sim, std::size_t stride = 1);
std::string moments_csv(const MomentTrajectory& traj, std::size_t stride = 1);
std::string wigner_csv(const WignerField& field);
std::string gradient_csv(const ControlGradient& grad, const Pulse& pulse);
std::string decay_csv(const DecayTrace& trace);
std::string noise_csv(const NoiseTrials& trials);

struct LoadedPulse {
    Pulse pulse;
    std::vector<std::string> warnings;
};

// Reads a t,omega,phi table with times at bin left edges. If target_bins is
// nonzero and differs from the stored count, the pulse is re-binned by
// nearest neighbour and a warning is recorded.
LoadedPulse read_pulse_csv(const std::filesystem::path& path, std::size_t target_bins = 0);
LoadedPulse parse_pulse_csv(const std::string& text, std::size_t target_bins = 0);
Pulse rebin_nearest(const Pulse& pulse, std::size_t n_bins);

// ------------------------------------------------------------------ outputs

std::string result_json(const RunConfig& cfg, const OptimizationResult& result);

std::string sha256_hex(const std::string& bytes);

// Writes into one run directory and keeps an inventory of every file for the
// manifest. Each file is written to a temporary name and renamed into place.
class RunWriter {
public:
    explicit RunWriter(std::filesystem::path dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path write(const std::string& name, const std::string& content);
    // Writes manifest.json (atomically) listing every file written so far.
    std::filesystem::path finalize(const RunConfig& cfg, const std::string& command, std::uint64_t seed);
    const std::vector<std::string>& files() const noexcept { return names_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
    std::map<std::string, std::string> hashes_;
    std::map<std::string, std::size_t> sizes_;
    std::string started_;
};

void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

inline constexpr const char* kCodeVersion = "0.1.0";

} // namespace optosqueeze
