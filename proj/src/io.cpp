#include "optosqueeze/io.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace optosqueeze {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& what) {
    throw Error(ErrorKind::Config, "config key '" + key + "': " + what + " (got '" + value + "')", key);
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, value, "expected a number");
    return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        bad_value(key, value, "expected a non-negative integer");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, value, "expected true or false");
}

std::string parse_string(const std::string& value) {
    std::string v = trim(value);
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
        v = v.substr(1, v.size() - 2);
    }
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::string v = trim(value);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') bad_value(key, value, "unterminated list");
        v = v.substr(1, v.size() - 2);
    }
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_double(key, item));
    }
    return out;
}

std::string list_text(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out + "]";
}

std::string quote_text(const std::string& s) { return "\"" + s + "\""; }

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field real_field(const char* key, Member member) {
    return {key, [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_double(k, v); },
            [member](const RunConfig& c) { return format_number(member(const_cast<RunConfig&>(c))); }};
}

template <typename T, typename Member>
Field count_field(const char* key, Member member) {
    return {key,
            [member](RunConfig& c, const std::string& k, const std::string& v) {
                member(c) = static_cast<T>(parse_unsigned(k, v));
            },
            [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field list_field(const char* key, Member member) {
    return {key, [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_list(k, v); },
            [member](const RunConfig& c) { return list_text(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field string_field(const char* key, Member member) {
    return {key, [member](RunConfig& c, const std::string&, const std::string& v) { member(c) = parse_string(v); },
            [member](const RunConfig& c) { return quote_text(member(const_cast<RunConfig&>(c))); }};
}

#define REF(expr) [](RunConfig& c) -> auto& { return expr; }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        real_field("omega_m", REF(c.params.omega_m)),
        real_field("g0", REF(c.params.g0)),
        real_field("kappa", REF(c.params.kappa)),
        real_field("gamma", REF(c.params.gamma)),
        real_field("delta_c", REF(c.params.delta_c)),
        real_field("n_bar_m", REF(c.params.n_bar_m)),
        real_field("theta", REF(c.optimizer.theta)),
        real_field("target_db", REF(c.optimizer.target_db)),
        real_field("epsilon", REF(c.optimizer.epsilon)),
        count_field<std::size_t>("max_iters", REF(c.optimizer.max_iters)),
        real_field("chi_omega", REF(c.optimizer.chi_omega)),
        real_field("chi_phi", REF(c.optimizer.chi_phi)),
        real_field("grow", REF(c.optimizer.grow)),
        real_field("shrink", REF(c.optimizer.shrink)),
        count_field<std::uint64_t>("seed", REF(c.optimizer.seed)),
        real_field("init_scale", REF(c.optimizer.init_scale)),
        count_field<int>("init_harmonics", REF(c.optimizer.init_harmonics)),
        {"grad_mode",
         [](RunConfig& c, const std::string&, const std::string& v) {
             c.optimizer.grad_mode = parse_gradient_mode(parse_string(v));
         },
         [](const RunConfig& c) { return quote_text(std::string(to_string(c.optimizer.grad_mode))); }},
        count_field<std::size_t>("max_retries", REF(c.optimizer.max_retries)),
        count_field<std::size_t>("stall_window", REF(c.optimizer.stall_window)),
        real_field("stall_tolerance", REF(c.optimizer.stall_tolerance)),
        real_field("auto_step_omega", REF(c.optimizer.auto_step_omega)),
        real_field("auto_step_phi", REF(c.optimizer.auto_step_phi)),
        real_field("t_final", REF(c.t_final)),
        count_field<std::size_t>("n_bins", REF(c.n_bins)),
        count_field<std::size_t>("steps_per_bin", REF(c.steps_per_bin)),
        list_field("thetas_deg", REF(c.thetas_deg)),
        list_field("kappas", REF(c.kappas)),
        list_field("etas", REF(c.etas)),
        string_field("pulse_file", REF(c.pulse_file)),
        real_field("sigma_omega", REF(c.sigma_omega)),
        real_field("sigma_phi", REF(c.sigma_phi)),
        count_field<std::size_t>("trials", REF(c.trials)),
        real_field("t_end", REF(c.t_end)),
        count_field<int>("wigner_points", REF(c.wigner_points)),
        count_field<std::size_t>("trace_stride", REF(c.trace_stride)),
        count_field<int>("fock_dim_a", REF(c.fock.dim_a)),
        count_field<int>("fock_dim_b", REF(c.fock.dim_b)),
        {"fock_nonlinear",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.fock.include_nonlinear = parse_bool(k, v); },
         [](const RunConfig& c) { return std::string(c.fock.include_nonlinear ? "true" : "false"); }},
        real_field("fock_dt", REF(c.fock.dt)),
        real_field("oracle_n_bar", REF(c.oracle_n_bar)),
        real_field("oracle_t_final", REF(c.oracle_t_final)),
        count_field<std::size_t>("oracle_bins", REF(c.oracle_bins)),
        real_field("oracle_peak_omega", REF(c.oracle_peak_omega)),
        string_field("out_dir", REF(c.out_dir)),
    };
    return table;
}

#undef REF

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json params_json(const SystemParams& p) {
    return {{"omega_m", p.omega_m}, {"g0", p.g0},           {"kappa", p.kappa},
            {"gamma", p.gamma},     {"delta_c", p.delta_c}, {"n_bar_m", p.n_bar_m}};
}

json optimizer_json(const RunConfig& c) {
    const OptimizerConfig& o = c.optimizer;
    return {{"theta", o.theta},
            {"target_db", o.target_db},
            {"epsilon", o.loss_target()},
            {"max_iters", o.max_iters},
            {"chi_omega", o.chi_omega},
            {"chi_phi", o.chi_phi},
            {"grow", o.grow},
            {"shrink", o.shrink},
            {"seed", o.seed},
            {"init_scale", o.init_scale},
            {"init_harmonics", o.init_harmonics},
            {"grad_mode", std::string(to_string(o.grad_mode))},
            {"max_retries", o.max_retries},
            {"stall_window", o.stall_window},
            {"t_final", c.t_final},
            {"n_bins", c.resolved_bins()},
            {"steps_per_bin", c.steps_per_bin}};
}

} // namespace

// ------------------------------------------------------------------ config

std::size_t default_bins(double t_final) {
    return std::max<std::size_t>(600, static_cast<std::size_t>(std::llround(t_final / 0.05)));
}

std::size_t RunConfig::resolved_bins() const { return n_bins ? n_bins : default_bins(t_final); }

SimulationOptions RunConfig::simulation() const {
    SimulationOptions s;
    s.integrator.steps_per_bin = steps_per_bin;
    return s;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const Field& f : fields()) {
        if (key == f.key) {
            f.set(cfg, key, value);
            return;
        }
    }
    throw Error(ErrorKind::Config, "unknown config key '" + key + "'", key);
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Strip comments outside quotes.
        bool in_quotes = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quotes = !in_quotes;
            if (line[i] == '#' && !in_quotes) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": empty key");
        apply_setting(cfg, key, value);
    }
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path.string(), "config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
    return out;
}

void validate_run_config(const RunConfig& cfg) {
    try {
        validate_params(cfg.params);
        validate_config(cfg.optimizer);
        validate_fock_config(cfg.fock);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what(), e.field());
    }
    if (!(cfg.t_final > 0.0)) throw Error(ErrorKind::Config, "t_final must be positive", "t_final");
    if (cfg.resolved_bins() < 2) throw Error(ErrorKind::Config, "n_bins must be >= 2", "n_bins");
    if (cfg.steps_per_bin < 1) throw Error(ErrorKind::Config, "steps_per_bin must be >= 1", "steps_per_bin");
    if (cfg.trials < 1) throw Error(ErrorKind::Config, "trials must be >= 1", "trials");
}

// ------------------------------------------------------------------ CSV

std::string format_number(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

void CsvTable::add_row(const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) body_ += ',';
        body_ += format_number(row[i]);
    }
    body_ += '\n';
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    return out + "\n" + body_;
}

std::string pulse_csv(const Pulse& pulse) {
    CsvTable t({"t", "omega", "phi"});
    for (std::size_t k = 0; k < pulse.n_bins(); ++k) t.add_row({pulse.bin_start(k), pulse.omega[k], pulse.phi[k]});
    return t.str();
}

std::string loss_history_csv(const OptimizationResult& result) {
    CsvTable t({"iteration", "loss", "S_b", "chi_omega", "chi_phi"});
    for (const auto& r : result.history) {
        t.add_row({static_cast<double>(r.iteration), r.loss, squeezing_degree(r.loss), r.chi_omega, r.chi_phi});
    }
    return t.str();
}

std::string squeezing_csv(const std::vector<SqueezingSample>& trace) {
    CsvTable t({"t", "variance", "S_b", "n_b", "re_bdbd", "im_bdbd"});
    for (const auto& s : trace) {
        t.add_row({s.t, s.variance, s.degree_db, s.mean_phonon, s.moment_bb.real(), s.moment_bb.imag()});
    }
    return t.str();
}

namespace {
const char* const kMomentNames[10] = {"ada", "bdb", "adb", "abd", "adad", "adbd", "bdbd", "aa", "ab", "bb"};
}

std::string trajectory_csv(const Simulation& sim, std::size_t stride) {
    std::vector<std::string> header{"t", "re_alpha", "im_alpha", "re_beta", "im_beta"};
    for (const char* m : kMomentNames) {
        header.push_back(std::string("re_") + m);
        header.push_back(std::string("im_") + m);
    }
    CsvTable t(header);
    stride = std::max<std::size_t>(stride, 1);
    const std::size_t n = sim.moments.moments.size();
    const auto row = [&](std::size_t i) {
        const MeanFieldState& s = sim.meanfield.states[i];
        std::vector<double> r{sim.moments.grid.time(i), s.alpha.real(), s.alpha.imag(), s.beta.real(), s.beta.imag()};
        for (int m = 0; m < 10; ++m) {
            r.push_back(sim.moments.moments[i][m].real());
            r.push_back(sim.moments.moments[i][m].imag());
        }
        t.add_row(r);
    };
    for (std::size_t i = 0; i < n; i += stride) row(i);
    if (n > 0 && (n - 1) % stride != 0) row(n - 1);
    return t.str();
}

std::string moments_csv(const MomentTrajectory& traj, std::size_t stride) {
    std::vector<std::string> header{"t"};
    for (const char* m : kMomentNames) {
        header.push_back(std::string("re_") + m);
        header.push_back(std::string("im_") + m);
    }
    CsvTable t(header);
    stride = std::max<std::size_t>(stride, 1);
    const std::size_t n = traj.moments.size();
    const auto row = [&](std::size_t i) {
        std::vector<double> r{traj.grid.time(i)};
        for (int m = 0; m < 10; ++m) {
            r.push_back(traj.moments[i][m].real());
            r.push_back(traj.moments[i][m].imag());
        }
        t.add_row(r);
    };
    for (std::size_t i = 0; i < n; i += stride) row(i);
    if (n > 0 && (n - 1) % stride != 0) row(n - 1);
    return t.str();
}

std::string wigner_csv(const WignerField& field) {
    CsvTable t({"D_R", "D_I", "W"});
    for (std::size_t i = 0; i < field.grid_re.size(); ++i) {
        for (std::size_t j = 0; j < field.grid_im.size(); ++j) {
            t.add_row({field.grid_re[i], field.grid_im[j],
                       field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
        }
    }
    return t.str();
}

std::string gradient_csv(const ControlGradient& grad, const Pulse& pulse) {
    CsvTable t({"bin", "t", "dL_domega", "dL_dphi"});
    for (std::size_t k = 0; k < grad.n_bins(); ++k) {
        t.add_row({static_cast<double>(k), pulse.bin_start(k), grad.d_omega[k], grad.d_phi[k]});
    }
    return t.str();
}

std::string decay_csv(const DecayTrace& trace) {
    CsvTable t({"t", "S_b_fixed", "S_b_corotating", "S_b_best", "n_b"});
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        t.add_row({trace.times[i], trace.fixed_db[i], trace.corotating_db[i], trace.best_db[i], trace.mean_phonon[i]});
    }
    return t.str();
}

std::string noise_csv(const NoiseTrials& trials) {
    std::vector<std::string> header{"t", "baseline", "mean"};
    for (std::size_t k = 0; k < trials.trial_db.size(); ++k) header.push_back("trial_" + std::to_string(k));
    CsvTable t(header);
    for (std::size_t i = 0; i < trials.times.size(); ++i) {
        std::vector<double> r{trials.times[i], trials.baseline_db[i], trials.mean_db[i]};
        for (const auto& c : trials.trial_db) r.push_back(c[i]);
        t.add_row(r);
    }
    return t.str();
}

Pulse rebin_nearest(const Pulse& pulse, std::size_t n_bins) {
    Pulse out(pulse.t_final, std::vector<double>(n_bins), std::vector<double>(n_bins));
    const double src = static_cast<double>(pulse.n_bins());
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double centre = (static_cast<double>(k) + 0.5) / static_cast<double>(n_bins);
        const auto j = std::min(pulse.n_bins() - 1, static_cast<std::size_t>(centre * src));
        out.omega[k] = pulse.omega[j];
        out.phi[k] = pulse.phi[j];
    }
    return out;
}

LoadedPulse parse_pulse_csv(const std::string& text, std::size_t target_bins) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "t,omega,phi") {
        throw Error(ErrorKind::Config, "pulse file must start with the header t,omega,phi", "pulse");
    }
    std::vector<double> ts;
    LoadedPulse out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::vector<double> row = parse_list("pulse", line);
        if (row.size() != 3) throw Error(ErrorKind::Config, "pulse row needs 3 columns: " + line, "pulse");
        ts.push_back(row[0]);
        out.pulse.omega.push_back(row[1]);
        out.pulse.phi.push_back(row[2]);
    }
    if (ts.size() < 2) throw Error(ErrorKind::Config, "pulse file needs at least 2 bins", "pulse");
    const double width = ts[1] - ts[0];
    if (!(width > 0.0) || std::abs(ts[0]) > 1e-12 * std::max(1.0, width)) {
        throw Error(ErrorKind::Config, "pulse times must start at 0 and increase", "pulse");
    }
    for (std::size_t k = 1; k < ts.size(); ++k) {
        const double expected = width * static_cast<double>(k);
        if (std::abs(ts[k] - expected) > 1e-9 * std::max(1.0, expected)) {
            throw Error(ErrorKind::Config, "pulse times are not uniform", "pulse");
        }
    }
    out.pulse.t_final = width * static_cast<double>(ts.size());
    if (target_bins != 0 && target_bins != out.pulse.n_bins()) {
        out.warnings.push_back("pulse has " + std::to_string(out.pulse.n_bins()) + " bins; re-binned to " +
                               std::to_string(target_bins) + " by nearest neighbour");
        out.pulse = rebin_nearest(out.pulse, target_bins);
    }
    return out;
}

LoadedPulse read_pulse_csv(const fs::path& path, std::size_t target_bins) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot read pulse file " + path.string(), "pulse");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_pulse_csv(ss.str(), target_bins);
}

// ------------------------------------------------------------------ outputs

std::string result_json(const RunConfig& cfg, const OptimizationResult& result) {
    json j;
    j["params"] = params_json(cfg.params);
    j["config"] = optimizer_json(cfg);
    j["seed"] = result.seed;
    j["grad_mode"] = std::string(to_string(result.gradient_mode));
    j["best_loss"] = result.best_loss;
    j["best_db"] = squeezing_degree(result.best_loss);
    j["iterations"] = result.iterations;
    j["wall_time"] = result.wall_time;
    j["status"] = std::string(to_string(result.status));
    j["best_iteration"] = result.best_iteration;
    j["final_mean_phonon"] = result.final_report.mean_phonon;
    return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, "cannot read " + path.string(), "path");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

RunWriter::RunWriter(fs::path dir) : dir_(std::move(dir)), started_(iso_timestamp()) {
    fs::create_directories(dir_);
}

fs::path RunWriter::write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, content);
    if (!hashes_.count(name)) names_.push_back(name);
    hashes_[name] = sha256_hex(content);
    sizes_[name] = content.size();
    return path;
}

fs::path RunWriter::finalize(const RunConfig& cfg, const std::string& command, std::uint64_t seed) {
    json files = json::array();
    for (const auto& name : names_) files.push_back({{"path", name}, {"sha256", hashes_[name]}, {"bytes", sizes_[name]}});
    json j;
    j["code_version"] = kCodeVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["started"] = started_;
    j["finished"] = iso_timestamp();
    j["config"] = serialize_config(cfg);
    j["files"] = files;
    const fs::path path = dir_ / "manifest.json";
    write_file_atomic(path, j.dump(2) + "\n");
    return path;
}

} // namespace optosqueeze
