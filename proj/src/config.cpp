#include "oceanfc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "oceanfc/error.hpp"
#include "oceanfc/numeric.hpp"

namespace oceanfc {

const std::vector<ConfigKey>& config_registry() {
    static const std::vector<ConfigKey> keys{
        // common
        {"out", "", "output directory"},
        {"data", "", "dataset manifest"},
        {"seed", "0", "seed for every random stream"},
        {"threads", "1", "worker threads"},
        // synthetic data
        {"days", "240", "number of synthetic days"},
        {"first_day", "0", "epoch day of the first synthetic day"},
        {"train_days", "200", "days in the training split"},
        {"valid_days", "10", "days in the validation split"},
        {"n_lat", "32", "synthetic grid rows"},
        {"n_lon", "64", "synthetic grid columns (global)"},
        {"lat_max", "60", "synthetic grid spans [-lat_max, lat_max]"},
        {"depths", "0,10,30,60,100,200,400,643", "depth levels in metres"},
        {"anomaly_amplitude", "2", "propagating temperature anomaly (degC)"},
        {"anomaly_period", "25", "days for the anomaly to travel one wavelength"},
        {"psi0", "1.5e6", "streamfunction amplitude (m^2/s)"},
        {"current_seasonality", "0.25", "fractional seasonal swing of the streamfunction"},
        {"noise_std", "0", "white noise on thetao and so"},
        // statistics and climatology
        {"stats", "", "normalisation statistics CSV (default: computed from the training split)"},
        {"clim", "", "climatology directory (default: built from the training split)"},
        {"clim_window", "1", "odd running-mean window over calendar slots"},
        // model
        {"patch", "2,4,4", "patch size (depth, lat, lon)"},
        {"embed_dim", "32", "token width at the first stage"},
        {"window", "2,4,4", "attention window (depth, lat, lon)"},
        {"encoder_depths", "2,2", "blocks per encoder stage"},
        {"bottleneck_depth", "2", "blocks in the bottleneck"},
        {"heads", "4", "attention heads"},
        {"mlp_ratio", "4", "MLP hidden width / token width"},
        {"pos_embed", "true", "learned positional embedding"},
        // training
        {"lead", "1", "training lead in days"},
        {"lr", "1e-3", "Adam learning rate"},
        {"lr_min", "0", "final learning rate under cosine decay"},
        {"cosine_decay", "false", "anneal the learning rate"},
        {"batch_size", "4", "samples per step"},
        {"stage1_epochs", "1", "epochs on the short window"},
        {"stage2_epochs", "2", "epochs on the full training split"},
        {"stage1_days", "60", "length of the short window (days)"},
        {"clip_norm", "1.0", "gradient-norm clip (0 disables)"},
        // forecasting
        {"propagator", "swin3d", "swin3d | persistence | advective | climatology"},
        {"fm1", "", "1-day parameter file"},
        {"fm5", "", "5-day parameter file"},
        {"fm5_lead", "5", "lead of the long propagator"},
        {"horizon", "10", "forecast days"},
        {"init_days", "test", "initial days: comma list or 'test'"},
        {"kappa", "0", "advective surrogate diffusivity (m^2/s)"},
        {"gamma", "0", "advective surrogate wind coupling (1/s)"},
        {"z_ref", "50", "advective surrogate wind e-folding depth (m)"},
        {"nudge_alpha", "0.1", "climatology nudging weight"},
        // evaluation
        {"forecasts", "", "forecast directory, or 'truth'"},
        {"against", "none", "none | persistence"},
        {"diag_lead", "0", "lead for scalar, histogram, OHC and section diagnostics (0 = horizon)"},
        {"hist_bins", "64", "SST-gradient histogram bins"},
        {"hist_max", "5e-4", "SST-gradient histogram upper edge (K/m)"},
        {"ohc_depth", "100", "OHC integration depth (m)"},
        {"rho", "1025", "seawater density (kg/m^3)"},
        {"cp", "3985", "seawater heat capacity (J/(kg K))"},
    };
    return keys;
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c); };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T>
T parse_integer(const std::string& key, const std::string& s) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) config_error(key + ": '" + s + "' is not an integer");
    return v;
}

}  // namespace

RunConfig::RunConfig() {
    for (const auto& k : config_registry()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) config_error("unknown configuration key '" + key + "'");
    it->second = value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot read config file " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            config_error(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

bool RunConfig::has(const std::string& key) const { return !get(key).empty(); }

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) config_error("unknown configuration key '" + key + "'");
    return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const { return parse_integer<std::int64_t>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_integer<std::uint64_t>(key, get(key)); }

double RunConfig::get_double(const std::string& key) const {
    try {
        const double v = parse_double(get(key));
        if (!std::isfinite(v)) config_error(key + " must be finite");
        return v;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        config_error(key + ": '" + get(key) + "' is not a number");
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    config_error(key + ": '" + v + "' is not a boolean");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split_list(get(key))) {
        try {
            out.push_back(parse_double(s));
        } catch (const Error&) {
            config_error(key + ": '" + s + "' is not a number");
        }
    }
    return out;
}

std::vector<std::int64_t> RunConfig::get_ints(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& s : split_list(get(key))) out.push_back(parse_integer<std::int64_t>(key, s));
    return out;
}

void RunConfig::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    for (const auto& k : config_registry()) out << k.name << " = " << values_.at(k.name) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace oceanfc
