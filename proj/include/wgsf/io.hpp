#pragma once

// JSON configuration files and CSV/JSON result files.

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wgsf/analysis.hpp"
#include "wgsf/errors.hpp"
#include "wgsf/observables.hpp"
#include "wgsf/params.hpp"

namespace wgsf::io {

using nlohmann::json;

/// "%.17g" formatting.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << content;
    if (!out) throw ValidationError("write failed for " + path);
}

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the first occurrence of "key" in the raw text, 0 if absent.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

inline json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what(), line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
    }
}

class ObjectReader {
public:
    ObjectReader(const json& obj, const std::string& text, std::string context)
        : obj_(obj), text_(text), context_(std::move(context)) {
        if (!obj_.is_object()) throw ValidationError(context_ + " must be a JSON object", 1);
    }

    void check_known(const std::vector<std::string>& keys) const {
        for (const auto& [k, v] : obj_.items())
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                throw ValidationError("unknown key \"" + k + "\" in " + context_, line_of_key(text_, k));
    }

    bool has(const std::string& k) const { return obj_.contains(k) && !obj_.at(k).is_null(); }
    const json& at(const std::string& k) const { return obj_.at(k); }

    [[noreturn]] void fail(const std::string& k, const std::string& what) const {
        throw ValidationError("key \"" + k + "\": " + what, line_of_key(text_, k));
    }

    void get(const std::string& k, double& out) const {
        if (!obj_.contains(k)) return;
        if (!obj_.at(k).is_number()) fail(k, "expected a number");
        out = obj_.at(k).get<double>();
    }
    void get(const std::string& k, int& out) const {
        if (!obj_.contains(k)) return;
        const auto& v = obj_.at(k);
        if (!v.is_number_integer()) fail(k, "expected an integer");
        const auto x = v.get<long long>();
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(k, "integer out of range");
        out = static_cast<int>(x);
    }
    void get(const std::string& k, std::uint64_t& out) const {
        if (!obj_.contains(k)) return;
        const auto& v = obj_.at(k);
        if (!v.is_number_unsigned()) fail(k, "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }
    void get(const std::string& k, std::optional<double>& out) const {
        if (!obj_.contains(k)) return;
        if (obj_.at(k).is_null()) {
            out.reset();
            return;
        }
        if (!obj_.at(k).is_number()) fail(k, "expected a number or null");
        out = obj_.at(k).get<double>();
    }

private:
    const json& obj_;
    const std::string& text_;
    std::string context_;
};

inline const std::vector<std::string> kConfigKeys = {
    "n_spins", "gamma_1d", "gamma_single", "lambda0", "lambda_p", "v_bar", "sample_length", "dt", "t_max",
    "n_traj", "seed", "model_mode", "beta_minus_override", "tau_blur", "record_stride"};

inline SimulationConfig config_from(const json& j, const std::string& text, const std::string& context) {
    ObjectReader r(j, text, context);
    r.check_known(kConfigKeys);
    SimulationConfig c;
    r.get("n_spins", c.n_spins);
    r.get("gamma_1d", c.gamma_1d);
    r.get("gamma_single", c.gamma_single);
    r.get("lambda0", c.lambda0);
    r.get("lambda_p", c.lambda_p);
    r.get("v_bar", c.v_bar);
    r.get("sample_length", c.sample_length);
    r.get("dt", c.dt);
    r.get("t_max", c.t_max);
    r.get("n_traj", c.n_traj);
    r.get("seed", c.seed);
    r.get("beta_minus_override", c.beta_minus_override);
    r.get("tau_blur", c.tau_blur);
    r.get("record_stride", c.record_stride);
    if (j.contains("model_mode")) {
        const auto& v = j.at("model_mode");
        if (!v.is_string()) r.fail("model_mode", "expected a string");
        const auto m = parse_model_mode(v.get<std::string>());
        if (!m) r.fail("model_mode", "must be dynamic_motion, static_blur or frozen");
        c.model_mode = *m;
    }
    try {
        validate(c);
    } catch (const ValidationError& e) {
        // attribute the message to the offending key when possible
        std::string msg = e.what();
        std::size_t line = 0;
        for (const auto& k : kConfigKeys)
            if (msg.rfind(k, 0) == 0) line = line_of_key(text, k);
        if (line == 0 && msg.rfind("static_blur", 0) == 0) line = line_of_key(text, "model_mode");
        throw ValidationError(msg, line);
    }
    return c;
}

}  // namespace detail

inline json to_json(const SimulationConfig& c) {
    json j;
    j["n_spins"] = c.n_spins;
    j["gamma_1d"] = c.gamma_1d;
    j["gamma_single"] = c.gamma_single;
    j["lambda0"] = c.lambda0;
    j["lambda_p"] = c.lambda_p;
    j["v_bar"] = c.v_bar;
    j["sample_length"] = c.sample_length;
    j["dt"] = c.dt;
    j["t_max"] = c.t_max;
    j["n_traj"] = c.n_traj;
    j["seed"] = c.seed;
    j["model_mode"] = std::string(to_string(c.model_mode));
    j["beta_minus_override"] = c.beta_minus_override ? json(*c.beta_minus_override) : json(nullptr);
    j["tau_blur"] = c.tau_blur ? json(*c.tau_blur) : json(nullptr);
    j["record_stride"] = c.record_stride;
    return j;
}

/// Parses and validates a configuration; keys absent from the file keep their defaults.
inline SimulationConfig parse_config(const std::string& text) {
    const json j = detail::parse(text);
    return detail::config_from(j, text, "configuration");
}

inline SimulationConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

inline SweepSpec parse_sweep(const std::string& text) {
    const json j = detail::parse(text);
    detail::ObjectReader r(j, text, "sweep specification");
    r.check_known({"base", "axis_n", "axis_sigma_v", "replicate_seeds", "static_tau"});
    SweepSpec s;
    if (r.has("base")) s.base = detail::config_from(j.at("base"), text, "base");
    auto array_of = [&](const std::string& k) -> const json& {
        if (!r.has(k) || !j.at(k).is_array()) r.fail(k, "expected an array");
        return j.at(k);
    };
    for (const auto& v : array_of("axis_n")) {
        if (!v.is_number_integer() || v.get<long long>() < 1) r.fail("axis_n", "entries must be positive integers");
        s.axis_n.push_back(v.get<int>());
    }
    for (const auto& v : array_of("axis_sigma_v")) {
        if (!v.is_number()) r.fail("axis_sigma_v", "entries must be numbers");
        s.axis_sigma_v.push_back(v.get<double>());
    }
    if (r.has("replicate_seeds")) {
        for (const auto& v : array_of("replicate_seeds")) {
            if (!v.is_number_unsigned()) r.fail("replicate_seeds", "entries must be non-negative integers");
            s.replicate_seeds.push_back(v.get<std::uint64_t>());
        }
    } else {
        s.replicate_seeds = {s.base.seed};
    }
    if (r.has("static_tau")) {
        const auto& v = j.at("static_tau");
        if (v == "constant") s.static_tau = StaticTau::constant;
        else if (v == "superradiant") s.static_tau = StaticTau::superradiant;
        else r.fail("static_tau", "must be \"constant\" or \"superradiant\"");
    }
    try {
        validate(s);
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), e.line() ? e.line() : detail::line_of_key(text, "axis_n"));
    }
    return s;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string series_csv(const ObservableSeries& s) {
    std::string out = "t,i_plus,i_minus,sz\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out += fmt(s.time_grid[i]) + ',' + fmt(s.mean_i_plus[i]) + ',' + fmt(s.mean_i_minus[i]) + ',' +
               fmt(s.sz_mean[i]) + '\n';
    return out;
}

inline std::string g2_csv(const G2Grid& g) {
    std::string out = "t1,t2,g2\n";
    const auto t = static_cast<Eigen::Index>(g.time_grid.size());
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = 0; j < t; ++j)
            out += fmt(g.time_grid[i]) + ',' + fmt(g.time_grid[j]) + ',' + (g.valid(i, j) ? fmt(g.value(i, j)) : "nan") + '\n';
    return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "n_spins,n_mc,sigma_v,seed,kappa,standard_error,r_plus,r_minus,error\n";
    for (const auto& r : rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out += std::to_string(r.n_spins) + ',' + fmt(r.n_mc) + ',' + fmt(r.sigma_v) + ',' + std::to_string(r.seed) + ',' +
               fmt(r.kappa) + ',' + fmt(r.standard_error) + ',' + fmt(r.r_plus) + ',' + fmt(r.r_minus) + ',' + err + '\n';
    }
    return out;
}

/// Minimal numeric CSV table: header row of names, then comma-separated numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ValidationError("CSV has no column \"" + name + "\"");
        const auto k = static_cast<std::size_t>(it - header.begin());
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r.at(k));
        return out;
    }
};

inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> f;
        std::string cur;
        std::istringstream ss(s);
        while (std::getline(ss, cur, ',')) {
            cur.erase(0, cur.find_first_not_of(" \t\r"));
            cur.erase(cur.find_last_not_of(" \t\r") + 1);
            f.push_back(cur);
        }
        return f;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto f = split(line);
        if (t.header.empty()) {
            t.header = f;
            continue;
        }
        if (f.size() != t.header.size()) throw ValidationError("wrong number of CSV fields", lineno);
        std::vector<double> row;
        for (const auto& x : f) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(x, &used));
                if (used != x.size()) throw std::invalid_argument(x);
            } catch (const std::exception&) {
                throw ValidationError("non-numeric CSV field \"" + x + "\"", lineno);
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ValidationError("empty CSV");
    return t;
}

inline CsvTable load_csv(const std::string& path) { return parse_csv(read_file(path)); }

// ---------------------------------------------------------------------------
// JSON summaries

inline json to_json(const BurstStatistics& b) {
    json j;
    j["r_plus"] = b.r_plus;
    j["r_minus"] = b.r_minus;
    j["kappa"] = b.kappa;
    j["kappa_standard_error"] = b.kappa_se;
    j["delay"] = b.delay;
    j["fwhm"] = b.fwhm ? json(*b.fwhm) : json(nullptr);
    j["g2_equal_time_min"] = b.g2_equal_time_min ? json(*b.g2_equal_time_min) : json(nullptr);
    return j;
}

inline json to_json(const ThresholdFit& f) {
    return {{"has_breakpoint", f.has_breakpoint}, {"breakpoint", f.breakpoint},   {"slope_low", f.slope_low},
            {"slope_high", f.slope_high},         {"intercept_low", f.intercept_low}, {"intercept_high", f.intercept_high},
            {"residual", f.residual},             {"single_slope", f.single_slope}, {"single_residual", f.single_residual},
            {"p_value", f.p_value},               {"ci_low", f.ci_low},             {"ci_high", f.ci_high}};
}

inline json to_json(const FwhmScalingFit& f) {
    return {{"coefficient", f.coefficient},
            {"coefficient_standard_error", f.coefficient_se},
            {"exponent", f.exponent},
            {"exponent_standard_error", f.exponent_se},
            {"log_prefactor", f.log_prefactor}};
}

inline std::string dump(const json& j) { return j.dump(2) + '\n'; }

}  // namespace wgsf::io
