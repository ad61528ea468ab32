// quasicontract: command-line analyzer for threshold-contractive self-maps.
//
// Subcommands: analyze, bounds, regions, simulate, fit. Each reads one JSON
// config, writes report.json plus plot-ready CSV series into --out, and
// exits 0 (clean), 1 (violations found) or 2 (config error).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quasicontract/quasicontract.hpp"

namespace qc = quasicontract;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Logging (stderr), controlled by QUASICONTRACT_LOG in {quiet, info, debug}.
// ---------------------------------------------------------------------------

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("QUASICONTRACT_LOG");
        if (env == nullptr) return LogLevel::Info;
        const std::string v(env);
        if (v == "quiet") return LogLevel::Quiet;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "[debug] " << msg << "\n";
}

// ---------------------------------------------------------------------------
// Config loading and strict validation
// ---------------------------------------------------------------------------

/// Any malformed input: JSON syntax, schema, value domains, unreadable files.
/// Always maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

json parse_config(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ":" +
                          std::to_string(line_of_byte(text, e.byte)) +
                          ": " + e.what());
    }
}

/// Cursor into the config with path-anchored errors and strict key checking.
class Conf {
public:
    Conf(const json& node, std::string path) : node_(&node), path_(std::move(path)) {}

    [[nodiscard]] const json& raw() const { return *node_; }
    [[nodiscard]] const std::string& path() const { return path_; }

    void require_object() const {
        if (!node_->is_object()) {
            throw ConfigError("config error at " + path_ + ": expected an object");
        }
    }

    /// Rejects keys outside `allowed` (strict schema).
    void allow_keys(std::initializer_list<const char*> allowed) const {
        require_object();
        for (const auto& [key, value] : node_->items()) {
            (void)value;
            if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                    return key == a;
                }) == allowed.end()) {
                throw ConfigError("config error at " + path_ + ": unknown key '" +
                                  key + "'");
            }
        }
    }

    [[nodiscard]] bool has(const char* key) const {
        return node_->is_object() && node_->contains(key);
    }

    [[nodiscard]] Conf child(const char* key) const {
        require_object();
        if (!node_->contains(key)) {
            throw ConfigError("config error at " + path_ + ": missing key '" +
                              std::string(key) + "'");
        }
        return Conf((*node_)[key], path_ + "." + key);
    }

    [[nodiscard]] double number(const char* key) const {
        const Conf c = child(key);
        if (!c.raw().is_number()) {
            throw ConfigError("config error at " + c.path() + ": expected a number");
        }
        return c.raw().get<double>();
    }

    [[nodiscard]] double number_or(const char* key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    [[nodiscard]] std::int64_t integer(const char* key) const {
        const Conf c = child(key);
        if (!c.raw().is_number_integer()) {
            throw ConfigError("config error at " + c.path() +
                              ": expected an integer");
        }
        return c.raw().get<std::int64_t>();
    }

    [[nodiscard]] std::int64_t integer_or(const char* key, std::int64_t fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    [[nodiscard]] std::string string(const char* key) const {
        const Conf c = child(key);
        if (!c.raw().is_string()) {
            throw ConfigError("config error at " + c.path() + ": expected a string");
        }
        return c.raw().get<std::string>();
    }

    [[nodiscard]] bool boolean_or(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const Conf c = child(key);
        if (!c.raw().is_boolean()) {
            throw ConfigError("config error at " + c.path() + ": expected a boolean");
        }
        return c.raw().get<bool>();
    }

private:
    const json* node_;
    std::string path_;
};

qc::ContractionParams params_from(const Conf& c) {
    c.allow_keys({"K", "M"});
    try {
        return {c.number("K"), c.number("M")};
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config error at " + c.path() + ": " + e.what());
    }
}

qc::BandParams band_from(const Conf& c) {
    c.allow_keys({"K", "M", "K1", "K2"});
    try {
        return {c.number("K"), c.number("M"), c.number("K1"), c.number("K2")};
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config error at " + c.path() + ": " + e.what());
    }
}

Eigen::MatrixXd matrix_from(const Conf& c) {
    if (!c.raw().is_array() || c.raw().empty()) {
        throw ConfigError("config error at " + c.path() +
                          ": expected a nonempty array of rows");
    }
    const std::size_t n = c.raw().size();
    Eigen::MatrixXd A(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const json& row = c.raw()[i];
        if (!row.is_array() || row.size() != n) {
            throw ConfigError("config error at " + c.path() + "[" +
                              std::to_string(i) + "]: expected a row of length " +
                              std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!row[j].is_number()) {
                throw ConfigError("config error at " + c.path() + "[" +
                                  std::to_string(i) + "][" + std::to_string(j) +
                                  "]: expected a number");
            }
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                row[j].get<double>();
        }
    }
    return A;
}

// ---------------------------------------------------------------------------
// Samples CSV input: header `d_xy,d_TxTy`, one pair per line.
// ---------------------------------------------------------------------------

std::vector<qc::DistanceSample> read_samples_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open samples file: " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    std::vector<qc::DistanceSample> samples;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "d_xy,d_TxTy") {
                throw ConfigError(path.string() + ":1: expected header 'd_xy,d_TxTy'");
            }
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected exactly two comma-separated values");
        }
        try {
            const double d_xy = std::stod(line.substr(0, comma));
            const double d_txty = std::stod(line.substr(comma + 1));
            samples.emplace_back(d_xy, d_txty);
        } catch (const std::exception& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " +
                              e.what());
        }
    }
    if (samples.empty()) {
        throw ConfigError(path.string() + ": no samples found");
    }
    return samples;
}

// ---------------------------------------------------------------------------
// Deterministic output helpers
// ---------------------------------------------------------------------------

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// +-inf has no JSON number representation; serialize as a string.
json json_number(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path.string());
    }
    out << content;
}

struct CsvWriter {
    std::string body;

    explicit CsvWriter(const std::string& header) { body = header + "\n"; }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) body += ',';
            body += cells[i];
        }
        body += '\n';
    }
};

json interval_json(const qc::Interval& iv) {
    return json{{"lower", json_number(iv.lower)}, {"upper", json_number(iv.upper)}};
}

// Deterministic uniform draws for simulate (keyed off the config seed).
struct SeededStream {
    std::uint64_t state;

    explicit SeededStream(std::uint64_t seed) : state(seed) {}

    double unit() {  // [0, 1)
        return static_cast<double>(qc::detail::splitmix64(state) >> 11) *
               (1.0 / 9007199254740992.0);
    }
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

// ---------------------------------------------------------------------------
// Subcommand runners. Each fills `results` and `violations` and returns the
// effective (defaults-applied) config for echoing.
// ---------------------------------------------------------------------------

struct RunOutput {
    json effective_config;
    json results = json::object();
    json violations = json::array();
    std::vector<std::pair<std::string, std::string>> csv_files;  // name -> body
    std::string summary;
};

RunOutput run_analyze(const Conf& root, std::uint64_t seed) {
    root.allow_keys({"seed", "params", "samples_csv", "tolerances"});
    const qc::ContractionParams params = params_from(root.child("params"));
    const std::string samples_path = root.string("samples_csv");
    double verify_tol = 0.0;
    if (root.has("tolerances")) {
        const Conf tol = root.child("tolerances");
        tol.allow_keys({"verify"});
        verify_tol = tol.number_or("verify", 0.0);
        if (verify_tol < 0.0 || !std::isfinite(verify_tol)) {
            throw ConfigError("config error at " + tol.path() +
                              ".verify: must be finite and >= 0");
        }
    }

    const auto samples = read_samples_csv(samples_path);
    const qc::Regime regime = qc::classify_regime(params);

    RunOutput out;
    out.effective_config = {
        {"seed", seed},
        {"params", {{"K", params.K}, {"M", params.M}}},
        {"samples_csv", samples_path},
        {"tolerances", {{"verify", verify_tol}}},
    };

    json regime_json = {{"tag", qc::to_string(regime.tag)}};
    regime_json["band"] = regime.band ? interval_json(*regime.band) : json(nullptr);
    regime_json["threshold"] =
        regime.threshold ? json_number(*regime.threshold) : json(nullptr);
    regime_json["weakly_contractive_boundary"] = regime.weakly_contractive_boundary;

    CsvWriter csv("d_xy,d_TxTy,bound_rhs,satisfied,verdict");
    std::size_t n_weak = 0, n_nonexp = 0, n_indet = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const double rhs = qc::pair_bound(s.d_xy, params);
        const bool ok = qc::verify_pair(s, params, verify_tol);
        std::string verdict_str;
        if (params.K > 0.0) {
            const qc::PairVerdict v = qc::classify_pair(s.d_xy, params);
            verdict_str = qc::to_string(v);
            if (v == qc::PairVerdict::WeaklyContractiveGuaranteed) ++n_weak;
            if (v == qc::PairVerdict::NonExpansiveGuaranteed) ++n_nonexp;
            if (v == qc::PairVerdict::Indeterminate) ++n_indet;
        }
        if (!ok) {
            out.violations.push_back({{"kind", "pair-constraint"},
                                      {"index", i},
                                      {"d_xy", s.d_xy},
                                      {"d_TxTy", s.d_TxTy},
                                      {"bound", rhs}});
        }
        csv.row({fmt17(s.d_xy), fmt17(s.d_TxTy), fmt17(rhs), ok ? "1" : "0",
                 verdict_str});
    }

    out.results["regime"] = regime_json;
    out.results["threshold"] = json_number(params.threshold());
    out.results["n_samples"] = samples.size();
    out.results["n_violations"] = out.violations.size();
    if (params.K > 0.0) {
        out.results["verdicts"] = {{"weakly_contractive_guaranteed", n_weak},
                                   {"non_expansive_guaranteed", n_nonexp},
                                   {"indeterminate", n_indet}};
    } else {
        out.results["verdicts"] = nullptr;
    }
    out.csv_files.emplace_back("series.csv", csv.body);
    out.summary = "analyze: regime=" + std::string(qc::to_string(regime.tag)) +
                  " samples=" + std::to_string(samples.size()) +
                  " violations=" + std::to_string(out.violations.size());
    return out;
}

RunOutput run_bounds(const Conf& root, std::uint64_t seed) {
    root.allow_keys({"seed", "params", "R", "epsilon", "steps"});
    const qc::ContractionParams params = params_from(root.child("params"));
    const double R = root.number("R");
    const double epsilon = root.number("epsilon");
    const auto steps = root.integer_or("steps", 10);
    if (steps < 0 || steps > 1000000) {
        throw ConfigError("config error at " + root.path() +
                          ".steps: must lie in [0, 1e6]");
    }

    RunOutput out;
    out.effective_config = {
        {"seed", seed},
        {"params", {{"K", params.K}, {"M", params.M}}},
        {"R", R},
        {"epsilon", epsilon},
        {"steps", steps},
    };

    try {
        const auto traj =
            qc::make_bound_trajectory(R, params, static_cast<std::size_t>(steps));
        const double ultimate = qc::ultimate_bound(params);
        const double uniform = qc::uniform_iterate_bound(R, params);
        const std::size_t j0 = qc::permanence_index({R, epsilon, params});

        CsvWriter csv("j,d_j,bound_j");
        double max_rel = 0.0;
        for (std::size_t j = 0; j < traj.values.size(); ++j) {
            const double closed = qc::bound_closed_form(j, R, params);
            const double rel = std::abs(closed - traj.values[j]) /
                               std::max({std::abs(closed), std::abs(traj.values[j]), 1e-300});
            max_rel = std::max(max_rel, rel);
            if (rel > 1e-12) {
                out.violations.push_back({{"kind", "route-mismatch"},
                                          {"j", j},
                                          {"recurrence", traj.values[j]},
                                          {"closed_form", closed}});
            }
            csv.row({std::to_string(j), fmt17(traj.values[j]), fmt17(closed)});
        }

        out.results["ultimate_bound"] = json_number(ultimate);
        out.results["uniform_iterate_bound"] = json_number(uniform);
        out.results["permanence_index"] = j0;
        out.results["threshold"] = json_number(params.threshold());
        out.results["max_route_rel_error"] = json_number(max_rel);
        out.csv_files.emplace_back("series.csv", csv.body);
        out.summary = "bounds: j0=" + std::to_string(j0) +
                      " ultimate=" + fmt17(ultimate) +
                      " violations=" + std::to_string(out.violations.size());
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return out;
}

RunOutput run_regions(const Conf& root, std::uint64_t seed) {
    root.allow_keys({"seed", "band", "oracle"});
    const qc::BandParams band = band_from(root.child("band"));
    std::int64_t grid_size = 2000;
    std::int64_t d_points = 2000;
    std::optional<double> d_max_cfg;
    if (root.has("oracle")) {
        const Conf oracle = root.child("oracle");
        oracle.allow_keys({"grid_size", "d_points", "d_max"});
        grid_size = oracle.integer_or("grid_size", grid_size);
        d_points = oracle.integer_or("d_points", d_points);
        if (oracle.has("d_max")) d_max_cfg = oracle.number("d_max");
    }
    if (grid_size < 1000) {
        throw ConfigError("config error at " + root.path() +
                          ".oracle.grid_size: must be >= 1000");
    }
    if (d_points < 10 || d_points > 10000000) {
        throw ConfigError("config error at " + root.path() +
                          ".oracle.d_points: must lie in [10, 1e7]");
    }

    RunOutput out;

    try {
        const qc::RegionReport report = qc::analyze_region(band);

        const bool intervals_defined = report.interval_offset_capped.has_value();
        const double d_max = d_max_cfg.value_or(
            intervals_defined ? 2.0 * report.interval_offset_capped->upper
                              : 4.0 * band.M);
        if (!(d_max > 0.0) || !std::isfinite(d_max)) {
            throw ConfigError("config error at " + root.path() +
                              ".oracle.d_max: must be finite and > 0");
        }

        out.effective_config = {
            {"seed", seed},
            {"band",
             {{"K", band.K}, {"M", band.M}, {"K1", band.K1}, {"K2", band.K2}}},
            {"oracle",
             {{"grid_size", grid_size}, {"d_points", d_points}, {"d_max", d_max}}},
        };

        out.results["verdict"] = qc::to_string(report.verdict);
        out.results["interval_offset_capped"] =
            report.interval_offset_capped
                ? interval_json(*report.interval_offset_capped)
                : json(nullptr);
        out.results["interval_slope_capped"] =
            report.interval_slope_capped
                ? interval_json(*report.interval_slope_capped)
                : json(nullptr);
        out.results["inner_ball_radius"] =
            report.inner_ball_radius ? json_number(*report.inner_ball_radius)
                                     : json(nullptr);
        out.results["nonexpansive_threshold"] =
            report.nonexpansive_threshold
                ? json_number(*report.nonexpansive_threshold)
                : json(nullptr);
        out.results["disjoint"] =
            report.disjoint ? json(*report.disjoint) : json(nullptr);

        // Oracle cross-check (needs a nondegenerate corridor).
        if (intervals_defined && band.K2 > band.K1) {
            const qc::OracleComparison cmp = qc::compare_oracle_to_intervals(
                band, d_max, static_cast<std::size_t>(d_points),
                static_cast<std::size_t>(grid_size));
            out.results["oracle"] = {{"checked", cmp.checked},
                                     {"skipped", cmp.skipped},
                                     {"mismatches", cmp.mismatches}};
            if (cmp.mismatches > 0) {
                json js = json::array();
                for (double d : cmp.mismatch_d) js.push_back(d);
                out.violations.push_back({{"kind", "oracle-mismatch"},
                                          {"count", cmp.mismatches},
                                          {"first_distances", js}});
            }
        } else {
            out.results["oracle"] = nullptr;
        }

        CsvWriter csv(
            "d,in_offset_capped,in_slope_capped,feasible_offset_capped,"
            "feasible_slope_capped,feasible_envelope");
        for (std::int64_t i = 0; i <= d_points; ++i) {
            const double d =
                d_max * static_cast<double>(i) / static_cast<double>(d_points);
            const auto w = qc::feasibility_oracle(
                d, band, static_cast<std::size_t>(grid_size));
            const std::string in36 =
                intervals_defined
                    ? (report.interval_offset_capped->contains(d) ? "1" : "0")
                    : "";
            const std::string in37 =
                intervals_defined
                    ? (report.interval_slope_capped->contains(d) ? "1" : "0")
                    : "";
            csv.row({fmt17(d), in36, in37, w.offset_capped ? "1" : "0",
                     w.slope_capped ? "1" : "0", w.envelope ? "1" : "0"});
        }
        out.csv_files.emplace_back("series.csv", csv.body);
        out.summary =
            "regions: verdict=" + std::string(qc::to_string(report.verdict)) +
            " violations=" + std::to_string(out.violations.size());
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return out;
}

RunOutput run_simulate(const Conf& root, std::uint64_t seed) {
    root.allow_keys({"seed", "system", "envelope", "orbits", "tolerances"});

    const Conf system = root.child("system");
    system.allow_keys(
        {"A", "M0", "metric", "h", "K_target", "substeps", "perturbation"});
    const Eigen::MatrixXd A = matrix_from(system.child("A"));
    const double M0 = system.number("M0");
    const std::string metric_name =
        system.has("metric") ? system.string("metric") : "l2";
    const auto substeps = system.integer_or("substeps", 64);
    if (substeps < 1 || substeps > 100000) {
        throw ConfigError("config error at " + system.path() +
                          ".substeps: must lie in [1, 1e5]");
    }
    if (system.has("h") == system.has("K_target")) {
        throw ConfigError("config error at " + system.path() +
                          ": exactly one of 'h' and 'K_target' is required");
    }

    std::string pert_kind = "random";
    std::vector<double> pert_amplitude;
    double pert_frequency = 1.0;
    bool pert_shared = false;
    if (system.has("perturbation")) {
        const Conf pc = system.child("perturbation");
        pc.allow_keys({"kind", "amplitude", "frequency", "shared"});
        pert_kind = pc.string("kind");
        if (pert_kind != "zero" && pert_kind != "sinusoidal" && pert_kind != "random") {
            throw ConfigError("config error at " + pc.path() +
                              ".kind: expected zero|sinusoidal|random");
        }
        pert_shared = pc.boolean_or("shared", false);
        if (pert_kind == "sinusoidal") {
            const Conf amp = pc.child("amplitude");
            if (!amp.raw().is_array() || amp.raw().empty()) {
                throw ConfigError("config error at " + amp.path() +
                                  ": expected a nonempty array");
            }
            for (const auto& v : amp.raw()) {
                if (!v.is_number()) {
                    throw ConfigError("config error at " + amp.path() +
                                      ": expected numbers");
                }
                pert_amplitude.push_back(v.get<double>());
            }
            pert_frequency = pc.number("frequency");
        }
    }

    double horizon = 10.0;
    std::int64_t env_grid = 400;
    if (root.has("envelope")) {
        const Conf env = root.child("envelope");
        env.allow_keys({"horizon", "grid"});
        horizon = env.number_or("horizon", horizon);
        env_grid = env.integer_or("grid", env_grid);
    }
    if (env_grid < 100 || env_grid > 1000000) {
        throw ConfigError("config error at " + root.path() +
                          ".envelope.grid: must lie in [100, 1e6]");
    }

    std::int64_t pairs = 4;
    std::int64_t steps = 100;
    double radius = 2.0;
    if (root.has("orbits")) {
        const Conf orbits = root.child("orbits");
        orbits.allow_keys({"pairs", "steps", "radius"});
        pairs = orbits.integer_or("pairs", pairs);
        steps = orbits.integer_or("steps", steps);
        radius = orbits.number_or("radius", radius);
    }
    if (pairs < 1 || pairs > 100000) {
        throw ConfigError("config error at " + root.path() +
                          ".orbits.pairs: must lie in [1, 1e5]");
    }
    if (steps < 1 || steps > 1000000) {
        throw ConfigError("config error at " + root.path() +
                          ".orbits.steps: must lie in [1, 1e6]");
    }
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw ConfigError("config error at " + root.path() +
                          ".orbits.radius: must be finite and > 0");
    }

    double verify_tol = 1e-6;
    double domination_tol = 1e-5;
    double epsilon = 0.25;
    if (root.has("tolerances")) {
        const Conf tol = root.child("tolerances");
        tol.allow_keys({"verify", "domination", "epsilon"});
        verify_tol = tol.number_or("verify", verify_tol);
        domination_tol = tol.number_or("domination", domination_tol);
        epsilon = tol.number_or("epsilon", epsilon);
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("config error at " + root.path() +
                          ".tolerances.epsilon: must be > 0");
    }

    RunOutput out;
    try {
        const double abscissa = qc::spectral_abscissa(A);
        const qc::Metric metric = qc::Metric::from_name(metric_name);
        const qc::EnvelopeFit env = qc::envelope_fit(
            A, metric, horizon, static_cast<std::size_t>(env_grid));

        double h;
        std::optional<double> h0;
        if (system.has("K_target")) {
            const double k_target = system.number("K_target");
            h0 = qc::min_sampling_period(env, k_target);
            h = *h0;
        } else {
            h = system.number("h");
        }

        const qc::ContractionParams params = qc::contraction_params(env, M0, h);
        const qc::LtiSystem sys(A, M0, metric, h);

        json amp_json = json::array();
        for (double a : pert_amplitude) amp_json.push_back(a);
        out.effective_config = {
            {"seed", seed},
            {"system",
             {{"A", json(nullptr)},  // replaced below
              {"M0", M0},
              {"metric", metric_name},
              {"h", h},
              {"substeps", substeps},
              {"perturbation",
               {{"kind", pert_kind},
                {"amplitude", amp_json},
                {"frequency", pert_frequency},
                {"shared", pert_shared}}}}},
            {"envelope", {{"horizon", horizon}, {"grid", env_grid}}},
            {"orbits", {{"pairs", pairs}, {"steps", steps}, {"radius", radius}}},
            {"tolerances",
             {{"verify", verify_tol},
              {"domination", domination_tol},
              {"epsilon", epsilon}}},
        };
        json a_json = json::array();
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
            a_json.push_back(row);
        }
        out.effective_config["system"]["A"] = a_json;

        const auto make_pert = [&](std::uint64_t pert_seed) -> qc::Perturbation {
            if (pert_kind == "zero") return qc::Perturbation::zero();
            if (pert_kind == "sinusoidal") {
                return qc::Perturbation::sinusoidal(pert_amplitude, pert_frequency,
                                                    M0);
            }
            return qc::Perturbation::seeded_random(M0, pert_seed);
        };

        const double threshold = params.threshold() + epsilon;
        json pairs_json = json::array();
        std::size_t total_verify = 0;
        std::size_t total_domination = 0;
        std::string first_series;

        for (std::int64_t p = 0; p < pairs; ++p) {
            std::uint64_t stream_state =
                seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(p + 1));
            SeededStream rng(qc::detail::splitmix64(stream_state));
            std::vector<double> x0(sys.dim()), y0(sys.dim());
            for (std::size_t i = 0; i < sys.dim(); ++i) {
                x0[i] = rng.range(-radius, radius);
                y0[i] = rng.range(-radius, radius);
            }
            const std::uint64_t seed_x = qc::detail::splitmix64(stream_state);
            const std::uint64_t seed_y =
                pert_shared ? seed_x : qc::detail::splitmix64(stream_state);

            const qc::SelfMap map_x =
                qc::sampled_map(sys, make_pert(seed_x),
                                static_cast<std::size_t>(substeps));
            const qc::SelfMap map_y =
                qc::sampled_map(sys, make_pert(seed_y),
                                static_cast<std::size_t>(substeps));
            const qc::OrbitRecord rec =
                qc::iterate_pair(map_x, map_y, qc::Point(x0), qc::Point(y0),
                                 static_cast<std::size_t>(steps), metric);

            std::size_t n_verify = 0;
            for (std::size_t j = 0; j + 1 < rec.distances.size(); ++j) {
                const qc::DistanceSample s(rec.distances[j], rec.distances[j + 1]);
                if (!qc::verify_pair(s, params, verify_tol)) {
                    ++n_verify;
                    out.violations.push_back({{"kind", "step-constraint"},
                                              {"pair", p},
                                              {"j", j},
                                              {"d_xy", s.d_xy},
                                              {"d_TxTy", s.d_TxTy},
                                              {"bound", qc::pair_bound(s.d_xy, params)}});
                }
            }
            const auto dom = qc::check_bound_domination(rec, params, domination_tol);
            for (const auto& v : dom) {
                out.violations.push_back({{"kind", "bound-domination"},
                                          {"pair", p},
                                          {"j", v.j},
                                          {"observed", v.observed},
                                          {"bound", v.bound}});
            }
            total_verify += n_verify;
            total_domination += dom.size();

            const auto entry = qc::empirical_entry_index(rec, threshold);
            const std::size_t j0 =
                qc::permanence_index({rec.distances.front(), epsilon, params});

            json pj = {{"initial_distance", rec.distances.front()},
                       {"final_distance", rec.distances.back()},
                       {"verify_violations", n_verify},
                       {"domination_violations", dom.size()},
                       {"permanence_index", j0}};
            pj["empirical_entry_index"] =
                entry ? json(*entry) : json(nullptr);
            pairs_json.push_back(pj);

            if (p == 0) {
                CsvWriter csv("j,d_j,bound_j");
                for (std::size_t j = 0; j < rec.distances.size(); ++j) {
                    csv.row({std::to_string(j), fmt17(rec.distances[j]),
                             fmt17(qc::bound_closed_form(j, rec.distances.front(),
                                                         params))});
                }
                first_series = csv.body;
            }
        }

        // Envelope series for plotting: t, ||e^{At}||, fitted envelope.
        CsvWriter env_csv("t,norm_expAt,envelope");
        const qc::NormKind kind = metric.norm_kind();
        for (std::int64_t i = 0; i <= env_grid; ++i) {
            const double t =
                horizon * static_cast<double>(i) / static_cast<double>(env_grid);
            const double norm = qc::linalg::induced_norm(qc::linalg::expm(A * t), kind);
            env_csv.row({fmt17(t), fmt17(norm),
                         fmt17(env.K0 * std::exp(-env.alpha0 * t))});
        }

        out.results["spectral_abscissa"] = json_number(abscissa);
        out.results["envelope"] = {{"K0", json_number(env.K0)},
                                   {"alpha0", json_number(env.alpha0)}};
        if (h0) out.results["h0"] = json_number(*h0);
        out.results["h"] = json_number(h);
        out.results["params"] = {{"K", json_number(params.K)},
                                 {"M", json_number(params.M)}};
        out.results["threshold"] = json_number(params.threshold());
        out.results["pairs"] = pairs_json;
        out.results["totals"] = {{"verify_violations", total_verify},
                                 {"domination_violations", total_domination}};

        out.csv_files.emplace_back("series.csv", first_series);
        out.csv_files.emplace_back("envelope.csv", env_csv.body);
        out.summary = "simulate: K=" + fmt17(params.K) + " M=" + fmt17(params.M) +
                      " violations=" + std::to_string(out.violations.size());
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return out;
}

RunOutput run_fit(const Conf& root, std::uint64_t seed) {
    root.allow_keys({"seed", "samples_csv", "k_grid"});
    const std::string samples_path = root.string("samples_csv");

    std::vector<double> grid;
    std::int64_t count = 64;
    double grid_max = 0.984375;
    if (root.has("k_grid")) {
        const Conf kg = root.child("k_grid");
        if (kg.has("values")) {
            kg.allow_keys({"values"});
            const Conf values = kg.child("values");
            if (!values.raw().is_array() || values.raw().empty()) {
                throw ConfigError("config error at " + values.path() +
                                  ": expected a nonempty array");
            }
            for (const auto& v : values.raw()) {
                if (!v.is_number()) {
                    throw ConfigError("config error at " + values.path() +
                                      ": expected numbers");
                }
                grid.push_back(v.get<double>());
            }
        } else {
            kg.allow_keys({"count", "max"});
            count = kg.integer_or("count", count);
            grid_max = kg.number_or("max", grid_max);
        }
    }
    if (grid.empty()) {
        if (count < 2 || count > 100000) {
            throw ConfigError("config error at " + root.path() +
                              ".k_grid.count: must lie in [2, 1e5]");
        }
        if (!(grid_max > 0.0 && grid_max < 1.0)) {
            throw ConfigError("config error at " + root.path() +
                              ".k_grid.max: must lie in (0, 1)");
        }
        for (std::int64_t i = 0; i < count; ++i) {
            grid.push_back(grid_max * static_cast<double>(i) /
                           static_cast<double>(count - 1));
        }
    }

    const auto samples = read_samples_csv(samples_path);

    RunOutput out;
    json grid_json = json::array();
    for (double k : grid) grid_json.push_back(k);
    out.effective_config = {
        {"seed", seed},
        {"samples_csv", samples_path},
        {"k_grid", {{"values", grid_json}}},
    };

    try {
        const auto frontier = qc::fit_frontier(samples, grid);
        CsvWriter csv("K,M_hat");
        json fj = json::array();
        double prev_m = -1.0;
        for (const auto& p : frontier) {
            csv.row({fmt17(p.K), fmt17(p.M)});
            fj.push_back({{"K", p.K}, {"M", p.M}});
            if (p.M < prev_m) {
                out.violations.push_back({{"kind", "frontier-monotonicity"},
                                          {"K", p.K},
                                          {"M", p.M}});
            }
            prev_m = p.M;
        }
        out.results["frontier"] = fj;
        out.results["n_samples"] = samples.size();
        out.csv_files.emplace_back("series.csv", csv.body);
        out.summary = "fit: grid=" + std::to_string(grid.size()) +
                      " samples=" + std::to_string(samples.size()) +
                      " violations=" + std::to_string(out.violations.size());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------

int run_subcommand(const std::string& name, const fs::path& config_path,
                   const fs::path& out_dir, std::optional<std::int64_t> seed_flag) {
    const json config = parse_config(config_path);
    const Conf root(config, "config");
    root.require_object();

    std::uint64_t seed = 0;
    if (root.has("seed")) {
        seed = static_cast<std::uint64_t>(root.integer("seed"));
    }
    if (seed_flag) {
        seed = static_cast<std::uint64_t>(*seed_flag);
    }

    log_debug("running '" + name + "' with seed " + std::to_string(seed));

    RunOutput out;
    if (name == "analyze") out = run_analyze(root, seed);
    else if (name == "bounds") out = run_bounds(root, seed);
    else if (name == "regions") out = run_regions(root, seed);
    else if (name == "simulate") out = run_simulate(root, seed);
    else out = run_fit(root, seed);

    json report = {
        {"config", out.effective_config},
        {"provenance",
         {{"seed", seed}, {"tool", "quasicontract"}, {"version", qc::k_version}}},
        {"results", out.results},
        {"violations", out.violations},
    };

    fs::create_directories(out_dir);
    write_text_file(out_dir / "report.json", report.dump(2) + "\n");
    log_info("wrote " + (out_dir / "report.json").string());
    for (const auto& [csv_name, body] : out.csv_files) {
        write_text_file(out_dir / csv_name, body);
        log_info("wrote " + (out_dir / csv_name).string());
    }

    std::cout << out.summary << "\n";
    return out.violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analyzer for threshold-contractive self-maps on metric spaces"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::int64_t> seed_flag;

    for (const char* name : {"analyze", "bounds", "regions", "simulate", "fit"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "Path to the JSON config")
            ->required();
        sub->add_option("--out", out_dir, "Output directory (default: .)");
        sub->add_option("--seed", seed_flag,
                        "Seed override (defaults to the config's seed, then 0)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string sub_name = app.get_subcommands().front()->get_name();
    try {
        return run_subcommand(sub_name, config_path, out_dir, seed_flag);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
