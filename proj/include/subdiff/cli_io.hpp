#pragma once

// Configuration model and orchestration behind the `subdiff` tool.
//
// Every command that writes to disk produces, inside the output directory:
//   manifest.json    written with status "running" before any solve, then
//                    rewritten with status "complete" or "failed"
//   timestamps.json  wall-clock start/finish; the only non-reproducible file
// plus command-specific fields and CSV tables.

#include <boost/version.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subdiff/diagnostics.hpp"
#include "subdiff/errors.hpp"
#include "subdiff/field_io.hpp"
#include "subdiff/oracle.hpp"
#include "subdiff/special_functions.hpp"
#include "subdiff/subdiffusion_core.hpp"
#include "subdiff/torus_spectral.hpp"

namespace subdiff::cli {

inline constexpr const char* tool_version = "1.0.0";

/// a cos(n.x) + b sin(n.x)
struct TrigTerm {
    std::vector<int> n;
    double cos = 0.0;
    double sin = 0.0;
};

/// Where a data field comes from: a named preset, an explicit term list, or a file.
struct FieldSpec {
    enum class Kind { preset, terms, file } kind = Kind::preset;
    std::string preset;
    std::vector<TrigTerm> terms;
    std::filesystem::path file;
};

struct SymbolSpec {
    std::string preset = "laplacian"; // empty when explicit terms are used
    int order = 2;
    std::vector<EllipticSymbol::Term> terms;
};

struct OracleSpec {
    double lambda = 1.0;
    double phi_n = 1.0;
    double f_n = 0.0;
    std::vector<std::size_t> steps{256, 512, 1024, 2048};
    std::optional<double> grading; // unset: (2 - rho)/rho
};

struct RunConfig {
    std::string command;
    double rho = 1.0;
    std::optional<double> final_time;
    std::size_t dim = 1;
    std::size_t points = 32;
    SymbolSpec symbol;
    std::optional<FieldSpec> phi;
    std::optional<FieldSpec> source;
    std::optional<FieldSpec> observation;
    std::filesystem::path output_dir = "subdiff-out";
    std::vector<double> times;
    std::optional<double> cutoff;
    double amplification_floor = default_amplification_floor;
    DiagnosticThresholds thresholds;
    std::string field_format = "bin";
    double mu = 1.0;
    std::optional<double> z;
    OracleSpec oracle;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"forward", "invert", "roundtrip", "ml-eval", "oracle", "diagnose"};
    return c;
}

// ---------------------------------------------------------------- presets

/// Built-in trigonometric polynomials. Frequencies are on the first axis
/// unless the preset needs more.
inline std::vector<TrigTerm> preset_terms(const std::string& name, std::size_t dim) {
    auto axis0 = [dim](int k) {
        std::vector<int> n(dim, 0);
        n[0] = k;
        return n;
    };
    if (name == "zero") return {};
    if (name == "const") return {{axis0(0), 1.0, 0.0}};
    if (name == "cos1") return {{axis0(1), 1.0, 0.0}};
    if (name == "sin2") return {{axis0(2), 0.0, 1.0}};
    if (name == "cos3") return {{axis0(3), 1.0, 0.0}};
    if (name == "mixed") return {{axis0(0), 0.5, 0.0}, {axis0(1), 1.0, 0.0}, {axis0(2), 0.0, 0.5}, {axis0(3), -0.25, 0.0}};
    if (name == "diagonal") {
        if (dim < 2) throw ConfigError("preset 'diagonal' needs dim >= 2");
        std::vector<int> n(dim, 0);
        n[0] = 1;
        n[1] = 1;
        std::vector<int> m(dim, 0);
        m[0] = 2;
        m[1] = -1;
        return {{n, 1.0, 0.0}, {m, 0.0, 0.5}};
    }
    throw ConfigError("unknown preset '" + name + "' (zero, const, cos1, sin2, cos3, mixed, diagonal)");
}

inline std::vector<double> sample_terms(const TorusGrid& grid, const std::vector<TrigTerm>& terms) {
    const int limit = static_cast<int>(grid.points / 2);
    for (const auto& t : terms) {
        if (t.n.size() != grid.dim) throw ConfigError("trig term frequency has wrong dimension");
        for (const int c : t.n)
            if (std::abs(c) >= limit)
                throw ConfigError("trig term frequency " + std::to_string(c) + " aliases on a grid with " +
                                  std::to_string(grid.points) + " points");
    }
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto x = grid.point(i);
        double v = 0.0;
        for (const auto& t : terms) {
            double phase = 0.0;
            for (std::size_t d = 0; d < grid.dim; ++d) phase += t.n[d] * x[d];
            v += t.cos * std::cos(phase) + t.sin * std::sin(phase);
        }
        out[i] = v;
    }
    return out;
}

// ---------------------------------------------------------------- JSON config

namespace detail {

inline bool is_field_path(const std::string& s) {
    const auto ext = std::filesystem::path(s).extension().string();
    return ext == ".bin" || ext == ".json";
}

inline FieldSpec field_from_string(const std::string& s) {
    FieldSpec f;
    if (is_field_path(s)) {
        f.kind = FieldSpec::Kind::file;
        f.file = s;
    } else {
        f.kind = FieldSpec::Kind::preset;
        f.preset = s;
    }
    return f;
}

inline FieldSpec field_from_json(const nlohmann::json& j) {
    if (j.is_string()) return field_from_string(j.get<std::string>());
    if (!j.is_object()) throw ConfigError("field must be a preset name, a path or an object");
    FieldSpec f;
    if (j.contains("preset")) {
        f.kind = FieldSpec::Kind::preset;
        f.preset = j.at("preset").get<std::string>();
    } else if (j.contains("file")) {
        f.kind = FieldSpec::Kind::file;
        f.file = j.at("file").get<std::string>();
    } else if (j.contains("terms")) {
        f.kind = FieldSpec::Kind::terms;
        for (const auto& t : j.at("terms"))
            f.terms.push_back({t.at("n").get<std::vector<int>>(), t.value("cos", 0.0), t.value("sin", 0.0)});
    } else {
        throw ConfigError("field object needs one of 'preset', 'file', 'terms'");
    }
    return f;
}

inline nlohmann::json field_to_json(const FieldSpec& f) {
    switch (f.kind) {
    case FieldSpec::Kind::preset: return {{"preset", f.preset}};
    case FieldSpec::Kind::file: return {{"file", f.file.generic_string()}};
    case FieldSpec::Kind::terms: {
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& t : f.terms) terms.push_back({{"n", t.n}, {"cos", t.cos}, {"sin", t.sin}});
        return {{"terms", terms}};
    }
    }
    return nullptr;
}

inline SymbolSpec symbol_from_json(const nlohmann::json& j) {
    SymbolSpec s;
    if (j.is_string()) {
        s.preset = j.get<std::string>();
        if (s.preset != "laplacian" && s.preset != "bilaplacian")
            throw ConfigError("unknown symbol preset '" + s.preset + "' (laplacian, bilaplacian)");
        s.order = s.preset == "laplacian" ? 2 : 4;
        return s;
    }
    s.preset.clear();
    s.order = j.at("order").get<int>();
    for (const auto& t : j.at("terms"))
        s.terms.push_back({t.at("alpha").get<std::vector<int>>(), t.at("coefficient").get<double>()});
    return s;
}

inline nlohmann::json symbol_to_json(const SymbolSpec& s) {
    if (!s.preset.empty()) return s.preset;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : s.terms) terms.push_back({{"alpha", t.alpha}, {"coefficient", t.coefficient}});
    return {{"order", s.order}, {"terms", terms}};
}

} // namespace detail

/// Fill `cfg` from a JSON object; keys absent from the object keep their value.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        static const std::vector<std::string> known{
            "command", "rho",    "T",          "dim",         "grid",    "symbol", "phi",     "source",
            "observation", "output_dir", "times", "cutoff", "amplification_floor", "thresholds", "field_format",
            "mu",      "z",      "oracle"};
        for (const auto& [key, _] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw ConfigError("unknown config key '" + key + "'");

        if (j.contains("command")) cfg.command = j["command"].get<std::string>();
        if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
        if (j.contains("T")) cfg.final_time = j["T"].get<double>();
        if (j.contains("dim")) cfg.dim = j["dim"].get<std::size_t>();
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            if (g.is_object()) {
                cfg.dim = g.value("dim", cfg.dim);
                cfg.points = g.at("points").get<std::size_t>();
            } else {
                cfg.points = g.get<std::size_t>();
            }
        }
        if (j.contains("symbol")) cfg.symbol = detail::symbol_from_json(j["symbol"]);
        if (j.contains("phi") && !j["phi"].is_null()) cfg.phi = detail::field_from_json(j["phi"]);
        if (j.contains("source") && !j["source"].is_null()) cfg.source = detail::field_from_json(j["source"]);
        if (j.contains("observation") && !j["observation"].is_null()) cfg.observation = detail::field_from_json(j["observation"]);
        if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("times")) cfg.times = j["times"].get<std::vector<double>>();
        if (j.contains("cutoff") && !j["cutoff"].is_null()) cfg.cutoff = j["cutoff"].get<double>();
        if (j.contains("amplification_floor")) cfg.amplification_floor = j["amplification_floor"].get<double>();
        if (j.contains("thresholds")) {
            const auto& t = j["thresholds"];
            cfg.thresholds.tau_margin = t.value("tau_margin", cfg.thresholds.tau_margin);
            cfg.thresholds.slope_margin = t.value("slope_margin", cfg.thresholds.slope_margin);
            cfg.thresholds.amplification_ceiling = t.value("amplification_ceiling", cfg.thresholds.amplification_ceiling);
        }
        if (j.contains("field_format")) cfg.field_format = j["field_format"].get<std::string>();
        if (j.contains("mu")) cfg.mu = j["mu"].get<double>();
        if (j.contains("z")) cfg.z = j["z"].get<double>();
        if (j.contains("oracle")) {
            const auto& o = j["oracle"];
            cfg.oracle.lambda = o.value("lambda", cfg.oracle.lambda);
            cfg.oracle.phi_n = o.value("phi_n", cfg.oracle.phi_n);
            cfg.oracle.f_n = o.value("f_n", cfg.oracle.f_n);
            if (o.contains("steps")) cfg.oracle.steps = o["steps"].get<std::vector<std::size_t>>();
            if (o.contains("grading")) {
                if (o["grading"].is_string()) {
                    const auto g = o["grading"].get<std::string>();
                    if (g == "optimal") cfg.oracle.grading.reset();
                    else if (g == "uniform") cfg.oracle.grading = 1.0;
                    else throw ConfigError("oracle.grading must be 'optimal', 'uniform' or a number");
                } else {
                    cfg.oracle.grading = o["grading"].get<double>();
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    RunConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

/// Normalised echo of the configuration. The output directory is left out so
/// that the manifest does not depend on where it is written.
inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["command"] = c.command;
    j["rho"] = c.rho;
    j["T"] = c.final_time ? nlohmann::json(*c.final_time) : nlohmann::json(nullptr);
    j["grid"] = {{"dim", c.dim}, {"points", c.points}};
    j["symbol"] = detail::symbol_to_json(c.symbol);
    auto field = [](const std::optional<FieldSpec>& f) { return f ? detail::field_to_json(*f) : nlohmann::json(nullptr); };
    j["phi"] = field(c.phi);
    j["source"] = field(c.source);
    j["observation"] = field(c.observation);
    j["times"] = c.times;
    j["cutoff"] = c.cutoff ? nlohmann::json(*c.cutoff) : nlohmann::json(nullptr);
    j["amplification_floor"] = c.amplification_floor;
    j["thresholds"] = {{"tau_margin", c.thresholds.tau_margin},
                       {"slope_margin", c.thresholds.slope_margin},
                       {"amplification_ceiling", c.thresholds.amplification_ceiling}};
    j["field_format"] = c.field_format;
    if (c.command == "ml-eval") {
        j["mu"] = c.mu;
        j["z"] = c.z ? nlohmann::json(*c.z) : nlohmann::json(nullptr);
    }
    if (c.command == "oracle") {
        j["oracle"] = {{"lambda", c.oracle.lambda},
                       {"phi_n", c.oracle.phi_n},
                       {"f_n", c.oracle.f_n},
                       {"steps", c.oracle.steps},
                       {"grading", c.oracle.grading ? nlohmann::json(*c.oracle.grading) : nlohmann::json("optimal")}};
    }
    return j;
}

inline void validate(const RunConfig& c) {
    const auto& cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
        throw ConfigError("unknown command '" + c.command + "'");
    if (!(c.rho > 0.0 && c.rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
    if (c.command == "ml-eval") {
        if (!c.z) throw ConfigError("ml-eval needs z");
        if (!(c.mu > 0.0)) throw ConfigError("mu must be positive");
        return;
    }
    if (!c.final_time) throw ConfigError(c.command + " needs T");
    if (!(*c.final_time > 0.0) || !std::isfinite(*c.final_time)) throw ConfigError("T must be positive");
    if (c.field_format != "bin" && c.field_format != "json") throw ConfigError("field_format must be 'bin' or 'json'");
    if (c.cutoff && !(*c.cutoff >= 0.0)) throw ConfigError("cutoff must be >= 0");
    if (!(c.amplification_floor > 0.0)) throw ConfigError("amplification_floor must be positive");
    for (const double t : c.times)
        if (!(t >= 0.0 && t <= *c.final_time)) throw ConfigError("times must lie in [0, T]");
    if (c.command == "oracle") {
        if (c.oracle.steps.empty()) throw ConfigError("oracle needs at least one step count");
        for (const auto m : c.oracle.steps)
            if (m < 2) throw ConfigError("oracle step counts must be >= 2");
        if (!(c.oracle.lambda >= 0.0)) throw ConfigError("oracle lambda must be >= 0");
        if (c.oracle.grading && !(*c.oracle.grading >= 1.0)) throw ConfigError("oracle grading must be >= 1");
        return;
    }
    if ((c.command == "forward" || c.command == "roundtrip") && !c.source)
        throw ConfigError(c.command + " needs a source field");
    if ((c.command == "invert" || c.command == "diagnose") && !c.observation)
        throw ConfigError(c.command + " needs an observation field");
}

// ---------------------------------------------------------------- output helpers

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Comma-separated table with a header row and LF line endings.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
        if (!out_) throw IOError("cannot open '" + path.string() + "' for writing");
        write_cells(header);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (const double v : values) cells.push_back(format_double(v));
        write_cells(cells);
    }

    void close() {
        out_.close();
        if (!out_) throw IOError("write to '" + path_.string() + "' failed");
    }

private:
    void write_cells(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
    std::filesystem::path path_;
};

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    out.close();
    if (!out) throw IOError("write to '" + path.string() + "' failed");
}

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json frequencies_json(const std::vector<Frequency>& modes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& n : modes) arr.push_back(n);
    return arr;
}

/// Manifest-first bookkeeping for one run.
class RunRecord {
public:
    RunRecord(std::filesystem::path dir, const RunConfig& cfg) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IOError("cannot create output directory '" + dir_.string() + "': " + ec.message());
        manifest_["tool"] = "subdiff";
        manifest_["versions"] = {{"subdiff", tool_version},
                                 {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                                 {"boost", BOOST_LIB_VERSION}};
        manifest_["command"] = cfg.command;
        manifest_["config"] = to_json(cfg);
        manifest_["tolerances"] = {{"ml_target_rel_error", MittagLeffler::target_rel_error},
                                   {"hermitian_defect_max", 1e-10},
                                   {"imaginary_residue_max", 1e-12},
                                   {"shell_noise_floor", shell_noise_floor},
                                   {"amplification_floor", cfg.amplification_floor}};
        manifest_["outputs"] = nlohmann::json::array();
        manifest_["results"] = nlohmann::json::object();
        manifest_["status"] = "running";
        started_ = utc_now();
        flush();
        write_json_file(dir_ / "timestamps.json", {{"started", started_}, {"finished", nullptr}});
    }

    const std::filesystem::path& dir() const { return dir_; }
    nlohmann::json& results() { return manifest_["results"]; }

    std::filesystem::path output(const std::string& name) {
        manifest_["outputs"].push_back(name);
        return dir_ / name;
    }

    void complete() { finish("complete", nullptr); }
    void fail(const std::string& what) { finish("failed", what); }

private:
    void finish(const char* status, const nlohmann::json& error) {
        manifest_["status"] = status;
        if (!error.is_null()) manifest_["error"] = error;
        flush();
        write_json_file(dir_ / "timestamps.json", {{"started", started_}, {"finished", utc_now()}});
    }

    void flush() { write_json_file(dir_ / "manifest.json", manifest_); }

    std::filesystem::path dir_;
    nlohmann::json manifest_;
    std::string started_;
};

// ---------------------------------------------------------------- problem assembly

struct Workspace {
    TorusGrid grid;
    EllipticSymbol symbol;
    SpectralField phi;
    std::optional<SpectralField> source;
    std::optional<SpectralField> observation;
};

inline EllipticSymbol build_symbol(const SymbolSpec& s, std::size_t dim) {
    try {
        if (s.preset == "laplacian") return EllipticSymbol::laplacian(dim);
        if (s.preset == "bilaplacian") return EllipticSymbol::bilaplacian(dim);
        return EllipticSymbol(dim, s.order, s.terms);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("symbol: ") + e.what());
    }
}

inline Workspace assemble(const RunConfig& c) {
    // Files fix the grid; every file must agree, and presets follow it.
    std::optional<TorusGrid> file_grid;
    std::map<std::string, io::FieldSamples> loaded;
    auto load = [&](const std::string& role, const std::optional<FieldSpec>& f) {
        if (!f || f->kind != FieldSpec::Kind::file) return;
        auto samples = io::read_field(f->file);
        if (file_grid && !(*file_grid == samples.grid))
            throw ConfigError("field '" + f->file.string() + "' lives on a different grid");
        file_grid = samples.grid;
        loaded.emplace(role, std::move(samples));
    };
    load("phi", c.phi);
    load("source", c.source);
    load("observation", c.observation);

    TorusGrid grid;
    try {
        grid = file_grid ? *file_grid : TorusGrid{c.dim, c.points};
    } catch (const ShapeError& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }

    auto field = [&](const std::string& role, const std::optional<FieldSpec>& f) {
        if (!f) return SpectralField(grid);
        switch (f->kind) {
        case FieldSpec::Kind::file: return analyze(grid, loaded.at(role).samples);
        case FieldSpec::Kind::preset: return analyze(grid, sample_terms(grid, preset_terms(f->preset, grid.dim)));
        case FieldSpec::Kind::terms: return analyze(grid, sample_terms(grid, f->terms));
        }
        return SpectralField(grid);
    };

    Workspace w{grid, build_symbol(c.symbol, grid.dim), field("phi", c.phi), std::nullopt, std::nullopt};
    if (c.source) w.source = field("source", c.source);
    if (c.observation) w.observation = field("observation", c.observation);
    w.symbol.validate_on(grid);
    return w;
}

inline void write_spectral(RunRecord& rec, const std::string& stem, const RunConfig& c, const SpectralField& f) {
    const auto path = rec.output(stem + "." + c.field_format);
    io::write_field(path, {f.grid(), synthesize(f)});
}

inline void write_amplification_csv(RunRecord& rec, const std::vector<double>& amp) {
    CsvWriter csv(rec.output("amplification.csv"), {"shell", "amplification"});
    for (std::size_t r = 0; r < amp.size(); ++r) csv.row({static_cast<double>(r), amp[r]});
    csv.close();
}

inline std::vector<double> times_or(const RunConfig& c, std::vector<double> fallback) {
    return c.times.empty() ? fallback : c.times;
}

// ---------------------------------------------------------------- commands

inline void run_forward(const RunConfig& c, RunRecord& rec) {
    const Workspace w = assemble(c);
    const double T = *c.final_time;
    ProblemSpec spec{FractionalOrder(c.rho), T, w.symbol, w.grid, w.phi, ForwardData{*w.source}};
    const auto times = times_or(c, {T});
    const SolutionPair sol = solve_forward(spec, times);

    CsvWriter csv(rec.output("trajectory.csv"), {"index", "time", "l2_norm", "max_abs_coeff"});
    nlohmann::json snaps = nlohmann::json::array();
    for (std::size_t k = 0; k < sol.trajectories.size(); ++k) {
        const auto& s = sol.trajectories[k];
        const std::string stem = "u_" + std::to_string(k);
        write_spectral(rec, stem, c, s.coefficients);
        csv.row({static_cast<double>(k), s.time, s.coefficients.l2_norm(), s.coefficients.max_abs()});
        snaps.push_back({{"time", s.time}, {"field", stem + "." + c.field_format}});
    }
    csv.close();
    rec.results()["snapshots"] = snaps;
}

inline void run_invert(const RunConfig& c, RunRecord& rec) {
    const Workspace w = assemble(c);
    const double T = *c.final_time;
    InverseOptions opt{c.cutoff, c.amplification_floor};
    ProblemSpec spec{FractionalOrder(c.rho), T, w.symbol, w.grid, w.phi, InverseData{*w.observation}, opt};
    const auto times = times_or(c, {0.0, T});
    const SolutionPair sol = solve_inverse(spec, times);

    write_spectral(rec, "source", c, sol.source);
    nlohmann::json snaps = nlohmann::json::array();
    for (std::size_t k = 0; k < sol.trajectories.size(); ++k) {
        const std::string stem = "u_" + std::to_string(k);
        write_spectral(rec, stem, c, sol.trajectories[k].coefficients);
        snaps.push_back({{"time", sol.trajectories[k].time}, {"field", stem + "." + c.field_format}});
    }
    const auto final_state = solve_forward(
        ProblemSpec{FractionalOrder(c.rho), T, w.symbol, w.grid, w.phi, ForwardData{sol.source}}, {T});
    write_amplification_csv(rec, amplification_profile(FractionalOrder(c.rho), T, w.symbol, w.grid));

    auto& r = rec.results();
    r["snapshots"] = snaps;
    r["source_l2_norm"] = sol.source.l2_norm();
    r["observation_max_residual"] = (final_state.trajectories[0].coefficients - *w.observation).max_abs();
    r["overflowed_modes"] = frequencies_json(sol.overflowed_modes);
    r["cutoff_modes"] = frequencies_json(sol.cutoff_modes);
}

inline void run_roundtrip(const RunConfig& c, RunRecord& rec) {
    const Workspace w = assemble(c);
    const double T = *c.final_time;
    InverseOptions opt{c.cutoff, c.amplification_floor};
    const RoundTripReport rt = round_trip(FractionalOrder(c.rho), T, w.symbol, w.phi, *w.source, opt);

    write_spectral(rec, "observation", c, rt.observation);
    write_spectral(rec, "source_reconstructed", c, rt.reconstructed_source);
    write_amplification_csv(rec, rt.amplification_by_shell);

    auto& r = rec.results();
    r["source_relative_l2_error"] = rt.source_relative_l2_error;
    r["observation_max_residual"] = rt.observation_max_residual;
    r["initial_max_residual"] = rt.initial_max_residual;
    r["overflowed_modes"] = frequencies_json(rt.overflowed_modes);
}

inline void run_diagnose(const RunConfig& c, RunRecord& rec) {
    const Workspace w = assemble(c);
    const double T = *c.final_time;
    ProblemSpec spec{FractionalOrder(c.rho), T, w.symbol, w.grid, w.phi, InverseData{*w.observation}};
    const ConditionReport report = check_conditions(spec, c.thresholds);
    write_json_file(rec.output("diagnostics.json"), to_json(report));
    write_amplification_csv(rec, report.amplification);
    rec.results()["verdict"] = std::string(to_string(report.verdict));
}

inline void run_oracle(const RunConfig& c, RunRecord& rec) {
    const double T = *c.final_time;
    const FractionalOrder rho(c.rho);
    const double grading = c.oracle.grading.value_or((2.0 - c.rho) / c.rho);
    const auto exact = forward_mode_coeff(ModeKernel(rho), T, c.oracle.lambda, c.oracle.phi_n, c.oracle.f_n);

    CsvWriter csv(rec.output("convergence.csv"), {"steps", "max_step", "value", "abs_error", "observed_order"});
    nlohmann::json rows = nlohmann::json::array();
    double prev_err = std::numeric_limits<double>::quiet_NaN();
    std::size_t prev_m = 0;
    for (const std::size_t m : c.oracle.steps) {
        const oracle::L1SchemeConfig cfg{m, c.rho, grading};
        const auto traj = oracle::l1_solve_mode(cfg, c.oracle.lambda, c.oracle.phi_n, c.oracle.f_n, T);
        double max_step = 0.0;
        for (std::size_t j = 1; j < traj.times.size(); ++j) max_step = std::max(max_step, traj.times[j] - traj.times[j - 1]);
        const double value = traj.values.back().real();
        const double err = std::abs(traj.values.back() - exact);
        double order = std::numeric_limits<double>::quiet_NaN();
        if (prev_m && err > 0.0 && prev_err > 0.0)
            order = std::log(prev_err / err) / std::log(static_cast<double>(m) / static_cast<double>(prev_m));
        csv.row({static_cast<double>(m), max_step, value, err, order});
        rows.push_back({{"steps", m}, {"abs_error", err}, {"observed_order", std::isnan(order) ? nlohmann::json(nullptr) : nlohmann::json(order)}});
        prev_err = err;
        prev_m = m;
    }
    csv.close();
    auto& r = rec.results();
    r["closed_form"] = exact.real();
    r["grading"] = grading;
    r["expected_order"] = 2.0 - c.rho;
    r["ladder"] = rows;
}

inline void run_ml_eval(const RunConfig& c, std::ostream& out) {
    const MittagLeffler ml({c.rho, c.mu});
    const MLEvaluation e = ml.evaluate(*c.z);
    out << format_double(e.value) << ' ' << to_string(e.regime) << '\n';
}

/// Exit status for an error class: 1 config, 2 io, 3 numeric.
inline int exit_code(ErrorClass c) { return static_cast<int>(c); }

/// Execute a validated configuration. Returns the process exit status.
inline int run(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::optional<RunRecord> rec;
    auto report = [&](int code, const std::string& what) {
        err << "subdiff: " << what << '\n';
        if (rec) {
            try {
                rec->fail(what);
            } catch (const Error&) {
            }
        }
        return code;
    };
    try {
        validate(c);
        if (c.command == "ml-eval") {
            run_ml_eval(c, out);
            return 0;
        }
        rec.emplace(c.output_dir, c);
        if (c.command == "forward") run_forward(c, *rec);
        else if (c.command == "invert") run_invert(c, *rec);
        else if (c.command == "roundtrip") run_roundtrip(c, *rec);
        else if (c.command == "diagnose") run_diagnose(c, *rec);
        else if (c.command == "oracle") run_oracle(c, *rec);
        rec->complete();
        out << "wrote " << (c.output_dir / "manifest.json").string() << '\n';
        return 0;
    } catch (const Error& e) {
        return report(exit_code(e.error_class()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return report(exit_code(ErrorClass::config), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return report(exit_code(ErrorClass::io), e.what());
    }
}

} // namespace subdiff::cli
