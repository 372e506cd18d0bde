#pragma once

// Command-line front end: flags override values loaded from --config.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subdiff/cli_io.hpp"

namespace subdiff::cli {

namespace detail {

struct Flags {
    std::string config;
    std::optional<double> rho, final_time, cutoff, mu, z, lambda, phi_n, f_n, grading;
    std::optional<std::size_t> grid, dim;
    std::optional<std::string> symbol, phi, source, observation, preset, out, format;
    std::vector<double> times;
    std::vector<std::size_t> steps;
};

inline void add_common(CLI::App& sub, Flags& f) {
    sub.add_option("--config", f.config, "JSON config file");
    sub.add_option("--rho", f.rho, "fractional order in (0, 1]");
    sub.add_option("--T", f.final_time, "final time");
    sub.add_option("--grid", f.grid, "points per dimension (even)");
    sub.add_option("--dim", f.dim, "torus dimension");
    sub.add_option("--symbol", f.symbol, "laplacian | bilaplacian");
    sub.add_option("--phi", f.phi, "initial field: preset name or .bin/.json path");
    sub.add_option("--source", f.source, "source field: preset name or path");
    sub.add_option("--observation", f.observation, "final-time field: preset name or path");
    sub.add_option("--preset", f.preset, "shorthand for the command's main data field");
    sub.add_option("--out", f.out, "output directory");
    sub.add_option("--times", f.times, "snapshot times")->delimiter(',');
    sub.add_option("--cutoff", f.cutoff, "zero source modes with |n| above this");
    sub.add_option("--format", f.format, "field output format: bin | json");
}

inline void apply(RunConfig& c, const Flags& f) {
    if (f.rho) c.rho = *f.rho;
    if (f.final_time) c.final_time = *f.final_time;
    if (f.grid) c.points = *f.grid;
    if (f.dim) c.dim = *f.dim;
    if (f.symbol) c.symbol = cli::detail::symbol_from_json(*f.symbol);
    if (f.phi) c.phi = cli::detail::field_from_string(*f.phi);
    if (f.source) c.source = cli::detail::field_from_string(*f.source);
    if (f.observation) c.observation = cli::detail::field_from_string(*f.observation);
    if (f.preset) {
        auto field = cli::detail::field_from_string(*f.preset);
        if (c.command == "invert" || c.command == "diagnose") c.observation = field;
        else c.source = field;
    }
    if (f.out) c.output_dir = *f.out;
    if (!f.times.empty()) c.times = f.times;
    if (f.cutoff) c.cutoff = *f.cutoff;
    if (f.format) c.field_format = *f.format;
    if (f.mu) c.mu = *f.mu;
    if (f.z) c.z = *f.z;
    if (f.lambda) c.oracle.lambda = *f.lambda;
    if (f.phi_n) c.oracle.phi_n = *f.phi_n;
    if (f.f_n) c.oracle.f_n = *f.f_n;
    if (!f.steps.empty()) c.oracle.steps = f.steps;
    if (f.grading) c.oracle.grading = *f.grading;
}

} // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Caputo subdiffusion on the torus: forward solve, source recovery, diagnostics"};
    app.require_subcommand(1);
    detail::Flags flags;

    std::vector<CLI::App*> subs;
    static const std::map<std::string, std::string> blurbs{
        {"forward", "solve for u given phi and f, write snapshots"},
        {"invert", "recover f from phi and the final-time observation"},
        {"roundtrip", "forward then invert a known source and report the error"},
        {"ml-eval", "evaluate E_{rho,mu}(z) and print the regime used"},
        {"oracle", "L1 time stepping of one mode against the closed form"},
        {"diagnose", "smoothness and amplification checks on inverse data"},
    };
    for (const auto& name : commands()) {
        const auto it = blurbs.find(name);
        CLI::App* sub = app.add_subcommand(name, it == blurbs.end() ? std::string() : it->second);
        detail::add_common(*sub, flags);
        subs.push_back(sub);
    }
    CLI::App* ml = app.get_subcommand("ml-eval");
    ml->add_option("--mu", flags.mu, "second Mittag-Leffler parameter");
    ml->add_option("--z", flags.z, "argument (<= 0)");
    CLI::App* orc = app.get_subcommand("oracle");
    orc->add_option("--lambda", flags.lambda, "mode eigenvalue");
    orc->add_option("--phi-n", flags.phi_n, "initial mode value");
    orc->add_option("--f-n", flags.f_n, "source mode value");
    orc->add_option("--steps", flags.steps, "step counts of the refinement ladder")->delimiter(',');
    orc->add_option("--grading", flags.grading, "mesh grading exponent (default (2-rho)/rho)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        for (auto* s : subs)
            if (s->parsed()) out << s->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "subdiff: " << e.what() << '\n';
        return exit_code(ErrorClass::config);
    }

    std::string command;
    for (auto* s : subs)
        if (s->parsed()) command = s->get_name();

    RunConfig cfg;
    try {
        if (!flags.config.empty()) cfg = load_config(flags.config);
        if (!cfg.command.empty() && cfg.command != command)
            throw ConfigError("config is for '" + cfg.command + "' but the command is '" + command + "'");
        cfg.command = command;
        detail::apply(cfg, flags);
    } catch (const Error& e) {
        err << "subdiff: " << e.what() << '\n';
        return exit_code(e.error_class());
    }
    return run(cfg, out, err);
}

} // namespace subdiff::cli
