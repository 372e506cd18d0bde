#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "subdiff/subdiffusion_core.hpp"
#include "subdiff/torus_spectral.hpp"

namespace subdiff {

enum class Verdict { exact_band_limited, conditions_plausible, conditions_suspect };

inline std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::exact_band_limited: return "exact_band_limited";
    case Verdict::conditions_plausible: return "conditions_plausible";
    case Verdict::conditions_suspect: return "conditions_suspect";
    }
    return "unknown";
}

/// Knobs behind the verdict. Every value is echoed into the report.
struct DiagnosticThresholds {
    /// tau = N/2 + tau_margin stands in for the strict inequality tau > N/2.
    double tau_margin = 0.5;
    /// A field counts as L2^a when its decay slope < -a - N/2 - slope_margin.
    double slope_margin = 0.5;
    /// Ceiling on max_r amp(r) * M_psi(r) / (amp(0) * max_r M_psi(r)).
    double amplification_ceiling = 10.0;
};

/// Smoothness requirement under one reading of the exponent tau.
struct SobolevReading {
    std::string name;
    double phi_order = 0.0; // required Sobolev order for phi
    double psi_order = 0.0; // required Sobolev order for Psi
    double phi_norm = 0.0;
    double psi_norm = 0.0;
    bool phi_plausible = false;
    bool psi_plausible = false;
};

struct ConditionReport {
    std::size_t dim = 1;
    int symbol_order = 2;
    double tau_required = 0.0; // N/2, the strict lower bound
    double tau_used = 0.0;     // N/2 + margin
    SobolevReading sobolev_order;  // tau counts Sobolev orders (drives the verdict)
    SobolevReading operator_power; // tau counts powers of A, order tau * m
    double phi_decay_slope = 0.0;
    double psi_decay_slope = 0.0;
    bool phi_band_limited = false;
    bool psi_band_limited = false;
    std::vector<double> amplification; // per-shell max of 1/(T^rho E_{rho,rho+1}(-A(n)T^rho))
    double tail_gain = 0.0;
    bool amplification_flagged = false;
    Verdict verdict = Verdict::conditions_suspect;
    DiagnosticThresholds thresholds;
};

/// Per-shell maxima of the inversion amplification 1/(T^rho E_{rho,rho+1}(-A(n) T^rho)).
inline std::vector<double> amplification_profile(FractionalOrder rho, double final_time, const EllipticSymbol& symbol,
                                                  const TorusGrid& grid) {
    if (!(final_time > 0.0)) throw DomainError("amplification_profile: final time must be positive");
    const ModeKernel kernel(rho);
    const auto eigen = symbol.eigenvalues(grid);
    std::vector<double> out(grid.shell_count(), 0.0);
    std::unordered_map<double, double> seen;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto it = seen.find(eigen[i]);
        if (it == seen.end()) it = seen.emplace(eigen[i], amplification(kernel, final_time, eigen[i])).first;
        out[grid.shell(i)] = std::max(out[grid.shell(i)], it->second);
    }
    return out;
}

namespace detail {

// -inf for band-limited fields, NaN when too few shells to fit.
inline double safe_slope(const SpectralField& field) {
    try {
        return decay_exponent(field);
    } catch (const InsufficientDataError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

inline bool slope_supports(double slope, double order, double dim, double margin) {
    if (std::isinf(slope) && slope < 0) return true;
    if (std::isnan(slope)) return false;
    return slope < -order - dim / 2.0 - margin;
}

} // namespace detail

/// Check the data-smoothness hypotheses on an inverse-mode problem.
///
/// The verdict reads tau as a Sobolev order: phi in L2^tau, Psi in L2^(tau+1)
/// with tau = N/2 + margin. The operator-power reading (orders tau m and
/// (tau + 1) m with tau > N/(2m)) is reported alongside it.
inline ConditionReport check_conditions(const ProblemSpec& spec, DiagnosticThresholds thresholds = {}) {
    spec.validate();
    if (!spec.is_inverse()) throw DomainError("check_conditions: spec must be in inverse mode");
    const SpectralField& phi = spec.phi;
    const SpectralField& psi = std::get<InverseData>(spec.data).observation;
    const double n = static_cast<double>(spec.grid.dim);
    const double m = static_cast<double>(spec.symbol.order());

    ConditionReport r;
    r.dim = spec.grid.dim;
    r.symbol_order = spec.symbol.order();
    r.thresholds = thresholds;
    r.tau_required = n / 2.0;
    r.tau_used = n / 2.0 + thresholds.tau_margin;

    r.phi_band_limited = is_band_limited(phi);
    r.psi_band_limited = is_band_limited(psi);
    r.phi_decay_slope = detail::safe_slope(phi);
    r.psi_decay_slope = detail::safe_slope(psi);

    auto reading = [&](std::string name, double phi_order, double psi_order) {
        SobolevReading s;
        s.name = std::move(name);
        s.phi_order = phi_order;
        s.psi_order = psi_order;
        s.phi_norm = sobolev_norm(phi, phi_order);
        s.psi_norm = sobolev_norm(psi, psi_order);
        s.phi_plausible = detail::slope_supports(r.phi_decay_slope, phi_order, n, thresholds.slope_margin);
        s.psi_plausible = detail::slope_supports(r.psi_decay_slope, psi_order, n, thresholds.slope_margin);
        return s;
    };
    r.sobolev_order = reading("sobolev_order", r.tau_used, r.tau_used + 1.0);
    const double tau_op = n / (2.0 * m) + thresholds.tau_margin;
    r.operator_power = reading("operator_power", tau_op * m, (tau_op + 1.0) * m);

    r.amplification = amplification_profile(spec.rho, spec.final_time, spec.symbol, spec.grid);
    const auto psi_shells = shell_maxima(psi);
    const double psi_top = *std::max_element(psi_shells.begin(), psi_shells.end());
    if (psi_top > 0.0) {
        double gain = 0.0;
        for (std::size_t s = 0; s < psi_shells.size(); ++s) {
            if (psi_shells[s] <= shell_noise_floor * psi_top) continue;
            gain = std::max(gain, r.amplification[s] * psi_shells[s]);
        }
        r.tail_gain = gain / (r.amplification[0] * psi_top);
    }

    if (r.phi_band_limited && r.psi_band_limited) {
        r.verdict = Verdict::exact_band_limited;
    } else {
        r.amplification_flagged = r.tail_gain > thresholds.amplification_ceiling;
        const bool smooth = r.sobolev_order.phi_plausible && r.sobolev_order.psi_plausible;
        r.verdict = smooth && !r.amplification_flagged ? Verdict::conditions_plausible : Verdict::conditions_suspect;
    }
    return r;
}

namespace detail {

// JSON has no infinities; -inf slopes become the string "-inf", NaN becomes null.
inline nlohmann::json slope_json(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    return v;
}

inline nlohmann::json reading_json(const SobolevReading& s) {
    return {{"name", s.name},
            {"phi_order", s.phi_order},
            {"psi_order", s.psi_order},
            {"phi_norm", s.phi_norm},
            {"psi_norm", s.psi_norm},
            {"phi_plausible", s.phi_plausible},
            {"psi_plausible", s.psi_plausible}};
}

} // namespace detail

inline nlohmann::json to_json(const ConditionReport& r) {
    nlohmann::json j;
    j["dim"] = r.dim;
    j["symbol_order"] = r.symbol_order;
    j["tau_required"] = r.tau_required;
    j["tau_used"] = r.tau_used;
    j["readings"] = {detail::reading_json(r.sobolev_order), detail::reading_json(r.operator_power)};
    j["verdict_reading"] = r.sobolev_order.name;
    j["decay_slopes"] = {{"phi", detail::slope_json(r.phi_decay_slope)},
                         {"psi", detail::slope_json(r.psi_decay_slope)}};
    j["band_limited"] = {{"phi", r.phi_band_limited}, {"psi", r.psi_band_limited}};
    j["amplification"] = r.amplification;
    j["tail_gain"] = r.tail_gain;
    j["amplification_flagged"] = r.amplification_flagged;
    j["verdict"] = std::string(to_string(r.verdict));
    j["thresholds"] = {{"tau_margin", r.thresholds.tau_margin},
                       {"slope_margin", r.thresholds.slope_margin},
                       {"amplification_ceiling", r.thresholds.amplification_ceiling}};
    return j;
}

} // namespace subdiff
