#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "subdiff/errors.hpp"
#include "subdiff/special_functions.hpp"
#include "subdiff/torus_spectral.hpp"

namespace subdiff {

/// Order rho in (0, 1] of the Caputo derivative.
class FractionalOrder {
public:
    explicit FractionalOrder(double rho) : rho_(rho) {
        if (!(rho > 0.0 && rho <= 1.0))
            throw DomainError("FractionalOrder: rho must lie in (0, 1], got " + std::to_string(rho));
    }
    double value() const noexcept { return rho_; }

private:
    double rho_;
};

/// Per-mode solution operators for D_t^rho T + lambda T = f_n, T(0) = phi_n:
///   decay(lambda, t)    = E_{rho,1}(-lambda t^rho)
///   response(lambda, t) = t^rho E_{rho,rho+1}(-lambda t^rho)
/// so that T(t) = phi_n decay + f_n response.
class ModeKernel {
public:
    explicit ModeKernel(FractionalOrder rho)
        : rho_(rho.value()), e1_({rho.value(), 1.0}), e2_({rho.value(), rho.value() + 1.0}) {}

    double rho() const noexcept { return rho_; }

    double decay(double lambda, double t) const {
        check(lambda, t);
        if (t == 0.0) return 1.0;
        return e1_(-lambda * std::pow(t, rho_));
    }

    double response(double lambda, double t) const {
        check(lambda, t);
        if (t == 0.0) return 0.0;
        const double tr = std::pow(t, rho_);
        return tr * e2_(-lambda * tr);
    }

private:
    static void check(double lambda, double t) {
        if (!(t >= 0.0)) throw DomainError("ModeKernel: time must be >= 0");
        if (!(lambda >= 0.0)) throw DomainError("ModeKernel: eigenvalue must be >= 0");
    }

    double rho_;
    MittagLeffler e1_;
    MittagLeffler e2_;
};

/// T_n(t) = phi_n E_{rho,1}(-lambda t^rho) + f_n t^rho E_{rho,rho+1}(-lambda t^rho).
inline std::complex<double> forward_mode_coeff(const ModeKernel& kernel, double t, double lambda,
                                               std::complex<double> phi_n, std::complex<double> f_n) {
    if (t == 0.0) return phi_n;
    return phi_n * kernel.decay(lambda, t) + f_n * kernel.response(lambda, t);
}

inline std::complex<double> forward_mode_coeff(double rho, double t, double lambda, std::complex<double> phi_n,
                                               std::complex<double> f_n) {
    return forward_mode_coeff(ModeKernel(FractionalOrder(rho)), t, lambda, phi_n, f_n);
}

inline constexpr double default_amplification_floor = 1e-300;

/// f_n = (psi_n - phi_n E_{rho,1}(-lambda T^rho)) / (T^rho E_{rho,rho+1}(-lambda T^rho)).
/// Throws AmplificationOverflow when the denominator drops below `floor`.
inline std::complex<double> inverse_source_coeff(const ModeKernel& kernel, double final_time, double lambda,
                                                 std::complex<double> phi_n, std::complex<double> psi_n,
                                                 double floor = default_amplification_floor) {
    if (!(final_time > 0.0)) throw DomainError("inverse_source_coeff: final time must be positive");
    const double denom = kernel.response(lambda, final_time);
    if (!(denom >= floor))
        throw AmplificationOverflow("inverse_source_coeff: denominator " + std::to_string(denom) +
                                    " below floor for lambda = " + std::to_string(lambda));
    return (psi_n - phi_n * kernel.decay(lambda, final_time)) / denom;
}

inline std::complex<double> inverse_source_coeff(double rho, double final_time, double lambda,
                                                 std::complex<double> phi_n, std::complex<double> psi_n,
                                                 double floor = default_amplification_floor) {
    return inverse_source_coeff(ModeKernel(FractionalOrder(rho)), final_time, lambda, phi_n, psi_n, floor);
}

/// Amplification 1 / (T^rho E_{rho,rho+1}(-lambda T^rho)) of mode lambda in the inversion.
inline double amplification(const ModeKernel& kernel, double final_time, double lambda) {
    return 1.0 / kernel.response(lambda, final_time);
}

struct ForwardData {
    SpectralField source; // f
};

struct InverseData {
    SpectralField observation; // Psi = u(., T)
};

struct InverseOptions {
    /// Drop source modes with |n| > cutoff. Off by default (exact inversion).
    std::optional<double> cutoff;
    double amplification_floor = default_amplification_floor;
};

/// Everything that defines one problem on the torus.
struct ProblemSpec {
    FractionalOrder rho;
    double final_time;
    EllipticSymbol symbol;
    TorusGrid grid;
    SpectralField phi;
    std::variant<ForwardData, InverseData> data;
    InverseOptions options{};

    bool is_forward() const { return std::holds_alternative<ForwardData>(data); }
    bool is_inverse() const { return std::holds_alternative<InverseData>(data); }

    void validate() const {
        if (!(final_time > 0.0) || !std::isfinite(final_time))
            throw DomainError("ProblemSpec: final time must be positive");
        grid.validate();
        if (symbol.dim() != grid.dim) throw ShapeError("ProblemSpec: symbol and grid dimensions differ");
        if (!(phi.grid() == grid)) throw ShapeError("ProblemSpec: phi lives on a different grid");
        const SpectralField& other =
            is_forward() ? std::get<ForwardData>(data).source : std::get<InverseData>(data).observation;
        if (!(other.grid() == grid)) throw ShapeError("ProblemSpec: data field lives on a different grid");
        if (options.cutoff && !(*options.cutoff >= 0.0)) throw DomainError("ProblemSpec: cutoff must be >= 0");
    }
};

struct Snapshot {
    double time = 0.0;
    SpectralField coefficients; // T_n(time)
};

struct SolutionPair {
    SpectralField source;
    std::vector<Snapshot> trajectories;
    std::vector<Frequency> overflowed_modes; // zeroed: denominator under the floor
    std::vector<Frequency> cutoff_modes;     // zeroed: |n| above the cutoff
};

namespace detail {

// Kernel values for each distinct eigenvalue at one time.
class KernelCache {
public:
    KernelCache(const ModeKernel& kernel, double t) : kernel_(kernel), t_(t) {}

    std::pair<double, double> operator()(double lambda) {
        auto it = cache_.find(lambda);
        if (it != cache_.end()) return it->second;
        const std::pair<double, double> v{kernel_.decay(lambda, t_), kernel_.response(lambda, t_)};
        cache_.emplace(lambda, v);
        return v;
    }

private:
    const ModeKernel& kernel_;
    double t_;
    std::unordered_map<double, std::pair<double, double>> cache_;
};

inline void check_times(const std::vector<double>& times, double final_time) {
    for (const double t : times)
        if (!(t >= 0.0 && t <= final_time))
            throw DomainError("requested time " + std::to_string(t) + " outside [0, T]");
}

inline std::vector<Snapshot> evolve(const ModeKernel& kernel, const std::vector<double>& eigen,
                                    const SpectralField& phi, const SpectralField& source,
                                    const std::vector<double>& times) {
    std::vector<Snapshot> out;
    out.reserve(times.size());
    for (const double t : times) {
        SpectralField u(phi.grid());
        if (t == 0.0) {
            u = phi;
        } else {
            KernelCache cache(kernel, t);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const auto [decay, response] = cache(eigen[i]);
                u[i] = phi[i] * decay + source[i] * response;
            }
        }
        out.push_back({t, std::move(u)});
    }
    return out;
}

} // namespace detail

/// Mode trajectories T_n(t) for a known source f.
inline SolutionPair solve_forward(const ProblemSpec& spec, const std::vector<double>& times) {
    spec.validate();
    if (!spec.is_forward()) throw DomainError("solve_forward: spec is in inverse mode");
    detail::check_times(times, spec.final_time);
    const ModeKernel kernel(spec.rho);
    const auto eigen = spec.symbol.eigenvalues(spec.grid);
    SolutionPair out;
    out.source = std::get<ForwardData>(spec.data).source;
    out.trajectories = detail::evolve(kernel, eigen, spec.phi, out.source, times);
    return out;
}

/// Source f from (phi, Psi), then the trajectories it generates.
/// Modes whose inversion denominator falls under the floor, or whose |n|
/// exceeds the optional cutoff, are set to zero and listed.
inline SolutionPair solve_inverse(const ProblemSpec& spec, const std::vector<double>& times) {
    spec.validate();
    if (!spec.is_inverse()) throw DomainError("solve_inverse: spec is in forward mode");
    detail::check_times(times, spec.final_time);
    const ModeKernel kernel(spec.rho);
    const auto eigen = spec.symbol.eigenvalues(spec.grid);
    const SpectralField& psi = std::get<InverseData>(spec.data).observation;
    const double cutoff2 = spec.options.cutoff ? (*spec.options.cutoff) * (*spec.options.cutoff) : -1.0;

    SolutionPair out;
    out.source = SpectralField(spec.grid);
    detail::KernelCache at_final(kernel, spec.final_time);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        if (spec.options.cutoff && spec.grid.norm2(i) > cutoff2) {
            out.cutoff_modes.push_back(spec.grid.frequency(i));
            continue;
        }
        const auto [decay, response] = at_final(eigen[i]);
        if (!(response >= spec.options.amplification_floor)) {
            out.overflowed_modes.push_back(spec.grid.frequency(i));
            continue;
        }
        out.source[i] = (psi[i] - spec.phi[i] * decay) / response;
    }
    out.trajectories = detail::evolve(kernel, eigen, spec.phi, out.source, times);
    return out;
}

/// Result of generating Psi from a known source and inverting it again.
struct RoundTripReport {
    double source_relative_l2_error = 0.0; // ||f_rec - f|| / ||f||
    double observation_max_residual = 0.0; // max_n |u_n(T) - Psi_n|
    double initial_max_residual = 0.0;     // max_n |u_n(0) - phi_n|
    std::vector<Frequency> overflowed_modes;
    std::vector<double> amplification_by_shell; // per-shell max of 1/(T^rho E_{rho,rho+1}(-A(n) T^rho))
    SpectralField observation;
    SpectralField reconstructed_source;
};

inline RoundTripReport round_trip(FractionalOrder rho, double final_time, const EllipticSymbol& symbol,
                                  const SpectralField& phi, const SpectralField& source,
                                  InverseOptions options = {}) {
    const TorusGrid grid = phi.grid();
    ProblemSpec forward{rho, final_time, symbol, grid, phi, ForwardData{source}, options};
    const SolutionPair fwd = solve_forward(forward, {final_time});

    RoundTripReport report;
    report.observation = fwd.trajectories.front().coefficients;

    ProblemSpec inverse{rho, final_time, symbol, grid, phi, InverseData{report.observation}, options};
    const SolutionPair inv = solve_inverse(inverse, {0.0, final_time});
    report.reconstructed_source = inv.source;
    report.overflowed_modes = inv.overflowed_modes;

    const double norm = source.l2_norm();
    const double diff = (inv.source - source).l2_norm();
    report.source_relative_l2_error = norm > 0.0 ? diff / norm : diff;
    report.initial_max_residual = (inv.trajectories[0].coefficients - phi).max_abs();
    report.observation_max_residual = (inv.trajectories[1].coefficients - report.observation).max_abs();

    const ModeKernel kernel(rho);
    const auto eigen = symbol.eigenvalues(grid);
    report.amplification_by_shell.assign(grid.shell_count(), 0.0);
    std::unordered_map<double, double> seen;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto it = seen.find(eigen[i]);
        if (it == seen.end()) it = seen.emplace(eigen[i], amplification(kernel, final_time, eigen[i])).first;
        auto& slot = report.amplification_by_shell[grid.shell(i)];
        slot = std::max(slot, it->second);
    }
    return report;
}

} // namespace subdiff
