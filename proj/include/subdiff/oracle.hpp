#pragma once

// Independent verification paths. Nothing here calls into special_functions:
// the series reference runs on Boost.Multiprecision with Boost's own gamma,
// and the L1 stepper only needs Gamma(2 - rho) from the standard library.

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "subdiff/errors.hpp"

namespace subdiff::oracle {

using reference_float = boost::multiprecision::cpp_bin_float_50;

/// Significant decimal digits carried by reference_float, minus a guard.
inline constexpr int reference_digits = 47;

/// Direct summation of sum_k z^k / Gamma(rho k + mu) in 50-digit arithmetic.
///
/// Stops once terms decrease monotonically and fall below tol / 1000; the
/// series alternates for z < 0, so the remainder is bounded by the first
/// omitted term. Throws CancellationError when the largest partial term
/// times the working epsilon would exceed tol.
inline reference_float ml_series_reference_mp(double rho, double mu, double z, double tol) {
    if (!(rho > 0.0) || !(mu > 0.0)) throw DomainError("ml_series_reference: rho and mu must be positive");
    if (z > 0.0) throw DomainError("ml_series_reference: z must be <= 0");
    if (!(tol > 0.0)) throw DomainError("ml_series_reference: tol must be positive");

    const reference_float zr(z);
    const reference_float rho_r(rho);
    const reference_float mu_r(mu);
    const reference_float eps = pow(reference_float(10), -reference_digits);

    reference_float sum = 0;
    reference_float power = 1;
    reference_float max_term = 0;
    reference_float prev = 0;
    for (std::size_t k = 0; k < 200000; ++k) {
        const reference_float x = rho_r * static_cast<double>(k) + mu_r;
        const reference_float term = power / boost::math::tgamma(x);
        sum += term;
        const reference_float mag = abs(term);
        if (mag > max_term) {
            max_term = mag;
            if (max_term * eps * 100 > tol)
                throw CancellationError("ml_series_reference: |z| = " + std::to_string(-z) +
                                        " exceeds the precision budget for tol " + std::to_string(tol));
        }
        if (x > 2 && k > 0 && mag <= prev && mag * 1000 <= tol) return sum;
        prev = mag;
        power *= zr;
        if (z == 0.0) return sum;
    }
    throw CancellationError("ml_series_reference: series did not converge");
}

inline double ml_series_reference(double rho, double mu, double z, double tol) {
    return static_cast<double>(ml_series_reference_mp(rho, mu, z, tol));
}

/// L1 discretisation of the Caputo derivative on t_j = T (j/M)^grading.
/// grading = 1 is the uniform mesh; grading = (2 - rho)/rho restores the
/// O(M^(rho - 2)) rate for solutions that behave like t^rho near t = 0.
struct L1SchemeConfig {
    std::size_t steps = 2;
    double rho = 1.0;
    double grading = 1.0;

    void validate() const {
        if (steps < 2) throw DomainError("L1 scheme: steps must be >= 2");
        if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("L1 scheme: rho must lie in (0, 1]");
        if (!(grading >= 1.0)) throw DomainError("L1 scheme: grading must be >= 1");
    }

    static L1SchemeConfig optimal_graded(std::size_t steps, double rho) {
        return {steps, rho, (2.0 - rho) / rho};
    }
};

struct L1Trajectory {
    std::vector<double> times;
    std::vector<std::complex<double>> values;
};

namespace detail {

// (1 + x)^beta - 1 for 0 <= x < 0.05 by its binomial series; the term count
// keeps the truncation below 1e-17 relative.
class BinomialIncrement {
public:
    explicit BinomialIncrement(double beta) {
        for (int k = 1; k <= terms; ++k) c_[k] = (beta - (k - 1)) / k;
    }

    double operator()(double x) const {
        const int n = x < 1e-3 ? 6 : x < 1e-2 ? 9 : terms;
        double acc = 1.0;
        for (int k = n; k >= 2; --k) acc = 1.0 + c_[k] * x * acc;
        return c_[1] * x * acc;
    }

private:
    static constexpr int terms = 14;
    double c_[terms + 1] = {};
};

// (b + tau)^beta - b^beta given b^beta, without cancellation for tau << b.
inline double power_increment(const BinomialIncrement& series, double b, double b_pow, double tau, double beta) {
    if (b == 0.0) return std::pow(tau, beta);
    const double x = tau / b;
    if (x < 0.05) return b_pow * series(x);
    return b_pow * std::expm1(beta * std::log1p(x));
}

} // namespace detail

/// Solve D_t^rho T + lambda T = f, T(0) = phi with the implicit L1 scheme.
inline L1Trajectory l1_solve_mode(const L1SchemeConfig& cfg, double lambda, std::complex<double> phi,
                                  std::complex<double> f, double final_time) {
    cfg.validate();
    if (!(lambda >= 0.0)) throw DomainError("L1 scheme: lambda must be >= 0");
    if (!(final_time > 0.0)) throw DomainError("L1 scheme: final time must be positive");

    const std::size_t m = cfg.steps;
    const double beta = 1.0 - cfg.rho;
    const double inv_gamma = 1.0 / std::tgamma(2.0 - cfg.rho);

    L1Trajectory out;
    out.times.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j)
        out.times[j] = final_time * std::pow(static_cast<double>(j) / static_cast<double>(m), cfg.grading);
    out.times[m] = final_time;
    out.values.assign(m + 1, phi);

    std::vector<std::complex<double>> increments(m + 1, 0.0);
    const detail::BinomialIncrement series(beta);
    const auto& t = out.times;

    if (cfg.grading == 1.0) {
        // Uniform mesh: weights depend on n - j only.
        const double dt = final_time / static_cast<double>(m);
        const double scale = std::pow(dt, -cfg.rho) * inv_gamma;
        std::vector<double> b(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double kd = static_cast<double>(k);
            b[k] = scale * detail::power_increment(series, kd, std::pow(kd, beta), 1.0, beta);
        }
        for (std::size_t n = 1; n <= m; ++n) {
            std::complex<double> hist = 0.0;
            for (std::size_t j = 1; j < n; ++j) hist += b[n - j] * increments[j];
            out.values[n] = (f - hist + b[0] * out.values[n - 1]) / (b[0] + lambda);
            increments[n] = out.values[n] - out.values[n - 1];
        }
        return out;
    }

    std::vector<double> tau(m + 1, 0.0);
    for (std::size_t j = 1; j <= m; ++j) {
        tau[j] = t[j] - t[j - 1];
        if (!(tau[j] > 0.0)) throw DomainError("L1 scheme: graded mesh underflows, reduce grading");
    }
    std::vector<double> dist_pow(m + 1);
    for (std::size_t n = 1; n <= m; ++n) {
        for (std::size_t j = 0; j < n; ++j) dist_pow[j] = std::pow(t[n] - t[j], beta);
        std::complex<double> hist = 0.0;
        for (std::size_t j = 1; j < n; ++j) {
            const double b = t[n] - t[j];
            // plain difference loses at most ~20/beta ulps once tau >= 0.05 b
            const double inc = tau[j] < 0.05 * b ? detail::power_increment(series, b, dist_pow[j], tau[j], beta)
                                                 : dist_pow[j - 1] - dist_pow[j];
            hist += inc / tau[j] * increments[j];
        }
        const double diag = std::pow(tau[n], beta) / tau[n] * inv_gamma;
        out.values[n] = (f - hist * inv_gamma + diag * out.values[n - 1]) / (diag + lambda);
        increments[n] = out.values[n] - out.values[n - 1];
    }
    return out;
}

} // namespace subdiff::oracle
