#pragma once

#include <quadmath.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "subdiff/detail/gauss_legendre.hpp"
#include "subdiff/errors.hpp"

namespace subdiff {

namespace detail {

using quad = __float128;

// sin(pi x) and cos(pi x) with exact zeros at the integers / half integers.
inline double sin_pi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0.0) r += 2.0;
    if (r == 0.0 || r == 1.0) return 0.0;
    if (r == 0.5) return 1.0;
    if (r == 1.5) return -1.0;
    return std::sin(std::numbers::pi * r);
}

inline double cos_pi(double x) { return sin_pi(x + 0.5); }

// 1/Gamma(x) in quad precision for any real x (zero at the poles).
inline quad rgamma_q(quad x) {
    if (x > 0) {
        if (x > 1700) return 0;
        return 1 / tgammaq(x);
    }
    const quad pi = acosq(-1);
    return sinq(pi * x) * tgammaq(1 - x) / pi;
}

// Stirling correction sum_{k=1}^{8} B_{2k} / (2k (2k-1) x^{2k-1}), valid for x >= 12.
inline double stirling_correction(double x) {
    static constexpr double c[] = {
        1.0 / 12.0,          -1.0 / 360.0,      1.0 / 1260.0,          -1.0 / 1680.0,
        1.0 / 1188.0,        -691.0 / 360360.0, 1.0 / 156.0,           -3617.0 / 122400.0,
    };
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double acc = 0.0;
    for (int k = 7; k >= 0; --k) acc = acc * inv2 + c[k];
    return acc * inv;
}

} // namespace detail

/// Euler's gamma function for x > 0.
///
/// Stirling series with an upward shift to x >= 12; the power is split in two
/// halves so that x^(x-1/2) e^(-x) never overflows before the final product.
inline double gamma(double x) {
    if (!(x > 0.0)) throw DomainError("gamma: argument must be positive, got " + std::to_string(x));
    if (x > 171.62437695630272) throw OverflowError("gamma: result overflows for x = " + std::to_string(x));
    if (x == std::floor(x)) {
        // (x-1)! exactly up to 22!, correctly rounded products beyond.
        double f = 1.0;
        for (double k = 2.0; k < x; k += 1.0) f *= k;
        return f;
    }

    double shift_product = 1.0;
    double y = x;
    while (y < 12.0) {
        shift_product *= y;
        y += 1.0;
    }
    const double half_power = std::pow(y, 0.5 * y - 0.25);
    double g = std::sqrt(2.0 * std::numbers::pi) * half_power * (half_power * std::exp(-y)) *
               std::exp(detail::stirling_correction(y));
    g /= shift_product;
    if (!std::isfinite(g)) throw OverflowError("gamma: result overflows for x = " + std::to_string(x));
    return g;
}

/// Parameters (rho, mu) of the two-parameter Mittag-Leffler function.
struct MLParams {
    double rho = 1.0;
    double mu = 1.0;

    void validate() const {
        if (!(rho > 0.0 && rho <= 1.0))
            throw DomainError("Mittag-Leffler: rho must lie in (0, 1], got " + std::to_string(rho));
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw DomainError("Mittag-Leffler: mu must be positive, got " + std::to_string(mu));
    }
};

enum class MLRegime {
    series,          // Taylor series in double precision, |z| small
    series_extended, // Taylor series in quad precision, middle band
    asymptotic,      // algebraic expansion in 1/z, large |z|
    integral,        // Hankel contour integral (circle plus collapsed rays)
    closed_form,     // rho = 1: exponential / confluent hypergeometric forms
};

inline std::string_view to_string(MLRegime r) {
    switch (r) {
    case MLRegime::series: return "series";
    case MLRegime::series_extended: return "series_extended";
    case MLRegime::asymptotic: return "asymptotic";
    case MLRegime::integral: return "integral";
    case MLRegime::closed_form: return "closed_form";
    }
    return "unknown";
}

struct MLEvaluation {
    double value = 0.0;
    MLRegime regime = MLRegime::series;
};

namespace detail {

// Reciprocal gamma tables for one (rho, mu); shared between instances.
struct MLTables {
    double inv_gamma_mu = 0.0;
    std::vector<quad> series_q;
    std::vector<double> series_d;
    std::vector<double> asym;
    std::vector<double> asym_env;
};

inline std::shared_ptr<const MLTables> cached_tables(double rho, double mu, MLTables (*build)(double, double)) {
    static std::mutex lock;
    static std::map<std::pair<double, double>, std::shared_ptr<const MLTables>> cache;
    const std::pair<double, double> key{rho, mu};
    {
        const std::lock_guard<std::mutex> g(lock);
        if (const auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto built = std::make_shared<const MLTables>(build(rho, mu));
    const std::lock_guard<std::mutex> g(lock);
    if (cache.size() >= 512) cache.clear();
    return cache.emplace(key, std::move(built)).first->second;
}

} // namespace detail

/// E_{rho,mu}(z) for real z <= 0.
///
/// Construction tabulates the reciprocal gamma values the series and the
/// asymptotic expansion need, so one instance should be reused for many
/// arguments with the same parameters. Evaluation is const and thread-safe.
///
/// With s = |z|^(1/rho) the regimes are
///   s <= series_limit            double Taylor series
///   s <= extended_limit          quad Taylor series
///   s >  extended_limit          asymptotic expansion
/// and any of the last two falls back to the contour integral when its own
/// error estimate exceeds the target. rho = 1 uses closed forms.
class MittagLeffler {
public:
    static constexpr double series_limit = 0.5;
    static constexpr double extended_limit = 40.0;
    static constexpr double target_rel_error = 5e-14;

    explicit MittagLeffler(MLParams params) : params_(params) {
        params_.validate();
        tables_ = detail::cached_tables(params_.rho, params_.mu, &MittagLeffler::build_tables);
    }

    const MLParams& params() const noexcept { return params_; }

    double operator()(double z) const { return evaluate(z).value; }

    MLEvaluation evaluate(double z) const {
        const double t = checked_magnitude(z);
        if (t == 0.0) return {tables_->inv_gamma_mu, MLRegime::series};
        if (params_.rho == 1.0) return {closed_form(t), MLRegime::closed_form};

        const double s = scaled(t);
        if (s <= series_limit) return {series_double(t).value, MLRegime::series};
        if (s <= extended_limit) {
            const Estimate e = series_quad(t);
            if (e.rel_error <= target_rel_error) return {e.value, MLRegime::series_extended};
        } else {
            const Estimate e = asymptotic(t, s);
            if (e.rel_error <= target_rel_error) return {e.value, MLRegime::asymptotic};
        }
        return {contour_integral(t, s).value, MLRegime::integral};
    }

    /// Evaluate with a forced regime; used to test agreement across regime
    /// boundaries. Throws DomainError where the regime cannot be applied.
    double evaluate_regime(MLRegime regime, double z) const {
        const double t = checked_magnitude(z);
        if (t == 0.0) return tables_->inv_gamma_mu;
        const bool exponential = params_.rho == 1.0;
        if (regime == MLRegime::closed_form) {
            if (!exponential) throw DomainError("closed_form regime requires rho = 1");
            return closed_form(t);
        }
        if (exponential && regime != MLRegime::series && regime != MLRegime::asymptotic)
            throw DomainError("regime not available for rho = 1");
        const double s = scaled(t);
        switch (regime) {
        case MLRegime::series:
            if (s > 2.0) throw DomainError("double series is out of range");
            return series_double(t).value;
        case MLRegime::series_extended:
            if (s > extended_limit * (1 + 1e-12)) throw DomainError("extended series is out of range");
            return series_quad(t).value;
        case MLRegime::asymptotic:
            if (s < 1.0) throw DomainError("asymptotic expansion is out of range");
            return asymptotic(t, s).value;
        case MLRegime::integral:
            if (s < 0.1) throw DomainError("contour integral is out of range");
            return contour_integral(t, s).value;
        default: break;
        }
        throw DomainError("unknown regime");
    }

private:
    struct Estimate {
        double value = 0.0;
        double rel_error = std::numeric_limits<double>::infinity();
    };

    static double checked_magnitude(double z) {
        if (std::isnan(z)) throw DomainError("Mittag-Leffler: argument is NaN");
        if (z > 0.0) throw DomainError("Mittag-Leffler: only z <= 0 is supported, got " + std::to_string(z));
        return -z;
    }

    double scaled(double t) const { return std::pow(t, 1.0 / params_.rho); }

    static detail::MLTables build_tables(double rho, double mu) {
        detail::MLTables tab;
        using detail::quad;
        tab.inv_gamma_mu = static_cast<double>(detail::rgamma_q(mu));

        {
            // Series coefficients 1/Gamma(rho k + mu) until the largest term the
            // extended regime can meet has dropped by ~e^-110 past its peak.
            const quad log_tmax = static_cast<quad>(rho) * logq(static_cast<quad>(extended_limit));
            quad peak = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0;; ++k) {
                const quad x = static_cast<quad>(rho) * k + mu;
                const quad log_mag = log_tmax * k - lgammaq(x);
                if (log_mag > peak) peak = log_mag;
                tab.series_q.push_back(detail::rgamma_q(x));
                if (x > 2 && log_mag < peak - 110 && log_mag < 0) break;
                if (x > 1700) break;
            }
            tab.series_d.reserve(tab.series_q.size());
            for (const quad c : tab.series_q) tab.series_d.push_back(static_cast<double>(c));
        }

        // Asymptotic coefficients 1/Gamma(mu - rho k), k >= 1.
        const auto count = static_cast<std::size_t>(std::ceil(45.0 / rho)) + 10;
        tab.asym.reserve(count);
        tab.asym_env.reserve(count);
        for (std::size_t k = 1; k <= count; ++k) {
            const quad x = static_cast<quad>(mu) - static_cast<quad>(rho) * k;
            // 1/Gamma(x) = Gamma(1 - x) sin(pi x) / pi. Near-pole coefficients are
            // tiny, so truncation follows the smooth bound Gamma(1 - x) / pi.
            const quad pi = acosq(-1);
            const quad env = 1 - x > 0 ? expq(lgammaq(1 - x)) / pi : 0;
            tab.asym.push_back(static_cast<double>(x > 0 ? detail::rgamma_q(x) : sinq(pi * x) * env));
            tab.asym_env.push_back(1 - x > 0 ? static_cast<double>(env) : std::abs(tab.asym.back()));
        }
        return tab;
    }

    Estimate series_double(double t) const {
        double sum = 0.0;
        double comp = 0.0;
        double power = 1.0;
        for (std::size_t k = 0; k < tables_->series_d.size(); ++k) {
            const double term = power * tables_->series_d[k];
            const double next = sum + term;
            comp += std::abs(sum) >= std::abs(term) ? (sum - next) + term : (term - next) + sum;
            sum = next;
            const double x = params_.rho * static_cast<double>(k) + params_.mu;
            if (x > 2.0 && std::abs(term) <= 1e-18 * std::abs(sum)) break;
            power *= -t;
        }
        return {sum + comp, 1e-15};
    }

    Estimate series_quad(double t) const {
        using detail::quad;
        quad sum = 0;
        quad abs_sum = 0;
        quad power = 1;
        quad prev = 0;
        const quad tq = t;
        bool converged = false;
        for (std::size_t k = 0; k < tables_->series_q.size(); ++k) {
            const quad term = power * tables_->series_q[k];
            sum += term;
            abs_sum += fabsq(term);
            const double x = params_.rho * static_cast<double>(k) + params_.mu;
            if (x > 2.0 && fabsq(term) <= fabsq(prev) && fabsq(term) <= static_cast<quad>(1e-36) * fabsq(sum)) {
                converged = true;
                break;
            }
            prev = term;
            power *= -tq;
        }
        Estimate e;
        e.value = static_cast<double>(sum);
        if (converged && sum != 0)
            e.rel_error = static_cast<double>(static_cast<quad>(4e-34) * abs_sum / fabsq(sum)) + 1e-16;
        return e;
    }

    // E(-t) ~ -sum_{k>=1} (-t)^(-k) / Gamma(mu - rho k), truncated at the smallest term.
    Estimate asymptotic(double t, double s) const {
        const double inv = -1.0 / t;
        double power = 1.0;
        double sum = 0.0;
        double last = std::numeric_limits<double>::infinity();
        double tail = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < tables_->asym.size(); ++k) {
            power *= inv;
            const double bound = std::abs(power) * tables_->asym_env[k];
            if (bound > last) {
                tail = bound;
                break;
            }
            sum += -power * tables_->asym[k];
            last = bound;
            if (last <= 1e-18 * std::abs(sum)) {
                tail = last;
                break;
            }
        }
        Estimate e;
        e.value = sum;
        if (sum == 0.0 || !std::isfinite(tail)) return e;
        // Contribution of the off-sheet pole at |s| = t^(1/rho), which the
        // algebraic expansion cannot see.
        const double pole = 2.0 / params_.rho *
                            std::exp(-s + (1.0 - params_.mu) * std::log(std::max(s, 1.0)));
        e.rel_error = (tail + pole) / std::abs(sum) + 1e-16;
        return e;
    }

    // Hankel contour: circle of radius eps around the origin plus the two
    // rays along the negative real axis, folded into real integrals.
    Estimate contour_integral(double t, double s) const {
        const double rho = params_.rho;
        const double mu = params_.mu;
        const double eps = std::min(1.0, 0.5 * s);
        const double sin_mu = detail::sin_pi(mu);
        const double sin_mu_rho = detail::sin_pi(mu - rho);
        const double cos_rho = detail::cos_pi(rho);
        const double sin_rho = detail::sin_pi(rho);
        const double pi = std::numbers::pi;

        auto ray = [&](double r) {
            const double rr = std::pow(r, rho);
            const double re = rr * cos_rho + t;
            const double im = rr * sin_rho;
            return std::exp(-r) * std::pow(r, rho - mu) * (rr * sin_mu + t * sin_mu_rho) / (re * re + im * im) / pi;
        };
        auto circle = [&](double theta) {
            const std::complex<double> w = std::polar(1.0, theta);
            const std::complex<double> sv = eps * w;
            const std::complex<double> num =
                std::exp(sv) * std::polar(std::pow(eps, rho - mu + 1.0), (rho - mu + 1.0) * theta);
            const std::complex<double> den = std::polar(std::pow(eps, rho), rho * theta) + t;
            return (num / den).real() / pi;
        };

        std::vector<double> ray_breaks{eps};
        double upper;
        if (s < 100.0) {
            if (s > eps) ray_breaks.push_back(s);
            upper = std::max(eps, s) + 50.0;
        } else {
            upper = 100.0;
        }
        ray_breaks.push_back(upper);

        const auto rays = detail::integrate_adaptive(ray, ray_breaks, 1e-15, 1e-300);
        const auto arc = detail::integrate_adaptive(circle, {0.0, pi}, 1e-15, 1e-300);
        Estimate e;
        e.value = rays.value + arc.value;
        const double scale = std::abs(rays.value) + std::abs(arc.value);
        if (e.value != 0.0) e.rel_error = (rays.error + arc.error + 1e-16 * scale) / std::abs(e.value);
        return e;
    }

    // rho = 1.
    double closed_form(double t) const {
        const double mu = params_.mu;
        if (mu == 1.0) return std::exp(-t);
        if (mu == 2.0) return -std::expm1(-t) / t;
        if (t <= 700.0) {
            // E_{1,mu}(-t) = e^{-t}/Gamma(mu) * 1F1(mu-1; mu; t)
            //             = e^{-t}/Gamma(mu) * sum_k (mu-1)/(mu-1+k) t^k/k!
            double c = std::exp(-t);
            double sum = c;
            double rest = 0.0;
            for (int k = 1; k < 100000; ++k) {
                c *= t / k;
                const double term = c / (mu - 1.0 + k);
                rest += term;
                if (k > t && term <= 1e-18 * std::abs(rest)) break;
            }
            sum += (mu - 1.0) * rest;
            return sum * tables_->inv_gamma_mu;
        }
        const double inv = -1.0 / t;
        double power = 1.0;
        double sum = 0.0;
        for (std::size_t k = 0; k < tables_->asym.size(); ++k) {
            power *= inv;
            const double term = -power * tables_->asym[k];
            sum += term;
            if (tables_->asym[k] != 0.0 && std::abs(term) <= 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }

    MLParams params_;
    std::shared_ptr<const detail::MLTables> tables_;
};

/// E_{rho,mu}(z), z <= 0. Builds a fresh evaluator; prefer MittagLeffler
/// when evaluating repeatedly.
inline double ml(MLParams params, double z) { return MittagLeffler(params)(z); }

inline MLEvaluation ml_evaluate(MLParams params, double z) { return MittagLeffler(params).evaluate(z); }

struct MLAsymptoticCheck {
    double value = 0.0;   // E_{rho,rho+1}(-t)
    double leading = 0.0; // 1/t
};

/// Value of E_{rho,rho+1}(-t) next to its leading large-t term 1/t.
inline MLAsymptoticCheck ml_asymptotic_check(MLParams params, double t) {
    params.validate();
    if (std::abs(params.mu - (params.rho + 1.0)) > 1e-14)
        throw DomainError("ml_asymptotic_check requires mu = rho + 1");
    if (!(t > 1.0)) throw DomainError("ml_asymptotic_check requires t > 1");
    return {ml(params, -t), 1.0 / t};
}

} // namespace subdiff
