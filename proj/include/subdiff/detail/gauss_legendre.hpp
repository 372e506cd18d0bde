#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <vector>

namespace subdiff::detail {

// Fixed-order Gauss-Legendre rule on [-1, 1], nodes found by Newton iteration
// on P_n. Computed once per order.
template <std::size_t Order>
struct GaussLegendreRule {
    std::array<double, Order> nodes{};
    std::array<double, Order> weights{};

    GaussLegendreRule() {
        const std::size_t half = (Order + 1) / 2;
        for (std::size_t i = 0; i < half; ++i) {
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                                (static_cast<double>(Order) + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = x;
                for (std::size_t k = 2; k <= Order; ++k) {
                    const double kk = static_cast<double>(k);
                    const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                    p0 = p1;
                    p1 = p2;
                }
                dp = static_cast<double>(Order) * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-17) break;
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[Order - 1 - i] = x;
            weights[i] = w;
            weights[Order - 1 - i] = w;
        }
    }

    template <typename F>
    double apply(F& f, double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t i = 0; i < Order; ++i) sum += weights[i] * f(mid + half * nodes[i]);
        return sum * half;
    }
};

inline const GaussLegendreRule<20>& gl20() {
    static const GaussLegendreRule<20> rule;
    return rule;
}

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = 0;
};

/// Globally adaptive Gauss-Legendre integration over [a, b] with interior
/// breakpoints. Each panel is estimated by a 20-point rule on the whole panel
/// and on its two halves; the difference is the panel's error estimate. The
/// panel with the largest error is split until the summed error meets
/// max(abs_tol, rel_tol * |value|) or the panel budget is exhausted.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, std::vector<double> breakpoints, double rel_tol,
                                    double abs_tol = 0.0, std::size_t max_panels = 4000) {
    struct Panel {
        double a, b, value, error;
        bool operator<(const Panel& other) const { return error < other.error; }
    };
    const auto& rule = gl20();
    auto make_panel = [&](double a, double b) {
        const double m = 0.5 * (a + b);
        const double whole = rule.apply(f, a, b);
        const double split = rule.apply(f, a, m) + rule.apply(f, m, b);
        return Panel{a, b, split, std::abs(split - whole)};
    };

    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

    std::priority_queue<Panel> queue;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        Panel p = make_panel(breakpoints[i], breakpoints[i + 1]);
        total += p.value;
        total_err += p.error;
        queue.push(p);
    }

    while (!queue.empty() && queue.size() < max_panels &&
           total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        Panel worst = queue.top();
        queue.pop();
        const double m = 0.5 * (worst.a + worst.b);
        if (m <= worst.a || m >= worst.b) {
            // Panel cannot be split further in double precision.
            queue.push(Panel{worst.a, worst.b, worst.value, 0.0});
            total_err -= worst.error;
            continue;
        }
        Panel left = make_panel(worst.a, m);
        Panel right = make_panel(m, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
    }

    // Re-sum from scratch to shed accumulated update roundoff.
    QuadratureResult out;
    out.intervals = queue.size();
    while (!queue.empty()) {
        out.value += queue.top().value;
        out.error += queue.top().error;
        queue.pop();
    }
    return out;
}

} // namespace subdiff::detail
