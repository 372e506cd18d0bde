#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "subdiff/oracle.hpp"
#include "subdiff/special_functions.hpp"

using namespace subdiff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double mp_gamma(double x) {
    return static_cast<double>(boost::math::tgamma(boost::multiprecision::cpp_bin_float_50(x)));
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    std::vector<double> t;
    const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
    for (int i = 0; i <= n; ++i) t.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
    return t;
}

} // namespace

TEST_CASE("gamma at classical points") {
    CHECK(subdiff::gamma(1.0) == 1.0);
    CHECK_THAT(subdiff::gamma(0.5), WithinRel(1.7724538509055160, 1e-15));
    CHECK_THAT(subdiff::gamma(5.0), WithinRel(24.0, 1e-15));
    CHECK_THAT(subdiff::gamma(171.0), WithinRel(mp_gamma(171.0), 1e-14));
}

TEST_CASE("gamma against a 50-digit reference") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> small(1e-6, 3.0);
    std::uniform_real_distribution<double> large(3.0, 171.5);
    for (int i = 0; i < 500; ++i) {
        const double x = i % 2 ? small(rng) : large(rng);
        CHECK_THAT(subdiff::gamma(x), WithinRel(mp_gamma(x), 1e-14));
    }
}

TEST_CASE("gamma rejects its domain boundary") {
    CHECK_THROWS_AS(subdiff::gamma(0.0), DomainError);
    CHECK_THROWS_AS(subdiff::gamma(-2.5), DomainError);
    CHECK_THROWS_AS(subdiff::gamma(std::nan("")), DomainError);
    CHECK_THROWS_AS(subdiff::gamma(172.0), OverflowError);
}

TEST_CASE("MLParams validation") {
    CHECK_THROWS_AS(MittagLeffler({0.0, 1.0}), DomainError);
    CHECK_THROWS_AS(MittagLeffler({1.1, 1.0}), DomainError);
    CHECK_THROWS_AS(MittagLeffler({0.5, 0.0}), DomainError);
    CHECK_NOTHROW(MittagLeffler({1.0, 0.1}));
}

TEST_CASE("ml worked examples") {
    CHECK_THAT(ml({1.0, 1.0}, -1.0), WithinRel(0.36787944117144233, 1e-15));
    CHECK_THAT(ml({1.0, 2.0}, -1.0), WithinRel(0.6321205588285577, 1e-15));
    const double ref = static_cast<double>(oracle::ml_series_reference_mp(0.5, 1.5, -1.0, 1e-30));
    CHECK_THAT(ml({0.5, 1.5}, -1.0), WithinRel(ref, 1e-14));
    CHECK_THAT(ml({0.7, 1.7}, 0.0), WithinRel(1.0 / mp_gamma(1.7), 1e-15));
}

TEST_CASE("ml rejects positive arguments") {
    CHECK_THROWS_AS(ml({0.5, 1.0}, 1e-300), DomainError);
    CHECK_THROWS_AS(ml({1.0, 1.0}, 2.0), DomainError);
}

TEST_CASE("ml matches the series oracle wherever the oracle is in budget") {
    const std::vector<double> rhos{0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.99, 1.0};
    int compared = 0;
    for (const double rho : rhos) {
        for (const double mu : {rho, 1.0, rho + 1.0, 0.3, 2.5}) {
            const MittagLeffler e({rho, mu});
            for (const double t : log_grid(1e-6, 1e3, 6)) {
                double ref = 0.0;
                try {
                    ref = oracle::ml_series_reference(rho, mu, -t, 1e-22);
                } catch (const CancellationError&) {
                    continue;
                }
                INFO("rho=" << rho << " mu=" << mu << " t=" << t);
                // the oracle certifies an absolute error of 1e-22
                CHECK(std::abs(e(-t) - ref) <= 1e-12 * std::abs(ref) + 2e-22);
                ++compared;
            }
        }
    }
    CHECK(compared > 300);
}

TEST_CASE("ml on the half-order axis matches the scaled complementary error function") {
    // E_{1/2,1}(-x) = exp(x^2) erfc(x), evaluated here in 50 digits.
    using mp = boost::multiprecision::cpp_bin_float_50;
    const MittagLeffler e({0.5, 1.0});
    for (const double x : log_grid(1e-3, 1e3, 8)) {
        const mp xm(x);
        const double ref = static_cast<double>(exp(xm * xm) * boost::math::erfc(xm));
        INFO("x=" << x);
        CHECK_THAT(e(-x), WithinRel(ref, 1e-12));
    }
}

TEST_CASE("classical reductions at rho = 1 on [-50, 0]") {
    const MittagLeffler e11({1.0, 1.0});
    const MittagLeffler e12({1.0, 2.0});
    for (int i = 1; i <= 200; ++i) {
        const double z = -50.0 * i / 200.0;
        CHECK_THAT(e11(z), WithinRel(std::exp(z), 1e-12));
        CHECK_THAT(e12(z), WithinRel(std::expm1(z) / z, 1e-12));
    }
}

TEST_CASE("rho = 1 with general mu agrees with the series oracle") {
    for (const double mu : {0.3, 0.5, 1.5, 2.5, 3.7}) {
        const MittagLeffler e({1.0, mu});
        for (const double t : {0.01, 0.7, 3.0, 12.0, 30.0}) {
            const double ref = oracle::ml_series_reference(1.0, mu, -t, 1e-22);
            CHECK_THAT(e(-t), WithinRel(ref, 1e-12));
        }
        // large t: E_{1,mu}(-t) ~ 1/(t Gamma(mu - 1)) for mu != 1, 2
        const double t = 1e6;
        const double lead = mu == 1.0 || mu == 2.0 ? 0.0 : 1.0 / (t * mp_gamma(std::abs(mu - 1.0)));
        if (mu > 1.0) CHECK_THAT(e(-t), WithinRel(lead, 1e-5));
    }
}

TEST_CASE("E_{rho,rho+1}(-t) lies in (0, 1/Gamma(rho+1)] and is bounded by C/(1+t)") {
    for (const double rho : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
        for (const double mu : {rho, 1.0, rho + 1.0}) {
            const MittagLeffler e({rho, mu});
            double c = 0.0;
            for (const double t : log_grid(1e-8, 1e12, 10)) {
                const double v = e(-t);
                if (mu == rho + 1.0) {
                    // the supremum is the value at t = 0, which exceeds 1 for rho < 1
                    CHECK(v > 0.0);
                    CHECK(v <= 1.0 / mp_gamma(rho + 1.0) * (1 + 1e-15));
                }
                c = std::max(c, std::abs(v) * (1.0 + t));
            }
            INFO("rho=" << rho << " mu=" << mu << " empirical C=" << c);
            CHECK(std::isfinite(c));
            CHECK(c < 10.0);
        }
    }
}

TEST_CASE("E_{rho,rho+1}(-t) <= 1 fails only below a threshold of order one") {
    for (const double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const MittagLeffler e({rho, rho + 1.0});
        INFO("rho=" << rho);
        CHECK(e(-1e-8) > 1.0);
        CHECK(e(-1.0) <= 1.0);
    }
    CHECK(ml({1.0, 2.0}, -1e-8) <= 1.0);
}

TEST_CASE("E_{rho,1}(-t) is strictly decreasing") {
    for (const double rho : {0.05, 0.2, 0.5, 0.8, 0.95, 1.0}) {
        const MittagLeffler e({rho, 1.0});
        const double hi = rho == 1.0 ? 700.0 : 1e12;
        double prev = e(0.0);
        for (const double t : log_grid(1e-8, hi, 20)) {
            const double v = e(-t);
            INFO("rho=" << rho << " t=" << t);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("adjacent regimes agree at their boundaries") {
    for (const double rho : {0.15, 0.3, 0.5, 0.7, 0.85, 0.95}) {
        for (const double mu : {rho, 1.0, rho + 1.0, 2.0}) {
            const MittagLeffler e({rho, mu});
            const auto at_scaled = [rho](double s) { return -std::pow(s, rho); };
            INFO("rho=" << rho << " mu=" << mu);

            const double z_lo = at_scaled(MittagLeffler::series_limit);
            CHECK_THAT(e.evaluate_regime(MLRegime::series, z_lo),
                       WithinRel(e.evaluate_regime(MLRegime::series_extended, z_lo), 1e-11));

            const double z_hi = at_scaled(MittagLeffler::extended_limit);
            const double ext = e.evaluate_regime(MLRegime::series_extended, z_hi);
            CHECK_THAT(e.evaluate_regime(MLRegime::integral, z_hi), WithinRel(ext, 1e-11));
            const double beyond = at_scaled(MittagLeffler::extended_limit * (1.0 + 1e-13));
            CHECK_THAT(e(beyond), WithinRel(ext, 1e-11));
        }
    }
}

TEST_CASE("asymptotic expansion agrees with the contour integral wherever it is selected") {
    int selected = 0;
    for (const double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        for (const double mu : {1.0, rho + 1.0, 1.5}) {
            const MittagLeffler e({rho, mu});
            for (const double s : {45.0, 60.0, 150.0, 400.0}) {
                const double z = -std::pow(s, rho);
                const MLEvaluation ev = e.evaluate(z);
                if (ev.regime != MLRegime::asymptotic) continue;
                ++selected;
                INFO("rho=" << rho << " mu=" << mu << " s=" << s);
                CHECK_THAT(ev.value, WithinRel(e.evaluate_regime(MLRegime::integral, z), 1e-12));
            }
        }
    }
    CHECK(selected >= 40);
}

TEST_CASE("regime selection is reported") {
    CHECK(ml_evaluate({0.5, 1.0}, 0.0).regime == MLRegime::series);
    CHECK(ml_evaluate({0.5, 1.0}, -0.1).regime == MLRegime::series);
    CHECK(ml_evaluate({0.5, 1.0}, -3.0).regime == MLRegime::series_extended);
    CHECK(ml_evaluate({0.5, 1.0}, -100.0).regime == MLRegime::asymptotic);
    CHECK(ml_evaluate({1.0, 1.0}, -3.0).regime == MLRegime::closed_form);
}

TEST_CASE("ml_asymptotic_check") {
    SECTION("rho = 0.5 far out") {
        const auto r = ml_asymptotic_check({0.5, 1.5}, 1e6);
        CHECK(std::abs(r.value * 1e6 - 1.0) <= 1e-4);
        CHECK(r.leading == 1e-6);
    }
    SECTION("rho = 1 closed form") {
        const auto r = ml_asymptotic_check({1.0, 2.0}, 100.0);
        CHECK_THAT(r.value, WithinRel(-std::expm1(-100.0) / 100.0, 1e-15));
        CHECK(r.leading == 0.01);
    }
    SECTION("rho = 0.3 between its bounds") {
        const auto r = ml_asymptotic_check({0.3, 1.3}, 10.0);
        CHECK(r.value >= 1.0 / 11.0);
        CHECK(r.value <= 1.0 / mp_gamma(1.3));
        // The 50-digit series cannot reach t = 10 at rho = 0.3; it must say so.
        CHECK_THROWS_AS(oracle::ml_series_reference(0.3, 1.3, -10.0, 1e-15), CancellationError);
        const MittagLeffler e({0.3, 1.3});
        CHECK_THAT(r.value, WithinRel(e.evaluate_regime(MLRegime::integral, -10.0), 1e-12));
    }
    SECTION("domain") {
        CHECK_THROWS_AS(ml_asymptotic_check({0.5, 1.0}, 10.0), DomainError);
        CHECK_THROWS_AS(ml_asymptotic_check({0.5, 1.5}, 0.5), DomainError);
    }
}
