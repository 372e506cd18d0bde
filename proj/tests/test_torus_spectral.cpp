#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "subdiff/torus_spectral.hpp"

using namespace subdiff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cplx = std::complex<double>;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> random_samples(const TorusGrid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<double> s(g.size());
    for (auto& v : s) v = nd(rng);
    return s;
}

// Hermitian coefficients on shells below `shells`, zero elsewhere.
SpectralField random_band_limited(const TorusGrid& g, std::size_t shells, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    SpectralField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.shell(i) >= shells) continue;
        const std::size_t j = g.partner_index(i);
        if (j < i) continue;
        const cplx c = i == j ? cplx(nd(rng), 0.0) : cplx(nd(rng), nd(rng));
        f[i] = c;
        f[j] = std::conj(c);
    }
    return f;
}

TorusGrid random_grid(std::mt19937_64& rng) {
    const std::size_t dim = 1 + rng() % 3;
    const std::size_t choices1[] = {2, 6, 8, 10, 16, 32, 64};
    const std::size_t choices3[] = {2, 4, 6, 8};
    const std::size_t p = dim == 3 ? choices3[rng() % 4] : choices1[rng() % 7];
    return TorusGrid(dim, p);
}

} // namespace

TEST_CASE("grid layout") {
    const TorusGrid g(2, 8);
    CHECK(g.size() == 64);
    CHECK(g.frequency_of_bin(4) == 4);
    CHECK(g.frequency_of_bin(5) == -3);
    CHECK(g.flat_index({-3, 4}) == 5 * 8 + 4);
    CHECK(g.frequency(g.flat_index({2, -1})) == Frequency{2, -1});
    CHECK(g.frequency(g.partner_index(g.flat_index({2, -1}))) == Frequency{-2, 1});
    CHECK(g.partner_index(g.flat_index({4, 0})) == g.flat_index({4, 0}));
    CHECK(g.norm2(g.flat_index({3, 4})) == 25.0);
    CHECK(g.shell(g.flat_index({-3, 4})) == 5);
    CHECK_THAT(g.point(1)[1], WithinAbs(-pi + pi / 4, 1e-15));
    CHECK_THROWS_AS(g.flat_index({-4, 0}), ShapeError);
    CHECK_THROWS_AS(g.flat_index({1}), ShapeError);
}

TEST_CASE("grid shape errors") {
    CHECK_THROWS_AS(TorusGrid(1, 3), ShapeError);
    CHECK_THROWS_AS(TorusGrid(0, 4), ShapeError);
    CHECK_THROWS_AS(TorusGrid(1, 0), ShapeError);
    const TorusGrid g(1, 8);
    const std::vector<double> wrong(7, 0.0);
    CHECK_THROWS_AS(analyze(g, wrong), ShapeError);
    CHECK_THROWS_AS(SpectralField(g, std::vector<cplx>(9)), ShapeError);
    CHECK_THROWS_AS(SpectralField(g) + SpectralField(TorusGrid(1, 16)), ShapeError);
}

TEST_CASE("constant field analyses to the zero mode only") {
    for (std::size_t dim = 1; dim <= 3; ++dim) {
        const TorusGrid g(dim, 8);
        const double c = 2.75;
        const auto f = analyze(g, std::vector<double>(g.size(), c));
        CHECK_THAT(f[0].real(), WithinRel(c * std::pow(2 * pi, dim / 2.0), 1e-14));
        for (std::size_t i = 1; i < f.size(); ++i) CHECK(std::abs(f[i]) <= 1e-14);
        const auto back = synthesize(f);
        for (const double v : back) CHECK_THAT(v, WithinAbs(c, 1e-14));
    }
}

TEST_CASE("cosine coefficients agree with quadrature of the defining integral") {
    // g_n = (2 pi)^(-1/2) \int_{-pi}^{pi} cos(x) e^{-inx} dx by a fine midpoint rule.
    const auto quad = [](int n) {
        const int m = 20000;
        cplx s = 0.0;
        for (int k = 0; k < m; ++k) {
            const double x = -pi + (k + 0.5) * 2 * pi / m;
            s += std::cos(x) * std::exp(cplx(0.0, -n * x));
        }
        return s * (2 * pi / m) / std::sqrt(2 * pi);
    };
    const TorusGrid g(1, 16);
    std::vector<double> s(g.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::cos(g.point(i)[0]);
    const auto f = analyze(g, s);
    for (int n = -7; n <= 8; ++n) {
        INFO("n=" << n);
        CHECK(std::abs(f.at({n}) - quad(n)) <= 1e-12);
    }
    CHECK_THAT(f.at({1}).real(), WithinRel(std::sqrt(pi / 2), 1e-14));
    CHECK(std::abs(f.at({1}) - f.at({-1})) <= 1e-15);
}

TEST_CASE("synthesize inverse examples") {
    const TorusGrid g(1, 16);
    SpectralField zero(g);
    for (const double v : synthesize(zero)) CHECK(v == 0.0);

    SpectralField pair(g);
    pair.at({1}) = std::sqrt(pi / 2);
    pair.at({-1}) = std::sqrt(pi / 2);
    const auto s = synthesize(pair);
    for (std::size_t i = 0; i < s.size(); ++i) {
        // direct summation of (2 pi)^(-1/2) sum g_n e^{inx}
        const double x = g.point(i)[0];
        const cplx direct =
            (pair.at({1}) * std::exp(cplx(0, x)) + pair.at({-1}) * std::exp(cplx(0, -x))) / std::sqrt(2 * pi);
        CHECK_THAT(s[i], WithinAbs(direct.real(), 1e-14));
        CHECK_THAT(s[i], WithinAbs(std::cos(x), 1e-14));
    }
}

TEST_CASE("synthesize rejects non-Hermitian coefficients") {
    const TorusGrid g(2, 8);
    SpectralField f(g);
    f.at({1, 2}) = 1.0;
    CHECK_THROWS_AS(synthesize(f), SymmetryError);
    f.at({-1, -2}) = 1.0;
    CHECK_NOTHROW(synthesize(f));
    f.at({0, 0}) = cplx(0.0, 1e-3);
    CHECK_THROWS_AS(synthesize(f), SymmetryError);
}

TEST_CASE("analyze then synthesize reproduces random fields") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 120; ++trial) {
        const TorusGrid g = random_grid(rng);
        const auto s = random_samples(g, rng);
        const auto f = analyze(g, s);
        CHECK(f.hermitian_defect() == 0.0);
        const auto back = synthesize(f);
        double err = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(back[i] - s[i]));
        INFO("dim=" << g.dim << " P=" << g.points);
        CHECK(err <= 1e-13);
    }
}

TEST_CASE("synthesize then analyze is the identity on coefficients") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 120; ++trial) {
        const TorusGrid g = random_grid(rng);
        const auto f = random_band_limited(g, g.shell_count(), rng);
        const auto back = analyze(g, synthesize(f));
        INFO("dim=" << g.dim << " P=" << g.points);
        CHECK((back - f).max_abs() <= 1e-13 * std::max(1.0, f.max_abs()));
    }
}

TEST_CASE("Parseval: coefficient norm equals the grid L2 norm") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 150; ++trial) {
        const TorusGrid g = random_grid(rng);
        const auto s = random_samples(g, rng);
        INFO("dim=" << g.dim << " P=" << g.points);
        CHECK_THAT(analyze(g, s).l2_norm(), WithinRel(grid_l2_norm(g, s), 1e-12));
    }
}

TEST_CASE("symbol examples") {
    const auto lap2 = EllipticSymbol::laplacian(2);
    CHECK(lap2(Frequency{3, 4}) == 25.0);
    CHECK(lap2(Frequency{0, 0}) == 0.0);
    CHECK(symbol_eval(EllipticSymbol::bilaplacian(1), Frequency{2}) == 16.0);
    CHECK(EllipticSymbol::bilaplacian(3)(Frequency{1, 1, 1}) == 9.0);
    const EllipticSymbol mixed(2, 2, {{{2, 0}, 1.0}, {{1, 1}, 0.5}, {{0, 2}, 2.0}});
    CHECK(mixed(Frequency{1, -1}) == 2.5);
}

TEST_CASE("symbol construction and positivity errors") {
    CHECK_THROWS_AS(EllipticSymbol(1, 3, {{{3}, 1.0}}), DomainError);
    CHECK_THROWS_AS(EllipticSymbol(2, 2, {{{1, 0}, 1.0}}), DomainError);
    CHECK_THROWS_AS(EllipticSymbol(2, 2, {}), DomainError);
    CHECK_THROWS_AS(EllipticSymbol(2, 2, {{{2, 0, 0}, 1.0}}), DomainError);

    const EllipticSymbol degenerate(2, 2, {{{2, 0}, 1.0}});
    CHECK_THROWS_AS(degenerate.validate_on(TorusGrid(2, 8)), PositivityError);
    const EllipticSymbol indefinite(2, 2, {{{2, 0}, 1.0}, {{0, 2}, -1.0}});
    CHECK_THROWS_AS(indefinite.validate_on(TorusGrid(2, 8)), PositivityError);
    CHECK_THROWS_AS(EllipticSymbol::laplacian(2).validate_on(TorusGrid(3, 8)), ShapeError);

    const auto ev = EllipticSymbol::laplacian(2).eigenvalues(TorusGrid(2, 8));
    CHECK(ev[0] == 0.0);
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i] > 0.0);
}

TEST_CASE("Nyquist slots carry the same eigenvalue as their partners") {
    // odd-power cross terms flip sign at +-P/2; the slot value is their average
    const EllipticSymbol sym(2, 2, {{{2, 0}, 1.0}, {{1, 1}, 0.5}, {{0, 2}, 1.0}});
    const TorusGrid g(2, 8);
    const auto ev = sym.eigenvalues(g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(ev[i] == ev[g.partner_index(i)]);
    CHECK(ev[g.flat_index({4, 1})] == 17.0);
    CHECK(ev[g.flat_index({1, 2})] == 6.0);
}

TEST_CASE("symbol homogeneity and evenness on random frequencies") {
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> comp(-20, 20);
    std::uniform_int_distribution<int> scale(2, 6);
    std::uniform_real_distribution<double> coef(0.1, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t dim = 1 + trial % 3;
        const auto sym = trial % 2 ? EllipticSymbol::laplacian(dim) : EllipticSymbol::bilaplacian(dim);
        Frequency n(dim), neg(dim), scaled(dim);
        const int s = scale(rng);
        for (std::size_t d = 0; d < dim; ++d) {
            n[d] = comp(rng);
            neg[d] = -n[d];
            scaled[d] = s * n[d];
        }
        CHECK(sym(neg) == sym(n));
        CHECK_THAT(sym(scaled), WithinRel(std::pow(s, sym.order()) * sym(n), 1e-14));
        if (sym(n) != 0.0) CHECK(sym(n) > 0.0);

        // a general diagonal-dominant quadratic form behaves the same way
        const double a = coef(rng), b = coef(rng);
        const EllipticSymbol q(2, 2, {{{2, 0}, a + b}, {{1, 1}, b}, {{0, 2}, a + b}});
        const Frequency n2{n[0], comp(rng)};
        const Frequency m2{-n2[0], -n2[1]};
        const Frequency s2{s * n2[0], s * n2[1]};
        CHECK(q(m2) == q(n2));
        CHECK_THAT(q(s2), WithinRel(s * s * q(n2), 1e-13));
    }
}

TEST_CASE("sobolev norm examples") {
    const TorusGrid g(2, 8);
    CHECK(sobolev_norm(SpectralField(g), 3.0) == 0.0);
    SpectralField one(g);
    one.at({2, 0}) = 1.0;
    CHECK_THAT(sobolev_norm(one, 1.0), WithinRel(std::sqrt(5.0), 1e-15));
    std::mt19937_64 rng(15);
    const auto f = random_band_limited(g, 4, rng);
    CHECK_THAT(sobolev_norm(f, 0.0), WithinRel(f.l2_norm(), 1e-15));
}

TEST_CASE("sobolev norm is nondecreasing in the exponent") {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> ua(0.0, 6.0);
    for (int trial = 0; trial < 150; ++trial) {
        const TorusGrid g = random_grid(rng);
        const auto f = analyze(g, random_samples(g, rng));
        double a = ua(rng), b = ua(rng);
        if (a > b) std::swap(a, b);
        CHECK(sobolev_norm(f, a) <= sobolev_norm(f, b));
    }
}

TEST_CASE("decay exponent of an algebraically decaying field") {
    // at P = 128 the outer shells fall below the noise floor and the field reads as band-limited
    const TorusGrid g(1, 64);
    SpectralField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::pow(1.0 + g.norm2(i), -4.0);
    const double slope = decay_exponent(f);
    INFO("slope=" << slope);
    CHECK_THAT(slope, WithinAbs(-8.0, 0.5));
}

TEST_CASE("decay exponent of band-limited data is minus infinity") {
    const TorusGrid g(2, 32);
    std::mt19937_64 rng(17);
    const auto f = random_band_limited(g, 6, rng);
    CHECK(is_band_limited(f));
    CHECK(decay_exponent(f) == -std::numeric_limits<double>::infinity());
    CHECK(decay_exponent(SpectralField(g)) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("decay exponent of white noise is near zero") {
    std::mt19937_64 rng(18);
    for (const std::size_t dim : {1u, 2u}) {
        const TorusGrid g(dim, dim == 1 ? 256 : 64);
        const auto f = analyze(g, random_samples(g, rng));
        CHECK_FALSE(is_band_limited(f));
        const double slope = decay_exponent(f);
        INFO("dim=" << dim << " slope=" << slope);
        CHECK_THAT(slope, WithinAbs(0.0, 0.5));
    }
}

TEST_CASE("decay exponent needs enough shells") {
    std::mt19937_64 rng(19);
    const TorusGrid g(1, 8);
    CHECK_THROWS_AS(decay_exponent(analyze(g, random_samples(g, rng))), InsufficientDataError);
}
