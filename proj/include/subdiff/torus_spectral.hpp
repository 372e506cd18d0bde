#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "subdiff/detail/fft.hpp"
#include "subdiff/errors.hpp"

namespace subdiff {

/// Integer frequency n in Z^N.
using Frequency = std::vector<int>;

/// Uniform grid on the torus (-pi, pi]^N with P points per direction.
///
/// Sample index i along an axis sits at x = -pi + i * 2pi/P (the point -pi is
/// identified with pi). Coefficient index i along an axis holds the frequency
/// i for i <= P/2 and i - P otherwise, so the frequency box is
/// {-P/2 + 1, ..., P/2}^N. Both arrays are row-major with the last axis
/// varying fastest.
struct TorusGrid {
    std::size_t dim = 1;
    std::size_t points = 2;

    TorusGrid() = default;
    TorusGrid(std::size_t d, std::size_t p) : dim(d), points(p) { validate(); }

    void validate() const {
        if (dim < 1) throw ShapeError("TorusGrid: dimension must be >= 1");
        if (points < 2 || points % 2 != 0)
            throw ShapeError("TorusGrid: points per dimension must be even and >= 2, got " + std::to_string(points));
    }

    std::size_t size() const {
        std::size_t n = 1;
        for (std::size_t d = 0; d < dim; ++d) n *= points;
        return n;
    }

    double spacing() const { return 2.0 * std::numbers::pi / static_cast<double>(points); }

    int frequency_of_bin(std::size_t i) const {
        const auto p = static_cast<int>(points);
        const auto b = static_cast<int>(i);
        return b <= p / 2 ? b : b - p;
    }

    std::size_t bin_of_frequency(int n) const {
        const auto p = static_cast<int>(points);
        if (n <= -p / 2 || n > p / 2)
            throw ShapeError("TorusGrid: frequency " + std::to_string(n) + " outside the box");
        return static_cast<std::size_t>(n < 0 ? n + p : n);
    }

    /// Frequency of the flat coefficient index.
    Frequency frequency(std::size_t flat) const {
        Frequency n(dim);
        for (std::size_t d = dim; d-- > 0;) {
            n[d] = frequency_of_bin(flat % points);
            flat /= points;
        }
        return n;
    }

    std::size_t flat_index(const Frequency& n) const {
        if (n.size() != dim) throw ShapeError("TorusGrid: frequency has wrong dimension");
        std::size_t flat = 0;
        for (std::size_t d = 0; d < dim; ++d) flat = flat * points + bin_of_frequency(n[d]);
        return flat;
    }

    /// Index of the Hermitian partner -n (wrapped into the box).
    std::size_t partner_index(std::size_t flat) const {
        std::size_t out = 0;
        std::size_t scale = 1;
        for (std::size_t d = 0; d < dim; ++d) {
            const std::size_t b = flat % points;
            out += ((points - b) % points) * scale;
            scale *= points;
            flat /= points;
        }
        return out;
    }

    /// Squared Euclidean norm |n|^2 of the frequency at a flat index.
    double norm2(std::size_t flat) const {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = frequency_of_bin(flat % points);
            s += v * v;
            flat /= points;
        }
        return s;
    }

    /// Shell index round(|n|).
    std::size_t shell(std::size_t flat) const { return static_cast<std::size_t>(std::llround(std::sqrt(norm2(flat)))); }

    std::size_t shell_count() const {
        const double half = static_cast<double>(points / 2);
        return static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim)) * half)) + 1;
    }

    /// Coordinates of the flat sample index.
    std::vector<double> point(std::size_t flat) const {
        std::vector<double> x(dim);
        for (std::size_t d = dim; d-- > 0;) {
            x[d] = -std::numbers::pi + static_cast<double>(flat % points) * spacing();
            flat /= points;
        }
        return x;
    }

    bool operator==(const TorusGrid&) const = default;
};

/// Truncated Fourier coefficients g_n of a periodic function in the
/// orthonormal system (2pi)^(-N/2) e^{inx}.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(TorusGrid grid) : grid_(grid), coeffs_(grid.size()) {}
    SpectralField(TorusGrid grid, std::vector<std::complex<double>> coeffs) : grid_(grid), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != grid_.size()) throw ShapeError("SpectralField: coefficient count does not match grid");
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return coeffs_.size(); }

    std::complex<double>& operator[](std::size_t i) { return coeffs_[i]; }
    const std::complex<double>& operator[](std::size_t i) const { return coeffs_[i]; }

    std::complex<double>& at(const Frequency& n) { return coeffs_[grid_.flat_index(n)]; }
    const std::complex<double>& at(const Frequency& n) const { return coeffs_[grid_.flat_index(n)]; }

    std::span<const std::complex<double>> coefficients() const noexcept { return coeffs_; }
    std::span<std::complex<double>> coefficients() noexcept { return coeffs_; }

    /// max |g_n - conj(g_{-n})|
    double hermitian_defect() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            worst = std::max(worst, std::abs(coeffs_[i] - std::conj(coeffs_[grid_.partner_index(i)])));
        return worst;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

    /// Plain l2 norm of the coefficients (equals the L2 norm on the torus).
    double l2_norm() const {
        double s = 0.0;
        for (const auto& c : coeffs_) s += std::norm(c);
        return std::sqrt(s);
    }

    SpectralField& operator+=(const SpectralField& other) {
        check_same_grid(other);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
        return *this;
    }

    SpectralField& operator-=(const SpectralField& other) {
        check_same_grid(other);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
        return *this;
    }

    SpectralField& operator*=(std::complex<double> s) {
        for (auto& c : coeffs_) c *= s;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(std::complex<double> s, SpectralField a) { return a *= s; }

private:
    void check_same_grid(const SpectralField& other) const {
        if (!(grid_ == other.grid_)) throw ShapeError("SpectralField: grids differ");
    }

    TorusGrid grid_;
    std::vector<std::complex<double>> coeffs_;
};

namespace detail {

inline double checkerboard_sign(const TorusGrid& grid, std::size_t flat) {
    std::size_t parity = 0;
    for (std::size_t d = 0; d < grid.dim; ++d) {
        parity += flat % grid.points;
        flat /= grid.points;
    }
    return parity % 2 == 0 ? 1.0 : -1.0;
}

} // namespace detail

/// Coefficients of real grid samples: the normalised DFT approximating
/// g_n = (2pi)^(-N/2) \int g(x) e^{-inx} dx by the trapezoidal rule, which is
/// exact for band-limited fields. The result is made exactly Hermitian.
inline SpectralField analyze(const TorusGrid& grid, std::span<const double> samples) {
    grid.validate();
    if (samples.size() != grid.size())
        throw ShapeError("analyze: expected " + std::to_string(grid.size()) + " samples, got " +
                         std::to_string(samples.size()));
    std::vector<std::complex<double>> data(samples.begin(), samples.end());
    detail::dft_nd(data, grid.dim, grid.points, false);

    const double norm = std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(grid.dim)) /
                        static_cast<double>(grid.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= norm * detail::checkerboard_sign(grid, i);

    SpectralField field(grid, std::move(data));
    SpectralField sym = field;
    for (std::size_t i = 0; i < field.size(); ++i)
        sym[i] = 0.5 * (field[i] + std::conj(field[grid.partner_index(i)]));
    return sym;
}

/// Real samples s(x_k) = (2pi)^(-N/2) sum_n g_n e^{i n x_k} on the field's grid.
inline std::vector<double> synthesize(const SpectralField& field) {
    const TorusGrid& grid = field.grid();
    const double scale = std::max(1.0, field.max_abs());
    if (field.hermitian_defect() > 1e-10 * scale)
        throw SymmetryError("synthesize: coefficients are not Hermitian (defect " +
                            std::to_string(field.hermitian_defect()) + ")");

    std::vector<std::complex<double>> data(field.coefficients().begin(), field.coefficients().end());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= detail::checkerboard_sign(grid, i);
    detail::dft_nd(data, grid.dim, grid.points, true);

    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(grid.dim));
    std::vector<double> out(data.size());
    double residue = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i] = norm * data[i].real();
        residue = std::max(residue, std::abs(norm * data[i].imag()));
    }
    if (residue > 1e-12 * scale)
        throw SymmetryError("synthesize: imaginary residue " + std::to_string(residue) + " after inversion");
    return out;
}

/// sqrt((2pi/P)^N sum_k |s_k|^2), the grid approximation of the L2 norm.
inline double grid_l2_norm(const TorusGrid& grid, std::span<const double> samples) {
    double s = 0.0;
    for (const double v : samples) s += v * v;
    return std::sqrt(std::pow(grid.spacing(), static_cast<double>(grid.dim)) * s);
}

/// Constant-coefficient homogeneous operator A(D) = sum_{|alpha| = m} a_alpha D^alpha
/// with D = -i d/dx, represented by its symbol A(n) = sum a_alpha n^alpha.
class EllipticSymbol {
public:
    struct Term {
        std::vector<int> alpha;
        double coefficient = 0.0;
    };

    EllipticSymbol(std::size_t dim, int order, std::vector<Term> terms)
        : dim_(dim), order_(order), terms_(std::move(terms)) {
        if (dim_ < 1) throw DomainError("EllipticSymbol: dimension must be >= 1");
        if (order_ < 2 || order_ % 2 != 0) throw DomainError("EllipticSymbol: order must be even and >= 2");
        if (terms_.empty()) throw DomainError("EllipticSymbol: no terms");
        for (const auto& t : terms_) {
            if (t.alpha.size() != dim_) throw DomainError("EllipticSymbol: multi-index has wrong dimension");
            int total = 0;
            for (const int a : t.alpha) {
                if (a < 0) throw DomainError("EllipticSymbol: negative multi-index entry");
                total += a;
            }
            if (total != order_) throw DomainError("EllipticSymbol: every term must have |alpha| = order");
            if (!std::isfinite(t.coefficient)) throw DomainError("EllipticSymbol: non-finite coefficient");
        }
    }

    /// -Laplacian: A(n) = |n|^2.
    static EllipticSymbol laplacian(std::size_t dim) {
        std::vector<Term> terms;
        for (std::size_t d = 0; d < dim; ++d) {
            std::vector<int> alpha(dim, 0);
            alpha[d] = 2;
            terms.push_back({alpha, 1.0});
        }
        return EllipticSymbol(dim, 2, std::move(terms));
    }

    /// Laplacian squared: A(n) = |n|^4.
    static EllipticSymbol bilaplacian(std::size_t dim) {
        std::vector<Term> terms;
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = i; j < dim; ++j) {
                std::vector<int> alpha(dim, 0);
                alpha[i] += 2;
                alpha[j] += 2;
                terms.push_back({alpha, i == j ? 1.0 : 2.0});
            }
        }
        return EllipticSymbol(dim, 4, std::move(terms));
    }

    std::size_t dim() const noexcept { return dim_; }
    int order() const noexcept { return order_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }

    /// A(n) evaluated at an arbitrary real frequency vector.
    double operator()(std::span<const double> n) const {
        if (n.size() != dim_) throw ShapeError("EllipticSymbol: frequency has wrong dimension");
        double value = 0.0;
        for (const auto& t : terms_) {
            double mono = t.coefficient;
            for (std::size_t d = 0; d < dim_; ++d)
                for (int k = 0; k < t.alpha[d]; ++k) mono *= n[d];
            value += mono;
        }
        return value;
    }

    double operator()(const Frequency& n) const {
        std::vector<double> v(n.begin(), n.end());
        return (*this)(std::span<const double>(v));
    }

    /// Symbol value attached to a coefficient slot. Slots carrying a Nyquist
    /// component P/2 stand for both +P/2 and -P/2; the symbol is averaged over
    /// the two signs there so that the slot and its Hermitian partner get the
    /// same eigenvalue.
    double bin_value(const TorusGrid& grid, std::size_t flat) const {
        const Frequency n = grid.frequency(flat);
        std::vector<double> v(n.begin(), n.end());
        const double nyquist = static_cast<double>(grid.points / 2);
        std::vector<std::size_t> ny_axes;
        for (std::size_t d = 0; d < v.size(); ++d)
            if (v[d] == nyquist) ny_axes.push_back(d);
        if (ny_axes.empty()) return (*this)(std::span<const double>(v));
        double sum = 0.0;
        const std::size_t combos = std::size_t{1} << ny_axes.size();
        for (std::size_t mask = 0; mask < combos; ++mask) {
            for (std::size_t k = 0; k < ny_axes.size(); ++k)
                v[ny_axes[k]] = (mask >> k) & 1 ? -nyquist : nyquist;
            sum += (*this)(std::span<const double>(v));
        }
        return sum / static_cast<double>(combos);
    }

    /// Eigenvalue of every coefficient slot of the grid; throws PositivityError
    /// when A(n) <= 0 for some n != 0.
    std::vector<double> eigenvalues(const TorusGrid& grid) const {
        if (grid.dim != dim_) throw ShapeError("EllipticSymbol: grid dimension does not match symbol");
        std::vector<double> out(grid.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = bin_value(grid, i);
            if (i != 0 && !(out[i] > 0.0)) {
                std::string where;
                for (const int c : grid.frequency(i)) where += std::to_string(c) + ",";
                throw PositivityError("EllipticSymbol: A(n) = " + std::to_string(out[i]) + " <= 0 at n = (" +
                                      where.substr(0, where.size() - 1) + ")");
            }
        }
        return out;
    }

    void validate_on(const TorusGrid& grid) const { (void)eigenvalues(grid); }

private:
    std::size_t dim_;
    int order_;
    std::vector<Term> terms_;
};

inline double symbol_eval(const EllipticSymbol& sym, const Frequency& n) { return sym(n); }

/// ||g||_{L2^a} = sqrt(sum_n (1 + |n|^2)^a |g_n|^2) over the frequency box.
inline double sobolev_norm(const SpectralField& field, double a) {
    const TorusGrid& grid = field.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double mag2 = std::norm(field[i]);
        if (mag2 == 0.0) continue;
        sum += std::pow(1.0 + grid.norm2(i), a) * mag2;
    }
    return std::sqrt(sum);
}

/// Largest |g_n| on each shell round(|n|) = r.
inline std::vector<double> shell_maxima(const SpectralField& field) {
    const TorusGrid& grid = field.grid();
    std::vector<double> m(grid.shell_count(), 0.0);
    for (std::size_t i = 0; i < field.size(); ++i) {
        const std::size_t r = grid.shell(i);
        m[r] = std::max(m[r], std::abs(field[i]));
    }
    return m;
}

/// Relative floor below which a shell counts as empty.
inline constexpr double shell_noise_floor = 1e-13;

/// True when no coefficient on a shell r >= P/2 rises above the noise floor,
/// i.e. the spectrum sits strictly inside the inscribed ball of the box.
inline bool is_band_limited(const SpectralField& field) {
    const auto m = shell_maxima(field);
    const double top = *std::max_element(m.begin(), m.end());
    if (top == 0.0) return true;
    for (std::size_t r = field.grid().points / 2; r < m.size(); ++r)
        if (m[r] > shell_noise_floor * top) return false;
    return true;
}

/// Least-squares slope of log(shell max) against log(1 + r), fitted over the
/// non-empty shells with r >= r_top/4 (r_top is the outermost non-empty
/// shell). Returns -infinity for band-limited fields; a field lies in L2^a
/// roughly when a < -slope - N/2.
inline double decay_exponent(const SpectralField& field) {
    if (is_band_limited(field)) return -std::numeric_limits<double>::infinity();

    const auto m = shell_maxima(field);
    const double top = *std::max_element(m.begin(), m.end());
    std::size_t r_top = 0;
    for (std::size_t r = 0; r < m.size(); ++r)
        if (m[r] > shell_noise_floor * top) r_top = r;

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t r = r_top / 4; r <= r_top; ++r) {
        if (m[r] <= shell_noise_floor * top) continue;
        xs.push_back(std::log1p(static_cast<double>(r)));
        ys.push_back(std::log(m[r]));
    }
    if (xs.size() < 8)
        throw InsufficientDataError("decay_exponent: only " + std::to_string(xs.size()) +
                                    " non-empty shells to fit (need 8)");

    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return sxy / sxx;
}

} // namespace subdiff
