#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace subdiff::detail {

// One-dimensional DFT of fixed length: iterative radix-2 when the length is a
// power of two, a direct O(n^2) sum with tabulated twiddles otherwise.
// forward: X_k = sum_j x_j e^{-2 pi i jk/n}; inverse drops the minus sign and
// is unnormalised.
class Dft1d {
public:
    explicit Dft1d(std::size_t n) : n_(n), pow2_(n > 0 && (n & (n - 1)) == 0) {
        twiddle_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k)
            twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_));
        if (pow2_) {
            bitrev_.resize(n_);
            std::size_t bits = 0;
            while ((std::size_t{1} << bits) < n_) ++bits;
            for (std::size_t i = 0; i < n_; ++i) {
                std::size_t r = 0;
                for (std::size_t b = 0; b < bits; ++b)
                    if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
                bitrev_[i] = r;
            }
        }
    }

    std::size_t size() const noexcept { return n_; }

    void transform(std::span<std::complex<double>> data, bool inverse) const {
        if (pow2_) {
            radix2(data, inverse);
        } else {
            direct(data, inverse);
        }
    }

private:
    std::complex<double> root(std::size_t k, bool inverse) const {
        const auto& w = twiddle_[k % n_];
        return inverse ? std::conj(w) : w;
    }

    void radix2(std::span<std::complex<double>> a, bool inverse) const {
        for (std::size_t i = 0; i < n_; ++i)
            if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    const auto w = root(k * stride, inverse);
                    const auto u = a[start + k];
                    const auto v = a[start + k + len / 2] * w;
                    a[start + k] = u + v;
                    a[start + k + len / 2] = u - v;
                }
            }
        }
    }

    void direct(std::span<std::complex<double>> a, bool inverse) const {
        std::vector<std::complex<double>> out(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            std::complex<double> acc = 0.0;
            for (std::size_t j = 0; j < n_; ++j) acc += a[j] * root(j * k, inverse);
            out[k] = acc;
        }
        std::copy(out.begin(), out.end(), a.begin());
    }

    std::size_t n_;
    bool pow2_;
    std::vector<std::complex<double>> twiddle_;
    std::vector<std::size_t> bitrev_;
};

/// In-place N-dimensional DFT on a row-major cube of side n, applied as
/// separable one-dimensional passes along each axis.
inline void dft_nd(std::span<std::complex<double>> data, std::size_t dim, std::size_t n, bool inverse) {
    const Dft1d plan(n);
    std::vector<std::complex<double>> line(n);
    std::size_t stride = 1;
    for (std::size_t axis = 0; axis < dim; ++axis) {
        // axis counted from the fastest-varying index
        const std::size_t block = stride * n;
        for (std::size_t outer = 0; outer < data.size(); outer += block) {
            for (std::size_t inner = 0; inner < stride; ++inner) {
                for (std::size_t k = 0; k < n; ++k) line[k] = data[outer + inner + k * stride];
                plan.transform(line, inverse);
                for (std::size_t k = 0; k < n; ++k) data[outer + inner + k * stride] = line[k];
            }
        }
        stride = block;
    }
}

} // namespace subdiff::detail
