#pragma once

#include <algorithm>
#include <cstddef>

#include "fdsi/common.hpp"

namespace fdsi {

// Unnormalized forward DFT convention used throughout the toolkit:
//
//   X(k) = sum_{n=0}^{N-1} x(n) * exp(-j*2*pi*k*n/N)
//
// The inverse applies the conjugate kernel and divides by N. Parseval under
// this convention: sum |x|^2 = (1/N) sum |X|^2.

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 Cooley-Tukey. sign = -1 forward, +1 inverse
/// kernel (no 1/N scaling here).
inline void fft_radix2(cvector& a, int sign) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = sign * 2.0 * kPi / static_cast<double>(len);
        const cdouble wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const cdouble even = a[i + j];
                const cdouble odd = a[i + j + len / 2] * w;
                a[i + j] = even + odd;
                a[i + j + len / 2] = even - odd;
                w *= wlen;
            }
        }
    }
}

/// Bluestein chirp-z fallback for arbitrary lengths, built on the radix-2
/// kernel via zero-padded circular convolution.
inline void fft_bluestein(cvector& a, int sign) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;

    cvector chirp(n);
    for (std::size_t i = 0; i < n; ++i) {
        // i*i mod 2n avoids precision loss for large indices
        const double angle = sign * kPi * static_cast<double>((i * i) % (2 * n)) / static_cast<double>(n);
        chirp[i] = cdouble(std::cos(angle), std::sin(angle));
    }

    cvector x(m, cdouble(0.0, 0.0)), y(m, cdouble(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i] * chirp[i];
    y[0] = std::conj(chirp[0]);
    for (std::size_t i = 1; i < n; ++i) y[i] = y[m - i] = std::conj(chirp[i]);

    fft_radix2(x, -1);
    fft_radix2(y, -1);
    for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
    fft_radix2(x, +1);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) a[i] = x[i] * scale * chirp[i];
}

inline void transform(cvector& a, int sign) {
    if (is_power_of_two(a.size()))
        fft_radix2(a, sign);
    else
        fft_bluestein(a, sign);
}

}  // namespace detail

/// Forward DFT of a complex sequence.
inline cvector fft(cvector data) {
    detail::transform(data, -1);
    return data;
}

/// Inverse DFT (conjugate kernel scaled by 1/N).
inline cvector ifft(cvector data) {
    detail::transform(data, +1);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
    return data;
}

/// Forward DFT of a real sequence; returns all N bins.
inline cvector fft(const std::vector<double>& data) {
    cvector a(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) a[i] = cdouble(data[i], 0.0);
    return fft(a);
}

/// Forward DFT of a real sequence, truncated to bins 0..N/2 (Hermitian half).
inline cvector rfft(const std::vector<double>& data) {
    cvector full = fft(data);
    full.resize(data.size() / 2 + 1);
    return full;
}

/// Inverse of rfft: reconstructs a real length-n sequence from bins 0..n/2.
inline std::vector<double> irfft(const cvector& half, std::size_t n) {
    if (half.size() != n / 2 + 1)
        throw Error(ErrorCategory::numeric, "irfft: spectrum size does not match target length");
    cvector full(n);
    for (std::size_t k = 0; k < half.size(); ++k) full[k] = half[k];
    for (std::size_t k = half.size(); k < n; ++k) full[k] = std::conj(full[n - k]);
    cvector time = ifft(std::move(full));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = time[i].real();
    return out;
}

/// Exact band-limited resampling of one period of a periodic real signal to
/// `factor`-times the rate, via spectral zero padding.
inline std::vector<double> upsample_periodic(const std::vector<double>& period, std::size_t factor) {
    if (factor == 0) throw Error(ErrorCategory::usage, "upsample_periodic: factor must be >= 1");
    if (factor == 1) return period;
    const std::size_t n = period.size();
    const std::size_t m = n * factor;
    cvector spec = fft(period);
    cvector padded(m, cdouble(0.0, 0.0));
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k <= half; ++k) padded[k] = spec[k];
    for (std::size_t k = 1; k < n - half; ++k) padded[m - k] = spec[n - k];
    if (n % 2 == 0 && half > 0) {
        // split the Nyquist line so the resampled signal stays real-symmetric
        padded[half] = spec[half] * 0.5;
        padded[m - half] = std::conj(spec[half]) * 0.5;
    }
    cvector time = ifft(std::move(padded));
    std::vector<double> out(m);
    const double scale = static_cast<double>(factor);
    for (std::size_t i = 0; i < m; ++i) out[i] = time[i].real() * scale;
    return out;
}

}  // namespace fdsi
