#pragma once

#include <complex>
#include <memory>

#include "mlaforge/geometry.hpp"
#include "mlaforge/image.hpp"

namespace mlaforge {

// smallest n' >= n whose prime factors are all in {2, 3, 5, 7}
int next_fast_fft_size(int n);

// Half-plane magnitude spectrum of a real image (Hermitian symmetry is
// applied transparently for negative-x queries). Frequencies are in
// cycles per pixel of the transformed image.
class Spectrum {
public:
    Spectrum(int nx, int ny);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int half_width() const { return nx_ / 2 + 1; }

    std::complex<float>* bins() { return bins_.get(); }
    const std::complex<float>* bins() const { return bins_.get(); }

    // bx in [-nx/2, nx/2], by wraps modulo ny
    double mag_at(int bx, int by) const {
        if (bx < 0) {
            bx = -bx;
            by = -by;
        }
        by %= ny_;
        if (by < 0) by += ny_;
        const std::complex<float>& c =
            bins_[static_cast<size_t>(by) * half_width() + bx];
        return std::sqrt(static_cast<double>(c.real()) * c.real() +
                         static_cast<double>(c.imag()) * c.imag());
    }

    Vec2 bin_to_freq(int bx, int by) const {
        by %= ny_;
        if (by < 0) by += ny_;
        const double fy = by <= ny_ / 2 ? static_cast<double>(by) / ny_
                                        : static_cast<double>(by - ny_) / ny_;
        return {static_cast<double>(bx) / nx_, fy};
    }

    void freq_to_bin(const Vec2& f, int& bx, int& by) const {
        bx = static_cast<int>(std::lround(f.x * nx_));
        by = static_cast<int>(std::lround(f.y * ny_));
    }

    // dense magnitude raster (diagnostics; the estimator reads bins lazily)
    Image<float> magnitude() const;

private:
    int nx_;
    int ny_;
    std::unique_ptr<std::complex<float>[], void (*)(std::complex<float>*)> bins_;
};

// Real-to-complex 2D FFT of `img` zero-padded to the next fast size at
// least pad_factor times each dimension. Plans are cached per shape;
// with MLAFORGE_CACHE set, FFTW wisdom is persisted there and measured
// plans are used.
Spectrum compute_spectrum(const Image<float>& img, int pad_factor,
                          int nthreads = 1);

// FFT-based 2D convolution with a centered kernel; the result has the
// same size as `img` (zero-padded boundaries).
Image<float> convolve_fft(const Image<float>& img, const Image<float>& kernel,
                          int nthreads = 1);

}  // namespace mlaforge
