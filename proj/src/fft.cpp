#include "mlaforge/fft.hpp"

#include <fftw3.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>

namespace mlaforge {

int next_fast_fft_size(int n) {
    if (n < 1) return 1;
    for (int m = n;; ++m) {
        int r = m;
        for (int f : {2, 3, 5, 7})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

namespace {

void free_complex(std::complex<float>* p) { fftwf_free(p); }

struct PlanKey {
    int nx, ny, threads;
    bool operator<(const PlanKey& o) const {
        return std::tie(nx, ny, threads) < std::tie(o.nx, o.ny, o.threads);
    }
};

class Planner {
public:
    static Planner& instance() {
        static Planner p;
        return p;
    }

    fftwf_plan get(int nx, int ny, int threads, bool inverse = false) {
        std::lock_guard<std::mutex> lock(mutex_);
        const PlanKey key{inverse ? -nx : nx, ny, threads};
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        fftwf_plan_with_nthreads(threads);
        float* re = fftwf_alloc_real(static_cast<size_t>(nx) * ny);
        fftwf_complex* co =
            fftwf_alloc_complex(static_cast<size_t>(ny) * (nx / 2 + 1));
        const unsigned flags = use_wisdom_ ? FFTW_MEASURE : FFTW_ESTIMATE;
        fftwf_plan plan = inverse
                              ? fftwf_plan_dft_c2r_2d(ny, nx, co, re, flags)
                              : fftwf_plan_dft_r2c_2d(ny, nx, re, co, flags);
        fftwf_free(re);
        fftwf_free(co);
        if (use_wisdom_) save_wisdom();
        plans_[key] = plan;
        return plan;
    }

private:
    Planner() {
        fftwf_init_threads();
        const char* cache = std::getenv("MLAFORGE_CACHE");
        if (cache && *cache) {
            use_wisdom_ = true;
            std::error_code ec;
            std::filesystem::create_directories(cache, ec);
            wisdom_path_ = std::string(cache) + "/fftwf.wisdom";
            fftwf_import_wisdom_from_filename(wisdom_path_.c_str());
        }
    }

    void save_wisdom() {
        if (!wisdom_path_.empty())
            fftwf_export_wisdom_to_filename(wisdom_path_.c_str());
    }

    std::mutex mutex_;
    std::map<PlanKey, fftwf_plan> plans_;
    bool use_wisdom_ = false;
    std::string wisdom_path_;
};

}  // namespace

Spectrum::Spectrum(int nx, int ny)
    : nx_(nx), ny_(ny),
      bins_(reinterpret_cast<std::complex<float>*>(fftwf_alloc_complex(
                static_cast<size_t>(ny) * (nx / 2 + 1))),
            &free_complex) {}

Image<float> Spectrum::magnitude() const {
    Image<float> out(half_width(), ny_);
    for (int y = 0; y < ny_; ++y) {
        float* row = out.row(y);
        const std::complex<float>* src =
            bins_.get() + static_cast<size_t>(y) * half_width();
        for (int x = 0; x < half_width(); ++x) row[x] = std::abs(src[x]);
    }
    return out;
}

Spectrum compute_spectrum(const Image<float>& img, int pad_factor,
                          int nthreads) {
    if (pad_factor < 1)
        throw std::invalid_argument("compute_spectrum: pad_factor must be >= 1");
    const int nx = next_fast_fft_size(img.width() * pad_factor);
    const int ny = next_fast_fft_size(img.height() * pad_factor);
    if (nthreads < 1) nthreads = 1;

    fftwf_plan plan = Planner::instance().get(nx, ny, nthreads);

    float* in = fftwf_alloc_real(static_cast<size_t>(nx) * ny);
    std::memset(in, 0, sizeof(float) * static_cast<size_t>(nx) * ny);
    for (int y = 0; y < img.height(); ++y)
        std::memcpy(in + static_cast<size_t>(y) * nx, img.row(y),
                    sizeof(float) * img.width());

    Spectrum spec(nx, ny);
    fftwf_execute_dft_r2c(plan, in,
                          reinterpret_cast<fftwf_complex*>(spec.bins()));
    fftwf_free(in);
    return spec;
}

Image<float> convolve_fft(const Image<float>& img, const Image<float>& kernel,
                          int nthreads) {
    if (nthreads < 1) nthreads = 1;
    const int nx = next_fast_fft_size(img.width() + kernel.width() - 1);
    const int ny = next_fast_fft_size(img.height() + kernel.height() - 1);
    const size_t real_n = static_cast<size_t>(nx) * ny;
    const size_t cplx_n = static_cast<size_t>(ny) * (nx / 2 + 1);

    fftwf_plan fwd = Planner::instance().get(nx, ny, nthreads, false);
    fftwf_plan bwd = Planner::instance().get(nx, ny, nthreads, true);

    float* buf = fftwf_alloc_real(real_n);
    fftwf_complex* spec_img = fftwf_alloc_complex(cplx_n);
    fftwf_complex* spec_ker = fftwf_alloc_complex(cplx_n);

    std::memset(buf, 0, sizeof(float) * real_n);
    for (int y = 0; y < img.height(); ++y)
        std::memcpy(buf + static_cast<size_t>(y) * nx, img.row(y),
                    sizeof(float) * img.width());
    fftwf_execute_dft_r2c(fwd, buf, spec_img);

    std::memset(buf, 0, sizeof(float) * real_n);
    for (int y = 0; y < kernel.height(); ++y)
        std::memcpy(buf + static_cast<size_t>(y) * nx, kernel.row(y),
                    sizeof(float) * kernel.width());
    fftwf_execute_dft_r2c(fwd, buf, spec_ker);

    const float scale = 1.0f / (static_cast<float>(nx) * static_cast<float>(ny));
    for (size_t i = 0; i < cplx_n; ++i) {
        const float ar = spec_img[i][0], ai = spec_img[i][1];
        const float br = spec_ker[i][0], bi = spec_ker[i][1];
        spec_img[i][0] = (ar * br - ai * bi) * scale;
        spec_img[i][1] = (ar * bi + ai * br) * scale;
    }
    fftwf_free(spec_ker);
    fftwf_execute_dft_c2r(bwd, spec_img, buf);
    fftwf_free(spec_img);

    Image<float> out(img.width(), img.height());
    const int ox = kernel.width() / 2;
    const int oy = kernel.height() / 2;
    for (int y = 0; y < img.height(); ++y)
        std::memcpy(out.row(y), buf + static_cast<size_t>(y + oy) * nx + ox,
                    sizeof(float) * img.width());
    fftwf_free(buf);
    return out;
}

}  // namespace mlaforge
