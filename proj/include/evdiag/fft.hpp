#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace evdiag::fft {

using cplx = std::complex<double>;

namespace detail {
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Real-to-complex and complex-to-real transforms of one length, reusable on
/// any buffers (new-array execute). The c2r direction is unnormalized.
class Plan1d {
public:
    explicit Plan1d(std::size_t n) : n_(n) {
        std::vector<double> in(n);
        std::vector<cplx> out(n / 2 + 1);
        std::lock_guard lock(detail::planner_mutex());
        const int len = static_cast<int>(n);
        forward_ = fftw_plan_dft_r2c_1d(len, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
        backward_ = fftw_plan_dft_c2r_1d(len, reinterpret_cast<fftw_complex*>(out.data()), in.data(),
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    Plan1d(const Plan1d&) = delete;
    Plan1d& operator=(const Plan1d&) = delete;
    ~Plan1d() {
        std::lock_guard lock(detail::planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    [[nodiscard]] std::size_t size() const { return n_; }

    void forward(std::span<double> in, std::span<cplx> out) const {
        fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    }
    /// Destroys the contents of `in`.
    void backward(std::span<cplx> in, std::span<double> out) const {
        fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in.data()), out.data());
    }

    /// Shared plan per length.
    static const Plan1d& get(std::size_t n) {
        static std::mutex cache_mutex;
        static std::map<std::size_t, std::unique_ptr<Plan1d>> cache;
        std::lock_guard lock(cache_mutex);
        auto& slot = cache[n];
        if (!slot) slot = std::make_unique<Plan1d>(n);
        return *slot;
    }

private:
    std::size_t n_;
    fftw_plan forward_{};
    fftw_plan backward_{};
};

/// 2D r2c/c2r pair for an n x n periodic box. Physical arrays are row-major
/// with x fastest: data[i + n*j]. Spectral arrays hold n rows (ky) of
/// n/2+1 entries (kx). `forward` returns normalized Fourier coefficients,
/// `backward` evaluates the trigonometric sum at the grid points.
class Plan2d {
public:
    explicit Plan2d(std::size_t n) : n_(n) {
        std::vector<double> in(n * n);
        std::vector<cplx> out(n * (n / 2 + 1));
        std::lock_guard lock(detail::planner_mutex());
        const int len = static_cast<int>(n);
        // FFTW is row-major with the last index fastest, so (ny, nx) order.
        forward_ = fftw_plan_dft_r2c_2d(len, len, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
        backward_ = fftw_plan_dft_c2r_2d(len, len, reinterpret_cast<fftw_complex*>(out.data()), in.data(),
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    Plan2d(const Plan2d&) = delete;
    Plan2d& operator=(const Plan2d&) = delete;
    ~Plan2d() {
        std::lock_guard lock(detail::planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    [[nodiscard]] std::size_t n() const { return n_; }
    [[nodiscard]] std::size_t spectral_size() const { return n_ * (n_ / 2 + 1); }

    void forward(std::span<const double> in, std::span<cplx> out) const {
        scratch_.assign(in.begin(), in.end());
        fftw_execute_dft_r2c(forward_, scratch_.data(), reinterpret_cast<fftw_complex*>(out.data()));
        const double scale = 1.0 / static_cast<double>(n_ * n_);
        for (auto& c : out) c *= scale;
    }
    void backward(std::span<const cplx> in, std::span<double> out) const {
        cscratch_.assign(in.begin(), in.end());
        fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(cscratch_.data()), out.data());
    }

private:
    std::size_t n_;
    fftw_plan forward_{};
    fftw_plan backward_{};
    mutable std::vector<double> scratch_;
    mutable std::vector<cplx> cscratch_;
};

}  // namespace evdiag::fft
