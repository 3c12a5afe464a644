#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <new>
#include <numbers>
#include <span>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"

namespace polaron {

namespace detail {
// FFTW's planner is not re-entrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// fftw_malloc'd scratch so plans can use the SIMD codelets (these need
// the alignment FFTW itself would choose).
template <class T>
class AlignedBuffer {
public:
    AlignedBuffer() = default;
    ~AlignedBuffer() { fftw_free(data_); }
    AlignedBuffer(const AlignedBuffer&) = delete;
    AlignedBuffer& operator=(const AlignedBuffer&) = delete;
    T* get(std::size_t n) {
        if (n > cap_) {
            fftw_free(data_);
            data_ = static_cast<T*>(fftw_malloc(n * sizeof(T)));
            if (data_ == nullptr) throw std::bad_alloc();
            cap_ = n;
        }
        return data_;
    }

private:
    T* data_ = nullptr;
    std::size_t cap_ = 0;
};

class R2RPlan {
public:
    R2RPlan(int n, fftw_r2r_kind kind) : n_(n) {
        auto* a = fftw_alloc_real(static_cast<std::size_t>(n));
        auto* b = fftw_alloc_real(static_cast<std::size_t>(n));
        std::lock_guard lock(fftw_planner_mutex());
        // ESTIMATE keeps the chosen algorithm (and so every rounding) fixed run to run.
        plan_ = fftw_plan_r2r_1d(n, a, b, kind, FFTW_ESTIMATE);
        fftw_free(a);
        fftw_free(b);
        if (plan_ == nullptr) throw SolverError("fftw: could not create r2r plan");
    }
    ~R2RPlan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    R2RPlan(const R2RPlan&) = delete;
    R2RPlan& operator=(const R2RPlan&) = delete;

    void execute(const double* in, double* out) const {
        thread_local AlignedBuffer<double> a, b;
        const auto n = static_cast<std::size_t>(n_);
        double* pa = a.get(n);
        double* pb = b.get(n);
        std::copy(in, in + n, pa);
        fftw_execute_r2r(plan_, pa, pb);
        std::copy(pb, pb + n, out);
    }
    int size() const { return n_; }

private:
    int n_;
    fftw_plan plan_;
};

class DftPlan {
public:
    DftPlan(int n, int sign) : n_(n) {
        auto* a = fftw_alloc_complex(static_cast<std::size_t>(n));
        auto* b = fftw_alloc_complex(static_cast<std::size_t>(n));
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_1d(n, a, b, sign, FFTW_ESTIMATE);
        fftw_free(a);
        fftw_free(b);
        if (plan_ == nullptr) throw SolverError("fftw: could not create dft plan");
    }
    ~DftPlan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    DftPlan(const DftPlan&) = delete;
    DftPlan& operator=(const DftPlan&) = delete;

    /// Both arrays must come from fftw_malloc.
    void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan_, in, out); }
    int size() const { return n_; }

private:
    int n_;
    fftw_plan plan_;
};

// Plain complex product; std::complex's operator* carries inf/nan recovery
// that costs a library call per multiply in tight loops.
inline std::complex<double> cmul(std::complex<double> a, std::complex<double> b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline std::size_t largest_prime_factor(std::size_t n) {
    std::size_t best = 1;
    for (std::size_t p = 2; p * p <= n; ++p)
        while (n % p == 0) {
            best = p;
            n /= p;
        }
    return n > 1 ? std::max(best, n) : best;
}

// G_k = sum_j f_j exp(i pi j k / P), j, k = 1..n, P = n + 1, as a Bluestein
// convolution of power-of-two length. FFTW's own sine transform falls back to
// slow generic code when P has a large prime factor (450-point grids: P = 449).
class ChirpSum {
public:
    explicit ChirpSum(std::size_t n) : n_(n) {
        std::size_t len = 1;
        while (len < 2 * n) len <<= 1;
        len_ = len;
        const auto p = static_cast<long long>(n + 1);
        chirp_.resize(n + 1);
        for (std::size_t m = 0; m <= n; ++m) {
            // exp(i pi m^2 / (2P)), with m^2 reduced exactly modulo 4P
            const long long r = static_cast<long long>(m) * static_cast<long long>(m) % (4 * p);
            chirp_[m] = std::polar(1.0, std::numbers::pi * static_cast<double>(r) / (2.0 * static_cast<double>(p)));
        }
        fwd_ = std::make_shared<DftPlan>(static_cast<int>(len_), FFTW_FORWARD);
        bwd_ = std::make_shared<DftPlan>(static_cast<int>(len_), FFTW_BACKWARD);
        AlignedBuffer<fftw_complex> kb, kh;
        auto* kernel = reinterpret_cast<std::complex<double>*>(kb.get(len_));
        auto* khat = reinterpret_cast<std::complex<double>*>(kh.get(len_));
        std::fill(kernel, kernel + len_, std::complex<double>{});
        for (std::size_t m = 0; m < n; ++m) {
            kernel[m] = std::conj(chirp_[m]);
            if (m > 0) kernel[len_ - m] = std::conj(chirp_[m]);
        }
        fwd_->execute(reinterpret_cast<fftw_complex*>(kernel), reinterpret_cast<fftw_complex*>(khat));
        kernel_hat_.assign(khat, khat + len_);
        for (auto& v : kernel_hat_) v /= static_cast<double>(len_);
    }

    // Real or complex input through `load(j)`; writes G_1..G_n to out[0..n).
    template <class Load>
    void operator()(Load&& load, std::complex<double>* out) const {
        thread_local AlignedBuffer<fftw_complex> ab, bb;
        auto* a = reinterpret_cast<std::complex<double>*>(ab.get(len_));
        auto* b = reinterpret_cast<std::complex<double>*>(bb.get(len_));
        for (std::size_t j = 0; j < n_; ++j) a[j] = cmul(load(j), chirp_[j + 1]);
        std::fill(a + n_, a + len_, std::complex<double>{});
        fwd_->execute(reinterpret_cast<fftw_complex*>(a), reinterpret_cast<fftw_complex*>(b));
        for (std::size_t i = 0; i < len_; ++i) b[i] = cmul(b[i], kernel_hat_[i]);
        bwd_->execute(reinterpret_cast<fftw_complex*>(b), reinterpret_cast<fftw_complex*>(a));
        for (std::size_t k = 0; k < n_; ++k) out[k] = cmul(chirp_[k + 1], a[k]);
    }

private:
    std::size_t n_;
    std::size_t len_ = 0;
    std::vector<std::complex<double>> chirp_;
    std::vector<std::complex<double>> kernel_hat_;
    std::shared_ptr<const DftPlan> fwd_, bwd_;
};
}  // namespace detail

/// Orthonormal type-I discrete sine transform on the interior nodes of a
/// hard-wall grid. The transform is its own inverse.
class SineTransform {
public:
    explicit SineTransform(std::size_t interior)
        : n_(interior), scale_(1.0 / std::sqrt(2.0 * static_cast<double>(interior + 1))) {
        if (interior == 0) throw DomainError("SineTransform: empty interior");
        if (detail::largest_prime_factor(interior + 1) > 13 && interior > 64) {
            chirp_ = std::make_shared<detail::ChirpSum>(interior);
        } else {
            plan_ = std::make_shared<detail::R2RPlan>(static_cast<int>(interior), FFTW_RODFT00);
        }
    }

    std::size_t size() const { return n_; }

    void apply(std::span<const double> in, std::span<double> out) const {
        if (plan_) {
            plan_->execute(in.data(), out.data());
            for (double& v : out) v *= scale_;
            return;
        }
        thread_local std::vector<std::complex<double>> g;
        g.resize(n_);
        (*chirp_)([&](std::size_t j) { return std::complex<double>(in[j], 0.0); }, g.data());
        const double f = 2.0 * scale_;
        for (std::size_t k = 0; k < n_; ++k) out[k] = f * g[k].imag();
    }

    void apply(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
        if (plan_) {
            thread_local std::vector<double> re, im;
            re.resize(n_);
            im.resize(n_);
            for (std::size_t j = 0; j < n_; ++j) {
                re[j] = in[j].real();
                im[j] = in[j].imag();
            }
            apply(std::span<const double>(re), std::span<double>(re));
            apply(std::span<const double>(im), std::span<double>(im));
            for (std::size_t k = 0; k < n_; ++k) out[k] = {re[k], im[k]};
            return;
        }
        // sum_j f_j sin(.) = (G(f) - conj G(conj f)) / 2i
        thread_local std::vector<std::complex<double>> g, h;
        g.resize(n_);
        h.resize(n_);
        (*chirp_)([&](std::size_t j) { return in[j]; }, g.data());
        (*chirp_)([&](std::size_t j) { return std::conj(in[j]); }, h.data());
        // -i scale (g - conj h)
        for (std::size_t k = 0; k < n_; ++k) {
            const double re = g[k].real() - h[k].real();
            const double im = g[k].imag() + h[k].imag();
            out[k] = {scale_ * im, -scale_ * re};
        }
    }

private:
    std::size_t n_;
    std::shared_ptr<const detail::R2RPlan> plan_;
    std::shared_ptr<const detail::ChirpSum> chirp_;
    double scale_;
};

/// -(1/2m) d^2/dx^2 with hard walls, diagonal in the sine basis:
/// eigenvalues (k pi / L)^2 / (2m), k = 1..n_points-2, L = 2 x_max.
class KineticOperator {
public:
    KineticOperator(const Grid& grid, double mass) : grid_(grid), mass_(mass), dst_(grid.interior_size()) {
        if (!(mass > 0.0)) throw DomainError("KineticOperator: mass must be positive");
        const std::size_t n = grid.interior_size();
        eig_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double kk = static_cast<double>(k + 1) * std::numbers::pi / grid.length();
            eig_[k] = kk * kk / (2.0 * mass);
        }
    }

    const Grid& grid() const { return grid_; }
    double mass() const { return mass_; }
    std::span<const double> eigenvalues() const { return eig_; }
    const SineTransform& transform() const { return dst_; }

    Field apply(const Field& f) const {
        require_same_grid(grid_, f.grid(), "kinetic_apply");
        Field out(grid_);
        transform_modes(f, out, [&](std::size_t k, Complex c) { return c * eig_[k]; });
        return out;
    }

    /// exp(-i dt T) in place.
    void propagate(Field& f, double dt) const {
        std::vector<Complex> phase(eig_.size());
        for (std::size_t k = 0; k < eig_.size(); ++k) phase[k] = std::polar(1.0, -dt * eig_[k]);
        propagate_with(f, phase);
    }

    /// exp(-i dt T) with a precomputed phase table (one entry per mode).
    void propagate_with(Field& f, std::span<const Complex> phase) const {
        transform_modes(f, f, [&](std::size_t k, Complex c) { return detail::cmul(c, phase[k]); });
    }

    /// exp(-tau T) in place (imaginary time).
    void relax(Field& f, std::span<const double> damping) const {
        transform_modes(f, f, [&](std::size_t k, Complex c) { return c * damping[k]; });
    }

    std::vector<Complex> phase_table(double dt) const {
        std::vector<Complex> p(eig_.size());
        for (std::size_t k = 0; k < eig_.size(); ++k) p[k] = std::polar(1.0, -dt * eig_[k]);
        return p;
    }
    std::vector<double> damping_table(double tau) const {
        std::vector<double> d(eig_.size());
        for (std::size_t k = 0; k < eig_.size(); ++k) d[k] = std::exp(-tau * eig_[k]);
        return d;
    }

    /// <f|T|f>, evaluated in mode space (Parseval).
    double expectation(const Field& f) const {
        require_same_grid(grid_, f.grid(), "kinetic expectation");
        const std::size_t n = eig_.size();
        std::vector<Complex> c(n);
        dst_.apply(f.values().subspan(1, n), c);
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += eig_[k] * std::norm(c[k]);
        return s * grid_.dx();
    }

private:
    template <class Op>
    void transform_modes(const Field& in, Field& out, Op&& op) const {
        const std::size_t n = eig_.size();
        thread_local std::vector<Complex> c;
        c.resize(n);
        dst_.apply(in.values().subspan(1, n), c);
        for (std::size_t k = 0; k < n; ++k) c[k] = op(k, c[k]);
        dst_.apply(c, out.values().subspan(1, n));
        out.enforce_walls();
    }

    Grid grid_;
    double mass_;
    SineTransform dst_;
    std::vector<double> eig_;
};

/// Convenience wrapper: -(1/2m) f'' under hard-wall semantics.
inline Field kinetic_apply(const Field& f, double mass) { return KineticOperator(f.grid(), mass).apply(f); }

}  // namespace polaron
