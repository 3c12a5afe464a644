#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/exactdiag/fock.hpp"
#include "polaron/exactdiag/tensor.hpp"
#include "polaron/observables/energy.hpp"

namespace polaron {

/// Truncated one-body matrices in the unit oscillator basis.
inline Eigen::MatrixXd ho_x2_matrix(std::size_t m) {
    Eigen::MatrixXd x2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t n = 0; n < m; ++n) {
        const auto i = static_cast<Eigen::Index>(n);
        x2(i, i) = n + 0.5;
        if (n + 2 < m) {
            const double v = 0.5 * std::sqrt(static_cast<double>((n + 1) * (n + 2)));
            x2(i, i + 2) = v;
            x2(i + 2, i) = v;
        }
    }
    return x2;
}

/// p^2 / 2
inline Eigen::MatrixXd ho_kinetic_matrix(std::size_t m) {
    Eigen::MatrixXd t = 0.5 * ho_x2_matrix(m);
    for (Eigen::Index i = 0; i + 2 < t.rows(); ++i) {
        t(i, i + 2) = -t(i, i + 2);
        t(i + 2, i) = -t(i + 2, i);
    }
    return t;
}

/// a_i^dag a_j acting on one bath state.
struct BathHop {
    std::uint32_t from, to;
    std::uint16_t i, j;
    double amplitude;
};

struct HamiltonianParameters {
    double g_bb = 0.5;
    double g_bi = 0.0;
    double omega_i = 1.0;  // bath modes and trap fixed at unit frequency
};

/// H = H0_B + H_BB + h_I + H_BI on bath (x) impurity. H_BB carries the
/// conventional 1/2; H_BI has none (distinguishable species).
///   H_BB = (g_bb / 2) sum u_ijkl a_i^dag a_j^dag a_k a_l
///   H_BI = g_bi sum u_ijmn a_i^dag a_j |m><n|
/// Acting on a vector viewed as a bath_dim x M row-major matrix V:
///   HV = H_B V + V h_I^T + sum over hops b -> b' of amp * G_ij V[b, :].
class EDHamiltonian {
public:
    using SparseRM = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

    EDHamiltonian(const FockBasis& basis, const InteractionTensor& u, const HamiltonianParameters& p)
        : basis_(basis), params_(p) {
        if (!(p.g_bb >= 0.0) || !(p.g_bi >= 0.0)) throw ConfigError("build_hamiltonian: couplings must be >= 0");
        if (!(p.omega_i > 0.0)) throw ConfigError("build_hamiltonian: omega_i must be positive");
        if (u.size() != basis.n_modes()) throw UsageError("build_hamiltonian: tensor and basis disagree on the mode count");
        m_ = basis.n_modes();
        build_hops();
        build_bath(u);
        build_impurity();
        build_coupling(u);
    }

    const FockBasis& basis() const { return basis_; }
    const HamiltonianParameters& parameters() const { return params_; }
    std::size_t dim() const { return basis_.total_dim(); }
    const std::vector<BathHop>& hops() const { return hops_; }
    const SparseRM& bath_matrix() const { return h_b_; }
    const Eigen::MatrixXd& impurity_matrix() const { return h_i_; }

    template <class T>
    void apply(std::span<const T> in, std::span<T> out) const {
        if (in.size() != dim() || out.size() != dim()) throw UsageError("EDHamiltonian::apply: vector size mismatch");
        const std::size_t nb = basis_.bath_dim(), m = m_;
        const int* outer = h_b_.outerIndexPtr();
        const int* inner = h_b_.innerIndexPtr();
        const double* val = h_b_.valuePtr();
        std::vector<T> acc(m);
        for (std::size_t b = 0; b < nb; ++b) {
            std::fill(acc.begin(), acc.end(), T{});
            for (int q = outer[b]; q < outer[b + 1]; ++q) {
                const T* src = in.data() + static_cast<std::size_t>(inner[q]) * m;
                const double h = val[q];
                for (std::size_t a = 0; a < m; ++a) acc[a] += h * src[a];
            }
            const T* row = in.data() + b * m;
            const double* hi = h_i_rm_.data();
            for (std::size_t a = 0; a < m; ++a) {
                T s{};
                for (std::size_t c = a % 2; c < m; c += 2) s += hi[a * m + c] * row[c];
                acc[a] += s;
            }
            for (std::size_t q = hop_start_[b]; q < hop_start_[b + 1]; ++q) {
                const BathHop& h = hops_by_to_[q];
                const T* src = in.data() + static_cast<std::size_t>(h.from) * m;
                const double* c = coupling_.data() + (static_cast<std::size_t>(h.i) * m + h.j) * m * m;
                const std::size_t par = (h.i + h.j) % 2;
                for (std::size_t a = 0; a < m; ++a) {
                    T s{};
                    for (std::size_t d = (a + par) % 2; d < m; d += 2) s += c[a * m + d] * src[d];
                    acc[a] += h.amplitude * s;
                }
            }
            std::copy(acc.begin(), acc.end(), out.data() + b * m);
        }
    }

    Eigen::VectorXcd operator*(const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd out(v.size());
        apply<std::complex<double>>({v.data(), static_cast<std::size_t>(v.size())}, {out.data(), static_cast<std::size_t>(out.size())});
        return out;
    }
    Eigen::VectorXd operator*(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(v.size());
        apply<double>({v.data(), static_cast<std::size_t>(v.size())}, {out.data(), static_cast<std::size_t>(out.size())});
        return out;
    }

    /// Dense copy for oracle checks on small problems.
    Eigen::MatrixXd to_dense() const {
        const auto n = static_cast<Eigen::Index>(dim());
        if (n > 4000) throw SizeError("EDHamiltonian::to_dense: dimension too large for a dense copy", static_cast<unsigned long long>(n));
        Eigen::MatrixXd h(n, n);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            e[k] = 1.0;
            h.col(k) = (*this) * e;
            e[k] = 0.0;
        }
        return h;
    }

    /// Six-term split of <v|H|v> for a normalized state.
    EnergyBreakdown energy_breakdown(const Eigen::VectorXcd& v) const {
        const std::size_t m = m_, nb = basis_.bath_dim();
        const Eigen::MatrixXd t = ho_kinetic_matrix(m);
        const Eigen::MatrixXd vx = 0.5 * ho_x2_matrix(m);
        const Eigen::MatrixXcd obdm = bath_one_body(v);
        EnergyBreakdown e;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
                e.kinetic_b += t(ii, jj) * obdm(ii, jj).real();
                e.potential_b += vx(ii, jj) * obdm(ii, jj).real();
            }
        }
        // Impurity reduced density matrix.
        Eigen::MatrixXcd rho_i = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t c = 0; c < m; ++c)
                    rho_i(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) +=
                        v[static_cast<Eigen::Index>(b * m + a)] * std::conj(v[static_cast<Eigen::Index>(b * m + c)]);
        const double w2 = params_.omega_i * params_.omega_i;
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t c = 0; c < m; ++c) {
                const auto aa = static_cast<Eigen::Index>(a), cc = static_cast<Eigen::Index>(c);
                e.kinetic_i += t(aa, cc) * rho_i(cc, aa).real();
                e.potential_i += w2 * vx(aa, cc) * rho_i(cc, aa).real();
            }
        }
        // Interaction terms from the pieces of H that carry them.
        const Eigen::VectorXcd hv = (*this) * v;
        const double total = v.dot(hv).real();
        const Eigen::VectorXcd bb = apply_intra(v);
        e.intra_bb = v.dot(bb).real();
        e.inter_bi = total - e.kinetic_b - e.potential_b - e.kinetic_i - e.potential_i - e.intra_bb;
        return e;
    }

    /// <a_i^dag a_j> of the bath.
    Eigen::MatrixXcd bath_one_body(const Eigen::VectorXcd& v) const {
        const std::size_t m = m_;
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (const auto& h : hops_) {
            std::complex<double> s{};
            for (std::size_t a = 0; a < m; ++a)
                s += std::conj(v[static_cast<Eigen::Index>(h.to * m + a)]) * v[static_cast<Eigen::Index>(h.from * m + a)];
            rho(h.i, h.j) += h.amplitude * s;
        }
        return rho;
    }

private:
    // H_BB alone, applied through the stored two-body part of the bath matrix.
    Eigen::VectorXcd apply_intra(const Eigen::VectorXcd& v) const {
        const std::size_t m = m_;
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
        const int* outer = h_bb_.outerIndexPtr();
        const int* inner = h_bb_.innerIndexPtr();
        const double* val = h_bb_.valuePtr();
        for (std::size_t b = 0; b < basis_.bath_dim(); ++b)
            for (int q = outer[b]; q < outer[b + 1]; ++q)
                for (std::size_t a = 0; a < m; ++a)
                    out[static_cast<Eigen::Index>(b * m + a)] += val[q] * v[static_cast<Eigen::Index>(static_cast<std::size_t>(inner[q]) * m + a)];
        return out;
    }

    void build_hops() {
        const std::size_t m = m_;
        std::vector<std::uint8_t> occ(m);
        for (std::size_t b = 0; b < basis_.bath_dim(); ++b) {
            const std::uint8_t* o = basis_.occupations(b);
            for (std::size_t j = 0; j < m; ++j) {
                if (o[j] == 0) continue;
                for (std::size_t i = 0; i < m; ++i) {
                    std::copy(o, o + m, occ.begin());
                    const double aj = std::sqrt(static_cast<double>(occ[j]));
                    --occ[j];
                    const double ai = std::sqrt(static_cast<double>(occ[i]) + 1.0);
                    ++occ[i];
                    hops_.push_back({static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(basis_.index(occ.data())),
                                     static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j), ai * aj});
                }
            }
        }
    }

    void build_bath(const InteractionTensor& u) {
        const std::size_t m = m_, nb = basis_.bath_dim();
        std::vector<Eigen::Triplet<double, int>> diag, two;
        for (std::size_t b = 0; b < nb; ++b) {
            const std::uint8_t* o = basis_.occupations(b);
            double e = 0.0;
            for (std::size_t k = 0; k < m; ++k) e += o[k] * (k + 0.5);
            diag.emplace_back(static_cast<int>(b), static_cast<int>(b), e);
        }
        if (params_.g_bb != 0.0) {
            std::vector<std::uint8_t> occ(m);
            const double half = 0.5 * params_.g_bb;
            for (std::size_t b = 0; b < nb; ++b) {
                const std::uint8_t* o = basis_.occupations(b);
                for (std::size_t l = 0; l < m; ++l) {
                    if (o[l] == 0) continue;
                    for (std::size_t k = 0; k < m; ++k) {
                        if (o[k] - (k == l ? 1 : 0) <= 0) continue;
                        std::copy(o, o + m, occ.begin());
                        double amp = std::sqrt(static_cast<double>(occ[l]));
                        --occ[l];
                        amp *= std::sqrt(static_cast<double>(occ[k]));
                        --occ[k];
                        for (std::size_t j = 0; j < m; ++j) {
                            const double aj = std::sqrt(static_cast<double>(occ[j]) + 1.0);
                            ++occ[j];
                            for (std::size_t i = 0; i < m; ++i) {
                                if ((i + j + k + l) % 2 != 0) continue;
                                const double ai = std::sqrt(static_cast<double>(occ[i]) + 1.0);
                                ++occ[i];
                                const double h = half * u(i, j, k, l) * amp * aj * ai;
                                if (h != 0.0) two.emplace_back(static_cast<int>(basis_.index(occ.data())), static_cast<int>(b), h);
                                --occ[i];
                            }
                            --occ[j];
                        }
                    }
                }
            }
        }
        const auto n = static_cast<int>(nb);
        h_bb_.resize(n, n);
        h_bb_.setFromTriplets(two.begin(), two.end());
        h_bb_.makeCompressed();
        two.insert(two.end(), diag.begin(), diag.end());
        h_b_.resize(n, n);
        h_b_.setFromTriplets(two.begin(), two.end());
        h_b_.prune(0.0);
        h_b_.makeCompressed();
    }

    void build_impurity() {
        // Unit-frequency modes in a trap of frequency omega_i.
        const double w2 = params_.omega_i * params_.omega_i;
        h_i_ = ho_kinetic_matrix(m_) + 0.5 * w2 * ho_x2_matrix(m_);
        h_i_rm_.resize(m_ * m_);
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t c = 0; c < m_; ++c) h_i_rm_[a * m_ + c] = h_i_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
    }

    void build_coupling(const InteractionTensor& u) {
        const std::size_t m = m_;
        hop_start_.assign(basis_.bath_dim() + 1, 0);
        if (params_.g_bi == 0.0) return;
        // g_bi u_ij.. as one M x M matrix per (i, j); small enough to stay in cache.
        coupling_.assign(m * m * m * m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t a = 0; a < m; ++a)
                    for (std::size_t c = 0; c < m; ++c)
                        if ((i + j + a + c) % 2 == 0) coupling_[((i * m + j) * m + a) * m + c] = params_.g_bi * u(i, j, a, c);
        hops_by_to_ = hops_;
        std::stable_sort(hops_by_to_.begin(), hops_by_to_.end(), [](const BathHop& a, const BathHop& b) { return a.to < b.to; });
        for (const auto& h : hops_by_to_) ++hop_start_[h.to + 1];
        for (std::size_t b = 0; b < basis_.bath_dim(); ++b) hop_start_[b + 1] += hop_start_[b];
    }

    FockBasis basis_;
    HamiltonianParameters params_;
    std::size_t m_ = 0;
    std::vector<BathHop> hops_;
    SparseRM h_b_, h_bb_;
    Eigen::MatrixXd h_i_;
    std::vector<double> h_i_rm_;
    std::vector<BathHop> hops_by_to_;
    std::vector<std::size_t> hop_start_;
    std::vector<double> coupling_;
};

inline EDHamiltonian build_hamiltonian(const FockBasis& basis, const InteractionTensor& u, double g_bb, double g_bi, double omega_i = 1.0) {
    return EDHamiltonian(basis, u, HamiltonianParameters{g_bb, g_bi, omega_i});
}

}  // namespace polaron
