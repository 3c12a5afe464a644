#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/core/ho_basis.hpp"
#include "polaron/exactdiag/hamiltonian.hpp"

namespace polaron {

/// |psi> = sum_k sqrt(lambda_k) |B_k> |I_k>, lambdas descending.
struct SchmidtDecomposition {
    Eigen::VectorXd lambdas;
    Eigen::MatrixXcd bath_vectors;      // columns |B_k>
    Eigen::MatrixXcd impurity_vectors;  // columns |I_k>
};

/// Amplitude matrix A(b, a) of sum A(b, a) |b>|a>.
inline SchmidtDecomposition schmidt(const Eigen::MatrixXcd& amplitudes) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(amplitudes, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SchmidtDecomposition s;
    s.lambdas = svd.singularValues().array().square();
    s.bath_vectors = svd.matrixU();
    s.impurity_vectors = svd.matrixV().conjugate();
    return s;
}

/// Bath (x) impurity cut of an ED vector (index = bath * M + mode).
inline SchmidtDecomposition schmidt(const Eigen::VectorXcd& v, std::size_t n_modes) {
    if (n_modes == 0 || static_cast<std::size_t>(v.size()) % n_modes != 0) throw UsageError("schmidt: vector does not factor into bath x impurity");
    const auto rows = static_cast<Eigen::Index>(static_cast<std::size_t>(v.size()) / n_modes);
    const auto cols = static_cast<Eigen::Index>(n_modes);
    const Eigen::MatrixXcd a = Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows, cols);
    return schmidt(a);
}

struct EntanglementSummary {
    double entropy = 0.0;              // -sum lambda ln lambda
    std::vector<double> populations;   // impurity natural populations (= lambdas)
};

inline EntanglementSummary entropy_and_populations(const SchmidtDecomposition& s) {
    EntanglementSummary out;
    out.populations.assign(s.lambdas.data(), s.lambdas.data() + s.lambdas.size());
    for (double l : out.populations)
        if (l > 0.0) out.entropy -= l * std::log(l);
    return out;
}

/// <B|a_i^dag a_j|B> for a bath-only vector.
inline Eigen::MatrixXcd bath_one_body(const EDHamiltonian& h, const Eigen::VectorXcd& bath_vector) {
    const auto m = static_cast<Eigen::Index>(h.basis().n_modes());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(m, m);
    for (const auto& hop : h.hops()) rho(hop.i, hop.j) += hop.amplitude * std::conj(bath_vector[hop.to]) * bath_vector[hop.from];
    return rho;
}

struct SchmidtOverlap {
    double lambda_exact = 0.0;
    double lambda_order1 = 0.0;
    double lambda_0 = 0.0;
    bool truncation_valid = true;  // false when lambda_1 < 0.5
    std::size_t modes_used = 0;
    Eigen::MatrixXd k_bb, k_ii, k_bi;  // K^{BB}_ij, K^{II}_ij, K^{BI}_ij
};

/// Bath-impurity density overlap written through the Schmidt modes. With
/// rho_s = sum_k lambda_k rho_s,k and K^{ss'}_ij = int rho_s,i rho_s',j:
///   exact:  (sum l_i l_j K^BI_ij)^2 / (sum l_i l_j K^BB_ij * sum l_i l_j K^II_ij)
///   order1: L0 [1 + 2 sum_{j>1} (l_j / l_1) ((K^BI_1j + K^BI_j1) / K^BI_11 - K^BB_1j / K^BB_11 - K^II_1j / K^II_11)]
/// with L0 = (K^BI_11)^2 / (K^BB_11 K^II_11).
inline SchmidtOverlap schmidt_overlap_expansion(const SchmidtDecomposition& s, const EDHamiltonian& h, const HOBasis& modes,
                                                double lambda_floor = 1e-14) {
    const std::size_t m = h.basis().n_modes();
    if (modes.size() != m) throw UsageError("schmidt_overlap_expansion: mode basis does not match the Hamiltonian");
    const Grid& g = modes.grid();
    std::size_t d = 0;
    while (d < static_cast<std::size_t>(s.lambdas.size()) && s.lambdas[static_cast<Eigen::Index>(d)] > lambda_floor) ++d;
    if (d == 0) throw DomainError("schmidt_overlap_expansion: empty decomposition");

    std::vector<std::vector<double>> rho_b(d, std::vector<double>(g.size(), 0.0)), rho_i(d, std::vector<double>(g.size(), 0.0));
    for (std::size_t k = 0; k < d; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const Eigen::MatrixXcd obdm = bath_one_body(h, s.bath_vectors.col(kk));
        for (std::size_t p = 0; p < g.size(); ++p) {
            double rb = 0.0;
            std::complex<double> amp{};
            for (std::size_t i = 0; i < m; ++i) {
                const double fi = modes.mode(i)[p];
                amp += s.impurity_vectors(static_cast<Eigen::Index>(i), kk) * fi;
                for (std::size_t j = 0; j < m; ++j) rb += obdm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)).real() * fi * modes.mode(j)[p];
            }
            rho_b[k][p] = rb;
            rho_i[k][p] = std::norm(amp);
        }
    }
    SchmidtOverlap out;
    out.modes_used = d;
    const auto dd = static_cast<Eigen::Index>(d);
    out.k_bb.resize(dd, dd);
    out.k_ii.resize(dd, dd);
    out.k_bi.resize(dd, dd);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            out.k_bb(ii, jj) = integrate_product(g, rho_b[i], rho_b[j]);
            out.k_ii(ii, jj) = integrate_product(g, rho_i[i], rho_i[j]);
            out.k_bi(ii, jj) = integrate_product(g, rho_b[i], rho_i[j]);
        }
    }
    const Eigen::VectorXd l = s.lambdas.head(dd);
    const double num = l.dot(out.k_bi * l);
    out.lambda_exact = num * num / (l.dot(out.k_bb * l) * l.dot(out.k_ii * l));
    out.lambda_0 = out.k_bi(0, 0) * out.k_bi(0, 0) / (out.k_bb(0, 0) * out.k_ii(0, 0));
    double corr = 0.0;
    for (Eigen::Index j = 1; j < dd; ++j) {
        corr += l[j] / l[0] *
                ((out.k_bi(0, j) + out.k_bi(j, 0)) / out.k_bi(0, 0) - out.k_bb(0, j) / out.k_bb(0, 0) - out.k_ii(0, j) / out.k_ii(0, 0));
    }
    out.lambda_order1 = out.lambda_0 * (1.0 + 2.0 * corr);
    out.truncation_valid = l[0] >= 0.5;
    return out;
}

/// One-body densities of the full state on the grid: bath (normalized to
/// N_B) and impurity (normalized to 1).
inline std::pair<std::vector<double>, std::vector<double>> ed_densities(const Eigen::VectorXcd& v, const EDHamiltonian& h, const HOBasis& modes) {
    const std::size_t m = h.basis().n_modes();
    const Grid& g = modes.grid();
    const Eigen::MatrixXcd obdm = h.bath_one_body(v);
    Eigen::MatrixXcd rho_i = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    const std::size_t nb = h.basis().bath_dim();
    for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < m; ++c)
                rho_i(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) +=
                    std::conj(v[static_cast<Eigen::Index>(b * m + a)]) * v[static_cast<Eigen::Index>(b * m + c)];
    std::vector<double> rb(g.size(), 0.0), ri(g.size(), 0.0);
    for (std::size_t p = 0; p < g.size(); ++p) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double f = modes.mode(i)[p] * modes.mode(j)[p];
                rb[p] += obdm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)).real() * f;
                ri[p] += rho_i(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)).real() * f;
            }
        }
    }
    return {rb, ri};
}

}  // namespace polaron
