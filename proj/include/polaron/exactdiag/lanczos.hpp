#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/exactdiag/hamiltonian.hpp"

namespace polaron {

struct LanczosOptions {
    double tol = 1e-9;              // on ||H v - E v||
    std::size_t max_krylov = 200;   // basis size before an explicit restart
    std::size_t max_restarts = 50;
    std::size_t check_every = 5;
};

struct EDGroundState {
    Eigen::VectorXd vector;
    double energy = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::vector<double> ritz_trace;  // lowest Ritz value at each check
};

/// Lowest eigenpair by Lanczos with full reorthogonalization and explicit
/// restarts. The start vector is the normalized all-ones vector.
inline EDGroundState ground_state(const EDHamiltonian& h, const LanczosOptions& opt = {}) {
    const auto n = static_cast<Eigen::Index>(h.dim());
    EDGroundState out;
    Eigen::VectorXd start = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    const std::size_t kmax = std::min<std::size_t>(opt.max_krylov, static_cast<std::size_t>(n));

    for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
        std::vector<Eigen::VectorXd> q{start};
        std::vector<double> alpha, beta;
        for (std::size_t k = 0; k < kmax; ++k) {
            Eigen::VectorXd w = h * q[k];
            alpha.push_back(q[k].dot(w));
            // Two passes of classical Gram-Schmidt against the whole basis.
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& v : q) w -= v.dot(w) * v;
            const double b = w.norm();
            ++out.iterations;
            const bool breakdown = b < 1e-14 * std::max(1.0, std::abs(alpha.back()));
            const bool last = k + 1 == kmax;
            if (breakdown || last || (k + 1) % opt.check_every == 0) {
                const auto m = static_cast<Eigen::Index>(alpha.size());
                Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
                for (Eigen::Index i = 0; i < m; ++i) {
                    t(i, i) = alpha[static_cast<std::size_t>(i)];
                    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
                }
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
                out.ritz_trace.push_back(es.eigenvalues()[0]);
                const Eigen::VectorXd s = es.eigenvectors().col(0);
                // ||H y - theta y|| = |beta_m s_m| for the Ritz pair.
                if (std::abs(b * s[m - 1]) < opt.tol || breakdown || last) {
                    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
                    for (Eigen::Index i = 0; i < m; ++i) y += s[i] * q[static_cast<std::size_t>(i)];
                    y.normalize();
                    const Eigen::VectorXd r = h * y;
                    const double e = y.dot(r);
                    const double res = (r - e * y).norm();
                    if (res < opt.tol) {
                        // Sign convention: largest component positive.
                        Eigen::Index idx = 0;
                        y.cwiseAbs().maxCoeff(&idx);
                        if (y[idx] < 0.0) y = -y;
                        out.vector = std::move(y);
                        out.energy = e;
                        out.residual = res;
                        return out;
                    }
                    start = y;
                    break;
                }
            }
            beta.push_back(b);
            q.push_back(w / b);
        }
    }
    std::ostringstream msg;
    msg << "ground_state: Lanczos did not reach residual " << opt.tol << " after " << out.iterations << " iterations";
    throw SolverError(msg.str(), out.ritz_trace);
}

}  // namespace polaron
