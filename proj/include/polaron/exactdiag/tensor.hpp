#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/ho_basis.hpp"

namespace polaron {

/// Contact integrals u_ijkl = int phi_i phi_j phi_k phi_l dx of real
/// oscillator modes. Each index-permutation class is stored once.
class InteractionTensor {
public:
    std::size_t size() const { return m_; }
    std::size_t unique_entries() const { return values_.size(); }

    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return values_[slot_[((i * m_ + j) * m_ + k) * m_ + l]];
    }

    static InteractionTensor from_basis(const HOBasis& basis) {
        InteractionTensor t;
        const std::size_t m = basis.size();
        t.m_ = m;
        t.slot_.assign(m * m * m * m, 0);
        const Grid& g = basis.grid();
        std::vector<double> pair(g.size());
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i; j < m; ++j) {
                for (std::size_t p = 0; p < g.size(); ++p) pair[p] = basis.mode(i)[p] * basis.mode(j)[p];
                for (std::size_t k = j; k < m; ++k) {
                    for (std::size_t l = k; l < m; ++l) {
                        double v = 0.0;
                        if ((i + j + k + l) % 2 == 0) {
                            const auto& fk = basis.mode(k);
                            const auto& fl = basis.mode(l);
                            for (std::size_t p = 0; p < g.size(); ++p) v += pair[p] * fk[p] * fl[p];
                            v *= g.dx();
                        }
                        const auto s = static_cast<std::uint32_t>(t.values_.size());
                        t.values_.push_back(v);
                        std::array<std::size_t, 4> idx{i, j, k, l};
                        // Every distinct ordering of the quadruple points at the same slot.
                        std::sort(idx.begin(), idx.end());
                        do {
                            t.slot_[((idx[0] * m + idx[1]) * m + idx[2]) * m + idx[3]] = s;
                        } while (std::next_permutation(idx.begin(), idx.end()));
                    }
                }
            }
        }
        t.self_check();
        return t;
    }

private:
    // Closed forms: int phi0^4 = 1/sqrt(2 pi), int phi0^2 phi1^2 = 1/(2 sqrt(2 pi)).
    void self_check() const {
        const double a = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        const double e0 = std::abs((*this)(0, 0, 0, 0) - a);
        const double e1 = m_ > 1 ? std::abs((*this)(0, 0, 1, 1) - 0.5 * a) : 0.0;
        if (e0 > 1e-8 || e1 > 1e-8) {
            std::ostringstream msg;
            msg << "contact_tensor: quadrature self-check failed (errors " << e0 << ", " << e1 << "); refine the grid";
            throw AccuracyError(msg.str());
        }
    }

    std::size_t m_ = 0;
    std::vector<double> values_;
    std::vector<std::uint32_t> slot_;
};

inline InteractionTensor contact_tensor(const HOBasis& basis) { return InteractionTensor::from_basis(basis); }

}  // namespace polaron
