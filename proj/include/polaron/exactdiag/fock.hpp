#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"

namespace polaron {

/// Number of ways to put n bosons into m modes, C(n + m - 1, n). Saturates
/// at the largest unsigned long long instead of overflowing.
inline unsigned long long bosonic_dimension(std::size_t n, std::size_t m) {
    if (m == 0) return n == 0 ? 1 : 0;
    unsigned long long c = 1;
    const std::size_t k = std::min(n, m - 1);
    for (std::size_t i = 1; i <= k; ++i) {
        const unsigned long long num = n + m - 1 - k + i;
        if (c > std::numeric_limits<unsigned long long>::max() / num) return std::numeric_limits<unsigned long long>::max();
        c = c * num / i;
    }
    return c;
}

/// Occupation-number basis of N_B bosons in M oscillator modes, times the
/// M modes of the single impurity. Full index = bath_index * M + impurity_mode.
/// Bath states are ordered lexicographically from (N, 0, ..., 0) downwards.
class FockBasis {
public:
    static constexpr unsigned long long kDefaultGuard = 5'000'000;

    static FockBasis build(std::size_t n_bath, std::size_t n_modes, unsigned long long dim_guard = kDefaultGuard) {
        if (n_modes == 0) throw ConfigError("fock basis: need at least one mode");
        const unsigned long long bath = bosonic_dimension(n_bath, n_modes);
        const unsigned long long total =
            bath > std::numeric_limits<unsigned long long>::max() / n_modes ? std::numeric_limits<unsigned long long>::max() : bath * n_modes;
        if (total > dim_guard) {
            throw SizeError("fock basis: dimension " + std::to_string(total) + " for N_B = " + std::to_string(n_bath) +
                                ", M = " + std::to_string(n_modes) + " exceeds the guard " + std::to_string(dim_guard),
                            total);
        }
        FockBasis b;
        b.n_bath_ = n_bath;
        b.n_modes_ = n_modes;
        b.states_.reserve(static_cast<std::size_t>(bath) * n_modes);
        std::vector<std::uint8_t> occ(n_modes, 0);
        if (n_bath > 255) throw ConfigError("fock basis: at most 255 bath particles");
        occ[0] = static_cast<std::uint8_t>(n_bath);
        // Walk the compositions of N_B in descending lexicographic order.
        for (;;) {
            b.states_.insert(b.states_.end(), occ.begin(), occ.end());
            std::size_t k = n_modes - 1;
            while (k > 0 && occ[k - 1] == 0) --k;
            if (k == 0) break;
            // Move one particle from mode k-1 into mode k, gathering everything after it there.
            --occ[k - 1];
            std::size_t tail = 0;
            for (std::size_t j = k; j < n_modes; ++j) {
                tail += occ[j];
                occ[j] = 0;
            }
            occ[k] = static_cast<std::uint8_t>(tail + 1);
        }
        b.counts_.assign((n_bath + 1) * (n_modes + 1), 0);
        for (std::size_t n = 0; n <= n_bath; ++n)
            for (std::size_t m = 0; m <= n_modes; ++m) b.counts_[n * (n_modes + 1) + m] = bosonic_dimension(n, m);
        return b;
    }

    std::size_t n_bath() const { return n_bath_; }
    std::size_t n_modes() const { return n_modes_; }
    std::size_t bath_dim() const { return states_.size() / n_modes_; }
    std::size_t total_dim() const { return bath_dim() * n_modes_; }

    /// Occupations of bath state `b`.
    const std::uint8_t* occupations(std::size_t b) const { return states_.data() + b * n_modes_; }

    /// Inverse of occupations(): rank in the descending lexicographic order.
    std::size_t index(const std::uint8_t* occ) const {
        std::size_t rank = 0;
        std::size_t left = n_bath_;
        for (std::size_t k = 0; k + 1 < n_modes_; ++k) {
            // States with more particles in mode k come first.
            for (std::size_t m = occ[k] + 1; m <= left; ++m) rank += count(left - m, n_modes_ - k - 1);
            left -= occ[k];
        }
        return rank;
    }

    std::size_t index(const std::vector<std::uint8_t>& occ) const {
        if (occ.size() != n_modes_) throw UsageError("fock basis: occupation vector has the wrong length");
        return index(occ.data());
    }

    static std::size_t full_index(std::size_t bath_index, std::size_t impurity_mode, std::size_t n_modes) {
        return bath_index * n_modes + impurity_mode;
    }

private:
    std::size_t count(std::size_t n, std::size_t m) const { return static_cast<std::size_t>(counts_[n * (n_modes_ + 1) + m]); }

    std::size_t n_bath_ = 0;
    std::size_t n_modes_ = 0;
    std::vector<std::uint8_t> states_;
    std::vector<unsigned long long> counts_;
};

inline FockBasis build_fock_basis(std::size_t n_bath, std::size_t n_modes, unsigned long long dim_guard = FockBasis::kDefaultGuard) {
    return FockBasis::build(n_bath, n_modes, dim_guard);
}

}  // namespace polaron
