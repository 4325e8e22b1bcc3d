#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "bhlab/common.hpp"
#include "bhlab/lattice.hpp"

namespace bhlab {

/// One occupation per lattice site; entries capped by n_max, summing to N_tot.
using OccupationVector = std::vector<int>;

/// Occupation basis of the fixed-N sector with per-site cap, enumerated in
/// lexicographic order. rank_of is the inverse of states()[i] via a
/// combinatorial counting table, O(L * n_max) per call.
class FockBasis {
  public:
    FockBasis(LatticePtr lat, int n_tot, int n_max)
        : lattice_(std::move(lat)), n_tot_(n_tot), n_max_(n_max) {
        const int L = lattice_->num_sites();
        if (n_tot < 0) throw std::invalid_argument("fock: N_tot must be >= 0");
        if (n_max < 1) throw std::invalid_argument("fock: n_max must be >= 1");
        if (static_cast<long long>(n_max) * L < n_tot)
            throw std::invalid_argument("fock: infeasible sector, N_tot > n_max * |Lambda|");

        // counts_[i][n] = number of capped occupation vectors on sites i..L-1 summing to n
        counts_.assign(static_cast<std::size_t>(L) + 1, std::vector<long long>(static_cast<std::size_t>(n_tot) + 1, 0));
        counts_[static_cast<std::size_t>(L)][0] = 1;
        for (int i = L - 1; i >= 0; --i)
            for (int n = 0; n <= n_tot; ++n) {
                long long c = 0;
                for (int v = 0; v <= std::min(n_max, n); ++v)
                    c += counts_[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(n - v)];
                counts_[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] = c;
            }

        states_.reserve(static_cast<std::size_t>(counts_[0][static_cast<std::size_t>(n_tot)]));
        OccupationVector occ(static_cast<std::size_t>(L), 0);
        enumerate(occ, 0, n_tot);
    }

    const LatticePtr& lattice() const { return lattice_; }
    int n_tot() const { return n_tot_; }
    int n_max() const { return n_max_; }
    int dim() const { return static_cast<int>(states_.size()); }
    const std::vector<OccupationVector>& states() const { return states_; }
    const OccupationVector& state(int i) const { return states_.at(static_cast<std::size_t>(i)); }

    int rank_of(const OccupationVector& occ) const {
        const int L = lattice_->num_sites();
        if (static_cast<int>(occ.size()) != L) throw std::out_of_range("fock: occupation vector has wrong length");
        long long rank = 0;
        int rem = n_tot_;
        for (int i = 0; i < L; ++i) {
            int v = occ[static_cast<std::size_t>(i)];
            if (v < 0 || v > n_max_ || v > rem) throw std::out_of_range("fock: occupation vector outside sector");
            for (int w = 0; w < v; ++w)
                rank += counts_[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(rem - w)];
            rem -= v;
        }
        if (rem != 0) throw std::out_of_range("fock: occupation vector outside sector");
        return static_cast<int>(rank);
    }

  private:
    void enumerate(OccupationVector& occ, int i, int rem) {
        const int L = lattice_->num_sites();
        if (i == L) {
            if (rem == 0) states_.push_back(occ);
            return;
        }
        // skip subtrees that cannot absorb the remaining particles
        if (counts_[static_cast<std::size_t>(i)][static_cast<std::size_t>(rem)] == 0) return;
        for (int v = 0; v <= std::min(n_max_, rem); ++v) {
            occ[static_cast<std::size_t>(i)] = v;
            enumerate(occ, i + 1, rem - v);
        }
        occ[static_cast<std::size_t>(i)] = 0;
    }

    LatticePtr lattice_;
    int n_tot_;
    int n_max_;
    std::vector<OccupationVector> states_;
    std::vector<std::vector<long long>> counts_;
};

using FockBasisPtr = std::shared_ptr<const FockBasis>;

inline FockBasisPtr enumerate_basis(LatticePtr lat, int n_tot, int n_max) {
    return std::make_shared<FockBasis>(std::move(lat), n_tot, n_max);
}

/// Matrix element of the capped hop b_x^dag b_y on |occ>: moves one particle
/// y -> x with amplitude sqrt((occ[x]+1) * occ[y]). Empty when annihilated by
/// b_y or by the cap (the capped b^dag kills maximal occupation, keeping the
/// assembled Hamiltonians exactly Hermitian on the capped space).
inline std::optional<std::pair<OccupationVector, double>> apply_hop(const FockBasis& basis,
                                                                    const OccupationVector& occ, int x,
                                                                    int y) {
    if (x == y) throw std::invalid_argument("apply_hop: sites must differ");
    int ny = occ[static_cast<std::size_t>(y)];
    int nx = occ[static_cast<std::size_t>(x)];
    if (ny < 1 || nx >= basis.n_max()) return std::nullopt;
    OccupationVector out = occ;
    out[static_cast<std::size_t>(y)] -= 1;
    out[static_cast<std::size_t>(x)] += 1;
    double amp = std::sqrt(static_cast<double>(nx + 1) * static_cast<double>(ny));
    return std::make_pair(std::move(out), amp);
}

}  // namespace bhlab
