#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "bhlab/common.hpp"
#include "bhlab/fock.hpp"
#include "bhlab/operators.hpp"

namespace bhlab {

/// Sector state: normalized pure vector or unit-trace Hermitian PSD matrix.
class QuantumState {
  public:
    enum class Kind { Pure, Density };

    static QuantumState pure(FockBasisPtr basis, CVec psi) {
        if (psi.size() != basis->dim()) throw std::invalid_argument("state: vector has wrong dimension");
        double nrm = psi.norm();
        if (std::abs(nrm - 1.0) > 1e-10) throw std::invalid_argument("state: vector is not normalized");
        return QuantumState(std::move(basis), std::move(psi));
    }

    static QuantumState density(FockBasisPtr basis, CMat rho) {
        if (rho.rows() != basis->dim() || rho.cols() != basis->dim())
            throw std::invalid_argument("state: density matrix has wrong dimension");
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("state: density matrix is not Hermitian");
        if (std::abs(rho.trace().real() - 1.0) > 1e-10)
            throw std::invalid_argument("state: density matrix trace is not 1");
        Eigen::SelfAdjointEigenSolver<CMat> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("state: density matrix has negative eigenvalues");
        return QuantumState(std::move(basis), std::move(rho));
    }

    const FockBasisPtr& basis() const { return basis_; }
    Kind kind() const { return kind_; }
    bool is_pure() const { return kind_ == Kind::Pure; }
    const CVec& vector() const {
        if (!is_pure()) throw std::logic_error("state: not a pure state");
        return psi_;
    }

    /// Dense density matrix; |psi><psi| for pure states.
    CMat density_matrix() const {
        if (is_pure()) return psi_ * psi_.adjoint();
        return rho_;
    }

    /// <diag> = Tr[D rho] for a diagonal operator D, exact for both kinds.
    double expect_diagonal(const RVec& diag) const {
        if (is_pure()) {
            double v = 0;
            for (Eigen::Index i = 0; i < psi_.size(); ++i) v += diag[i] * std::norm(psi_[i]);
            return v;
        }
        double v = 0;
        for (Eigen::Index i = 0; i < rho_.rows(); ++i) v += diag[i] * rho_(i, i).real();
        return v;
    }

  private:
    QuantumState(FockBasisPtr basis, CVec psi)
        : basis_(std::move(basis)), kind_(Kind::Pure), psi_(std::move(psi)) {}
    QuantumState(FockBasisPtr basis, CMat rho)
        : basis_(std::move(basis)), kind_(Kind::Density), rho_(std::move(rho)) {}

    FockBasisPtr basis_;
    Kind kind_;
    CVec psi_;
    CMat rho_;
};

/// Basis vector at rank(occ).
inline QuantumState product_fock_state(const FockBasisPtr& basis, const OccupationVector& occ) {
    int idx;
    try {
        idx = basis->rank_of(occ);
    } catch (const std::out_of_range&) {
        throw std::invalid_argument("product_fock_state: occupation vector outside sector");
    }
    CVec psi = CVec::Zero(basis->dim());
    psi[idx] = 1.0;
    return QuantumState::pure(basis, std::move(psi));
}

/// Weighted superposition with amplitude(occ) proportional to
/// sqrt(prod_x w(x)^occ[x]); a single-site profile reduces to the product Fock
/// state and a uniform profile with N_tot = 1 gives <n_x> = 1/L.
inline QuantumState spread_state(const FockBasisPtr& basis, const std::function<double(int)>& profile) {
    const int L = basis->lattice()->num_sites();
    std::vector<double> w(static_cast<std::size_t>(L));
    bool any = false;
    for (int x = 0; x < L; ++x) {
        w[static_cast<std::size_t>(x)] = profile(x);
        if (w[static_cast<std::size_t>(x)] < 0) throw std::invalid_argument("spread_state: weights must be >= 0");
        if (w[static_cast<std::size_t>(x)] > 0) any = true;
    }
    if (!any) throw std::invalid_argument("spread_state: profile must not be all zero");

    CVec psi = CVec::Zero(basis->dim());
    for (int i = 0; i < basis->dim(); ++i) {
        const OccupationVector& occ = basis->state(i);
        double p = 1.0;
        for (int x = 0; x < L; ++x)
            for (int k = 0; k < occ[static_cast<std::size_t>(x)]; ++k) p *= w[static_cast<std::size_t>(x)];
        psi[i] = std::sqrt(p);
    }
    double nrm = psi.norm();
    if (nrm == 0.0) throw std::invalid_argument("spread_state: profile supports no sector state");
    psi /= nrm;
    return QuantumState::pure(basis, std::move(psi));
}

/// Tr[N_X^eta rho] via the diagonal of N_X raised to the real power eta.
inline double moment(const QuantumState& state, const SiteSet& X, double eta) {
    if (eta <= 0) throw std::invalid_argument("moment: eta must be > 0");
    DiagonalOperator nx = number_operator(state.basis(), X);
    RVec powered(nx.values.size());
    for (Eigen::Index i = 0; i < nx.values.size(); ++i)
        powered[i] = nx.values[i] == 0.0 ? 0.0 : std::pow(nx.values[i], eta);
    return state.expect_diagonal(powered);
}

/// Weight carried by basis states with some site at the cap n_max; a gauge of
/// how much the per-site-cap approximation is being exercised.
inline double cap_saturation_weight(const QuantumState& state) {
    const FockBasisPtr& basis = state.basis();
    RVec saturated = RVec::Zero(basis->dim());
    for (int i = 0; i < basis->dim(); ++i)
        for (int occ : basis->state(i))
            if (occ == basis->n_max()) {
                saturated[i] = 1.0;
                break;
            }
    return state.expect_diagonal(saturated);
}

struct ControlledDensityReport {
    bool passed = true;
    double worst_ratio = 0;
    int witness_site = -1;
    int witness_radius = 0;
    int witness_zeta = 0;
};

/// Sweeps Tr[N_{B_r(x)}^zeta rho] / (lambda r^d)^zeta over all sites, integer
/// radii up to the lattice diameter, and integer zeta <= eta_max.
inline ControlledDensityReport check_controlled_density(const QuantumState& state, double lambda,
                                                        double eta_max) {
    if (lambda <= 0) throw std::invalid_argument("check_controlled_density: lambda must be > 0");
    if (eta_max < 1) throw std::invalid_argument("check_controlled_density: eta_max must be >= 1");
    const LatticePtr& lat = state.basis()->lattice();
    const int d = lat->dimension();
    const int r_max = static_cast<int>(std::ceil(diameter(full_set(lat))));
    const int zeta_max = static_cast<int>(std::floor(eta_max));

    ControlledDensityReport rep;
    for (int x = 0; x < lat->num_sites(); ++x) {
        for (int r = 1; r <= r_max; ++r) {
            SiteSet B = ball(lat, x, static_cast<double>(r));
            for (int zeta = 1; zeta <= zeta_max; ++zeta) {
                double m = moment(state, B, static_cast<double>(zeta));
                double bound = std::pow(lambda * std::pow(static_cast<double>(r), d), zeta);
                double ratio = m / bound;
                if (ratio > rep.worst_ratio) {
                    rep.worst_ratio = ratio;
                    rep.witness_site = x;
                    rep.witness_radius = r;
                    rep.witness_zeta = zeta;
                }
            }
        }
    }
    rep.passed = rep.worst_ratio <= 1.0;
    return rep;
}

}  // namespace bhlab
