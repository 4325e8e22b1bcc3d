#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "bhlab/common.hpp"
#include "bhlab/fock.hpp"
#include "bhlab/lattice.hpp"
#include "bhlab/linalg.hpp"
#include "bhlab/operators.hpp"
#include "bhlab/states.hpp"

namespace bhlab {

enum class PropagatorMethod { Auto, Dense, Krylov };

struct PropagatorOptions {
    PropagatorMethod method = PropagatorMethod::Auto;
    int krylov_dim = 30;
    double tol = 1e-10;          // per-substep Krylov tolerance
    int dense_threshold = 512;   // Auto switches to Krylov above this dimension
    long max_substeps = 1000000;
};

namespace detail {

struct LanczosStep {
    CVec result;
    double error_estimate;
};

// One Lanczos step exp(-i dt H) v with full reorthogonalization. The error
// estimate is the standard residual proxy |beta_m * last component|.
inline LanczosStep lanczos_exp_step(const SpMat& H, const CVec& v, double dt, int m) {
    const Eigen::Index dim = v.size();
    m = std::min<Eigen::Index>(m, dim);
    const double vnorm = v.norm();
    if (vnorm == 0.0) return {CVec::Zero(dim), 0.0};

    std::vector<CVec> V;
    V.reserve(static_cast<std::size_t>(m));
    std::vector<double> alpha, beta;  // beta[j] couples V[j] and V[j+1]
    V.push_back(v / vnorm);
    bool breakdown = false;

    for (int j = 0; j < m; ++j) {
        CVec w = H * V[static_cast<std::size_t>(j)];
        double a = std::real(V[static_cast<std::size_t>(j)].dot(w));
        alpha.push_back(a);
        w -= a * V[static_cast<std::size_t>(j)];
        if (j > 0) w -= beta[static_cast<std::size_t>(j) - 1] * V[static_cast<std::size_t>(j) - 1];
        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass)
            for (const CVec& q : V) w -= q.dot(w) * q;
        double b = w.norm();
        if (j + 1 == m) {
            beta.push_back(b);
            break;
        }
        if (b < 1e-14) {  // invariant subspace, step is exact
            breakdown = true;
            m = j + 1;
            beta.push_back(0.0);
            break;
        }
        beta.push_back(b);
        V.push_back(w / b);
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        T(j, j) = alpha[static_cast<std::size_t>(j)];
        if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    CVec small = CVec::Zero(m);
    for (int j = 0; j < m; ++j) {
        cplx acc = 0;
        for (int k = 0; k < m; ++k) {
            cplx phase = std::exp(cplx(0.0, -dt * es.eigenvalues()[k]));
            acc += es.eigenvectors()(j, k) * phase * es.eigenvectors()(0, k);
        }
        small[j] = acc;
    }

    CVec out = CVec::Zero(dim);
    for (int j = 0; j < m; ++j) out += small[j] * V[static_cast<std::size_t>(j)];
    out *= vnorm;

    // residual-style proxy: coupling to the first discarded Lanczos vector
    double err = breakdown ? 0.0 : std::abs(beta.back()) * std::abs(small[m - 1]) * vnorm;
    return {std::move(out), err};
}

}  // namespace detail

/// Unitary time evolution of sector states: dense eigendecomposition at small
/// dimension, Lanczos with adaptive substeps above. The generator must be
/// Hermitian; unitarity is checked on every applied step.
class Propagator {
  public:
    Propagator(SparseOperator H, PropagatorOptions opts = {}) : H_(std::move(H)), opts_(opts) {}

    const SparseOperator& generator() const { return H_; }
    const PropagatorOptions& options() const { return opts_; }

    bool uses_dense() const {
        if (opts_.method == PropagatorMethod::Dense) return true;
        if (opts_.method == PropagatorMethod::Krylov) return false;
        return H_.dim() <= opts_.dense_threshold;
    }

    /// exp(-i t H) psi.
    CVec apply(const CVec& psi, double t) const {
        if (psi.size() != H_.dim()) throw std::invalid_argument("propagator: dimension mismatch");
        CVec out = uses_dense() ? apply_dense(psi, t) : apply_krylov(psi, t);
        double defect = std::abs(out.norm() - psi.norm());
        if (defect > 1e-8)
            throw numerical_failure("propagator: unitarity defect " + std::to_string(defect));
        return out;
    }

  private:
    CVec apply_dense(const CVec& psi, double t) const {
        if (!eig_) {
            eig_.emplace(H_.dense());
            if (eig_->info() != Eigen::Success) throw numerical_failure("propagator: eigendecomposition failed");
        }
        CVec y = eig_->eigenvectors().adjoint() * psi;
        for (Eigen::Index k = 0; k < y.size(); ++k) y[k] *= std::exp(cplx(0.0, -t * eig_->eigenvalues()[k]));
        return eig_->eigenvectors() * y;
    }

    CVec apply_krylov(const CVec& psi, double t) const {
        if (t == 0.0) return psi;
        const double sign = t > 0 ? 1.0 : -1.0;
        double remaining = std::abs(t);
        double dt = remaining;
        CVec state = psi;
        long steps = 0;
        while (remaining > 0) {
            dt = std::min(dt, remaining);
            auto step = detail::lanczos_exp_step(H_.mat, state, sign * dt, opts_.krylov_dim);
            if (step.error_estimate <= opts_.tol) {
                state = std::move(step.result);
                remaining -= dt;
                dt *= 2;
            } else {
                dt /= 2;
            }
            if (++steps > opts_.max_substeps)
                throw numerical_failure("propagator: Krylov did not converge within max substeps (tol=" +
                                        std::to_string(opts_.tol) + ", dim=" + std::to_string(H_.dim()) + ")");
        }
        return state;
    }

    SparseOperator H_;
    PropagatorOptions opts_;
    mutable std::optional<Eigen::SelfAdjointEigenSolver<CMat>> eig_;
};

/// exp(-i t H) applied to a pure state.
inline QuantumState evolve_state(const SparseOperator& H, const QuantumState& psi, double t,
                                 const PropagatorOptions& opts = {}) {
    if (H.basis != psi.basis()) throw std::invalid_argument("evolve_state: basis mismatch");
    if (!psi.is_pure()) throw std::invalid_argument("evolve_state: expects a pure state");
    Propagator prop(H, opts);
    CVec out = prop.apply(psi.vector(), t);
    out /= out.norm();  // remove rounding drift before the constructor's norm check
    return QuantumState::pure(psi.basis(), std::move(out));
}

/// Heisenberg evolution exp(i t H) A exp(-i t H), dense.
inline CMat heisenberg(const SparseOperator& H, const CMat& A, double t, int dense_threshold = 2048) {
    if (H.dim() > dense_threshold)
        throw std::length_error(
            "heisenberg: dimension exceeds the dense threshold; evolve states and take "
            "expectation values instead");
    if (A.rows() != H.dim() || A.cols() != H.dim())
        throw std::invalid_argument("heisenberg: operator dimension mismatch");
    CMat U = expm_i_hermitian(H.dense(), t);
    return U * A * U.adjoint();
}

/// Projector onto occupations <= nu on every site of Y.
inline DiagonalOperator projector(const FockBasisPtr& basis, const SiteSet& Y, int nu) {
    detail::check_same_lattice(*basis, Y, "projector");
    if (nu < 0) throw std::invalid_argument("projector: nu must be >= 0");
    if (nu > basis->n_max())
        throw std::invalid_argument("projector: nu exceeds n_max, projector would be the identity");
    RVec vals = RVec::Ones(basis->dim());
    for (int i = 0; i < basis->dim(); ++i) {
        const OccupationVector& occ = basis->state(i);
        for (int x : Y.members)
            if (occ[static_cast<std::size_t>(x)] > nu) {
                vals[i] = 0.0;
                break;
            }
    }
    return DiagonalOperator{basis, std::move(vals)};
}

/// Pi A Pi for the occupation projector on (Y, nu).
inline SparseOperator truncate(const SparseOperator& A, const SiteSet& Y, int nu) {
    DiagonalOperator P = projector(A.basis, Y, nu);
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int k = 0; k < A.mat.outerSize(); ++k)
        for (SpMat::InnerIterator it(A.mat, k); it; ++it)
            if (P.values[it.row()] != 0.0 && P.values[it.col()] != 0.0)
                trip.emplace_back(it.row(), it.col(), it.value());
    return SparseOperator{A.basis, detail::from_triplets(A.basis->dim(), trip)};
}

inline CMat truncate_dense(const CMat& A, const DiagonalOperator& P) {
    CMat out = A;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            if (P.values[i] == 0.0 || P.values[j] == 0.0) out(i, j) = 0.0;
    return out;
}

/// Truncated Heisenberg dynamics generated by H-bar = Pi H Pi.
inline CMat truncated_dynamics(const FockBasisPtr& basis, const SiteSet& Y, int nu,
                               const HamiltonianParams& params, const CMat& A, double t,
                               int dense_threshold = 2048) {
    SparseOperator H = build_hamiltonian(basis, full_set(basis->lattice()), params);
    SparseOperator Hbar = truncate(H, Y, nu);
    return heisenberg(Hbar, A, t, dense_threshold);
}

/// Restricted dynamics generated by H_{X[R]}.
inline CMat restricted_dynamics(const FockBasisPtr& basis, const SiteSet& X, double R,
                                const HamiltonianParams& params, const CMat& A, double t,
                                int dense_threshold = 2048) {
    SiteSet XR = enlarge(X, R);
    SparseOperator H = build_hamiltonian(basis, XR, params);
    return heisenberg(H, A, t, dense_threshold);
}

/// Verifies the interaction-picture factorization U_{0,t} = e^{itH-bar} e^{-itV-bar}
/// against the time-ordered integration of U'(t) = i U(t) T-int(t) with
/// T-int(t) = e^{itV-bar} T-bar e^{-itV-bar}; returns the operator-norm residual.
inline double interaction_picture_check(const FockBasisPtr& basis, const SiteSet& Y, int nu,
                                        const HamiltonianParams& params, double t) {
    SiteSet all = full_set(basis->lattice());
    DiagonalOperator P = projector(basis, Y, nu);
    SparseOperator Tbar = truncate(build_hopping(basis, all, params.J), Y, nu);
    DiagonalOperator V = build_potential(basis, all, params.potential);
    RVec vbar(basis->dim());
    for (int i = 0; i < basis->dim(); ++i) vbar[i] = P.values[i] * V.values[i];

    CMat Hbar = Tbar.dense();
    for (int i = 0; i < basis->dim(); ++i) Hbar(i, i) += vbar[i];

    CMat direct = expm_i_hermitian(Hbar, t);
    for (Eigen::Index j = 0; j < direct.cols(); ++j) direct.col(j) *= std::exp(cplx(0.0, -t * vbar[j]));

    if (t == 0.0) return spectral_norm(direct - CMat::Identity(basis->dim(), basis->dim()));

    const CMat T0 = Tbar.dense();
    auto t_int = [&](double s) {
        CMat m = T0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                if (m(r, c) != cplx(0, 0)) m(r, c) *= std::exp(cplx(0.0, s * (vbar[r] - vbar[c])));
        return m;
    };
    auto rhs = [&](double s, const CMat& U) -> CMat {
        CMat Ti = t_int(s);
        return cplx(0.0, 1.0) * (U * Ti);
    };
    auto integrate = [&](long n) {
        CMat U = CMat::Identity(basis->dim(), basis->dim());
        double h = t / static_cast<double>(n);
        for (long k = 0; k < n; ++k) {
            double s = k * h;
            CMat k1 = rhs(s, U);
            CMat k2 = rhs(s + h / 2, U + (h / 2) * k1);
            CMat k3 = rhs(s + h / 2, U + (h / 2) * k2);
            CMat k4 = rhs(s + h, U + h * k3);
            U += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        return U;
    };

    // step-doubled RK4 until self-consistent
    double scale = 1.0 + T0.cwiseAbs().maxCoeff() * basis->dim();
    for (int i = 0; i < basis->dim(); ++i) scale = std::max(scale, 1.0 + 2 * std::abs(vbar[i]));
    long n = std::max<long>(64, static_cast<long>(std::ceil(8.0 * std::abs(t) * scale)));
    CMat U_prev = integrate(n);
    for (int round = 0; round < 8; ++round) {
        n *= 2;
        CMat U_next = integrate(n);
        if ((U_next - U_prev).cwiseAbs().maxCoeff() <= 1e-10) return spectral_norm(direct - U_next);
        U_prev = std::move(U_next);
    }
    throw numerical_failure("interaction_picture_check: integrator did not self-converge");
}

}  // namespace bhlab
