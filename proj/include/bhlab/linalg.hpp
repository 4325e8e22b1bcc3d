#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "bhlab/common.hpp"

namespace bhlab {

/// exp(i theta H) for Hermitian H, via eigendecomposition.
inline CMat expm_i_hermitian(const CMat& H, double theta) {
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    if (es.info() != Eigen::Success) throw numerical_failure("expm: eigendecomposition failed");
    const auto& W = es.eigenvectors();
    CVec phases(H.rows());
    for (Eigen::Index k = 0; k < H.rows(); ++k)
        phases[k] = std::exp(cplx(0.0, theta * es.eigenvalues()[k]));
    return W * phases.asDiagonal() * W.adjoint();
}

/// Largest singular value.
inline double spectral_norm(const CMat& M) {
    if (M.rows() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(M);
    return svd.singularValues()[0];
}

/// Sum of singular values.
inline double trace_norm_dense(const CMat& M) {
    if (M.rows() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(M);
    return svd.singularValues().sum();
}

}  // namespace bhlab
