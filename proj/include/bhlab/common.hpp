#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bhlab {

inline constexpr const char* kVersion = "0.1.0";

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
// row-compressed, sorted column indices; assembly order is deterministic
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// Thrown when an iterative routine fails to reach its tolerance.
struct numerical_failure : std::runtime_error {
    explicit numerical_failure(const std::string& what) : std::runtime_error(what) {}
};

// FNV-1a, used to stamp outputs with a config fingerprint.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace bhlab
