#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "quasicontract/metric.hpp"

namespace quasicontract::linalg {

inline void require_square_finite(const Eigen::MatrixXd& A, const char* where) {
    if (A.rows() == 0 || A.rows() != A.cols()) {
        throw std::invalid_argument(std::string(where) + ": matrix must be square");
    }
    if (!A.allFinite()) {
        throw std::invalid_argument(std::string(where) +
                                    ": matrix entries must be finite");
    }
}

/// Operator norm induced by the given vector norm: max column sum for l1,
/// largest singular value for l2, max row sum for linf.
inline double induced_norm(const Eigen::MatrixXd& A, NormKind kind) {
    require_square_finite(A, "induced_norm");
    switch (kind) {
        case NormKind::L1: return A.cwiseAbs().colwise().sum().maxCoeff();
        case NormKind::LInf: return A.cwiseAbs().rowwise().sum().maxCoeff();
        case NormKind::L2: {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
            return svd.singularValues()(0);
        }
    }
    throw std::logic_error("induced_norm: unreachable");
}

/// Matrix exponential by scaling and squaring with a truncated series.
/// The scaled argument has norm <= 1/2, so the series converges fast; terms
/// are added until they fall below 1e-13 relative to the running sum.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
    require_square_finite(A, "expm");
    const auto n = A.rows();

    const double norm = induced_norm(A, NormKind::LInf);
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const Eigen::MatrixXd B = A / std::pow(2.0, squarings);

    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    constexpr int max_terms = 64;
    for (int k = 1; k <= max_terms; ++k) {
        term = (term * B) / static_cast<double>(k);
        sum += term;
        const double term_norm = term.cwiseAbs().maxCoeff();
        const double sum_norm = sum.cwiseAbs().maxCoeff();
        if (term_norm <= 1e-13 * sum_norm) break;
        if (k == max_terms) {
            throw std::runtime_error("expm: series did not converge");
        }
    }

    Eigen::MatrixXd result = sum;
    for (int s = 0; s < squarings; ++s) {
        result = result * result;
    }
    return result;
}

}  // namespace quasicontract::linalg
