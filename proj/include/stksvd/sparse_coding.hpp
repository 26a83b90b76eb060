#pragma once

// Dense sparse-coding primitives: column normalization, Orthogonal Matching
// Pursuit with a full least-squares re-solve per iteration, and Frobenius
// reconstruction error.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "stksvd/errors.hpp"

namespace stksvd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kZeroColumnTol = 1e-12;
inline constexpr double kOmpResidualTol = 1e-10;
inline constexpr double kOmpTieTol = 1e-12;
inline constexpr double kSingularValueTol = 1e-10;

// Rescales every column to unit Euclidean norm. The returned norms satisfy
// m = normalized * diag(norms).
inline std::pair<Matrix, Vector> normalize_columns(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  Vector norms(m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    const double n = m.col(c).norm();
    if (n < kZeroColumnTol) {
      throw ZeroColumn("normalize_columns: column " + std::to_string(c) +
                       " has near-zero norm " + std::to_string(n));
    }
    norms(c) = n;
    out.col(c) = m.col(c) / n;
  }
  return {std::move(out), std::move(norms)};
}

namespace detail {

// Least squares on the selected support via normal equations; falls back to a
// pseudo-inverse when the Gram submatrix is singular.
inline Vector solve_support(const Matrix& dict, const std::vector<Index>& support,
                            const Vector& y) {
  const Index s = static_cast<Index>(support.size());
  Matrix sub(dict.rows(), s);
  for (Index i = 0; i < s; ++i) sub.col(i) = dict.col(support[static_cast<size_t>(i)]);
  const Matrix gram = sub.transpose() * sub;
  const Vector rhs = sub.transpose() * y;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() == Eigen::Success) {
    Vector coeffs = llt.solve(rhs);
    // Guard against a Cholesky that "succeeded" on a near-singular Gram.
    if ((gram * coeffs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm())) return coeffs;
  }
  Eigen::JacobiSVD<Matrix> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kSingularValueTol);
  return svd.solve(rhs);
}

}  // namespace detail

// Classic OMP: greedily selects at most `sparsity` atoms, re-solving the
// least-squares problem on the whole support each iteration. Returns a dense
// K-vector with nonzeros only on the selected support. Stops early when the
// residual norm drops below kOmpResidualTol. Atom-selection ties (absolute
// correlations equal within kOmpTieTol) go to the lower index.
inline Vector omp(const Matrix& dict, const Vector& y, int sparsity) {
  const Index n = dict.rows();
  const Index k = dict.cols();
  if (y.size() != n) {
    throw DimensionMismatch("omp: signal has " + std::to_string(y.size()) +
                            " rows, dictionary has " + std::to_string(n));
  }
  if (sparsity < 1 || sparsity > k || sparsity > n) {
    throw SparsityOutOfRange("omp: sparsity " + std::to_string(sparsity) +
                             " not in [1, min(" + std::to_string(k) + ", " +
                             std::to_string(n) + ")]");
  }

  Vector code = Vector::Zero(k);
  Vector residual = y;
  std::vector<Index> support;
  std::vector<bool> selected(static_cast<size_t>(k), false);
  support.reserve(static_cast<size_t>(sparsity));

  for (int step = 0; step < sparsity; ++step) {
    if (residual.norm() < kOmpResidualTol) break;
    const Vector corr = dict.transpose() * residual;
    Index best = -1;
    double best_abs = -1.0;
    for (Index j = 0; j < k; ++j) {
      if (selected[static_cast<size_t>(j)]) continue;
      const double a = std::abs(corr(j));
      if (a > best_abs + kOmpTieTol) {
        best_abs = a;
        best = j;
      }
    }
    if (best < 0) break;
    selected[static_cast<size_t>(best)] = true;
    support.push_back(best);

    const Vector coeffs = detail::solve_support(dict, support, y);
    residual = y;
    for (size_t i = 0; i < support.size(); ++i) residual -= coeffs(static_cast<Index>(i)) * dict.col(support[i]);

    code.setZero();
    for (size_t i = 0; i < support.size(); ++i) code(support[i]) = coeffs(static_cast<Index>(i));
  }
  return code;
}

// Column-wise OMP. Column j of the result equals omp(dict, signals.col(j), sparsity).
inline Matrix batch_code(const Matrix& dict, const Matrix& signals, int sparsity) {
  if (signals.rows() != dict.rows()) {
    throw DimensionMismatch("batch_code: signals have " + std::to_string(signals.rows()) +
                            " rows, dictionary has " + std::to_string(dict.rows()));
  }
  Matrix codes(dict.cols(), signals.cols());
  for (Index j = 0; j < signals.cols(); ++j) {
    try {
      codes.col(j) = omp(dict, signals.col(j), sparsity);
    } catch (const Error& e) {
      throw Error("batch_code: column " + std::to_string(j) + ": " + e.what());
    }
  }
  return codes;
}

// Squared Frobenius norm of Y - D X.
inline double reconstruction_error(const Matrix& dict, const Matrix& codes,
                                   const Matrix& signals) {
  if (dict.cols() != codes.rows() || dict.rows() != signals.rows() ||
      codes.cols() != signals.cols()) {
    throw DimensionMismatch("reconstruction_error: incompatible shapes D " +
                            std::to_string(dict.rows()) + "x" + std::to_string(dict.cols()) +
                            ", X " + std::to_string(codes.rows()) + "x" +
                            std::to_string(codes.cols()) + ", Y " +
                            std::to_string(signals.rows()) + "x" +
                            std::to_string(signals.cols()));
  }
  return (signals - dict * codes).squaredNorm();
}

}  // namespace stksvd
