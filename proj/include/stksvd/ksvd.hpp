#pragma once

// Baseline KSVD dictionary learning: alternate OMP sparse coding with
// per-atom rank-1 SVD updates over the restricted residual.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stksvd/errors.hpp"
#include "stksvd/sparse_coding.hpp"

namespace stksvd {

enum class InitStrategy { FromSignals, Provided };

struct KsvdConfig {
  int num_atoms = 1;
  int sparsity = 1;
  int iterations = 10;
  InitStrategy init_strategy = InitStrategy::FromSignals;
  std::uint64_t seed = 0;
};

struct AtomUpdate {
  Vector atom;        // unit norm, sign-fixed
  Vector coefficients;  // full row of length n, zeros outside the prior support
};

struct KsvdResult {
  Matrix dictionary;
  Matrix codes;
  // reconstruction_error after the OMP coding pass of each iteration
  std::vector<double> coding_errors;
  // reconstruction_error after each full (code + atom-sweep) iteration
  std::vector<double> iteration_errors;
};

namespace detail {

// Largest-magnitude entry positive; resolves the SVD sign ambiguity.
inline void fix_atom_sign(Vector& atom, Vector& row) {
  Index imax = 0;
  atom.cwiseAbs().maxCoeff(&imax);
  if (atom(imax) < 0.0) {
    atom = -atom;
    row = -row;
  }
}

}  // namespace detail

// Rank-1 update of atom k against the residual restricted to the signals that
// use it. Coefficients change only on the existing support of row k.
inline AtomUpdate update_atom(const Matrix& dict, const Matrix& codes,
                              const Matrix& signals, Index k) {
  if (k < 0 || k >= dict.cols()) {
    throw IndexOutOfRange("update_atom: atom " + std::to_string(k) + " of " +
                          std::to_string(dict.cols()));
  }
  std::vector<Index> using_signals;
  for (Index j = 0; j < codes.cols(); ++j) {
    if (codes(k, j) != 0.0) using_signals.push_back(j);
  }
  if (using_signals.empty()) {
    throw UnusedAtom("update_atom: atom " + std::to_string(k) + " is unused");
  }

  const Index m = static_cast<Index>(using_signals.size());
  Matrix restricted(dict.rows(), m);
  for (Index i = 0; i < m; ++i) {
    const Index j = using_signals[static_cast<size_t>(i)];
    restricted.col(i) = signals.col(j) - dict * codes.col(j) + dict.col(k) * codes(k, j);
  }

  Eigen::JacobiSVD<Matrix> svd(restricted, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector atom = svd.matrixU().col(0);
  Vector row_restricted = svd.singularValues()(0) * svd.matrixV().col(0);
  detail::fix_atom_sign(atom, row_restricted);

  Vector row = Vector::Zero(codes.cols());
  for (Index i = 0; i < m; ++i) row(using_signals[static_cast<size_t>(i)]) = row_restricted(i);
  return {std::move(atom), std::move(row)};
}

namespace detail {

inline Matrix init_from_signals(const Matrix& signals, int num_atoms, std::uint64_t seed) {
  const Index n = signals.cols();
  std::mt19937_64 rng(seed);
  std::vector<Index> pool(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j) pool[static_cast<size_t>(j)] = j;
  // Partial Fisher-Yates: first num_atoms entries are a uniform sample
  // of distinct columns.
  Matrix d0(signals.rows(), num_atoms);
  for (int i = 0; i < num_atoms; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(pick(rng))]);
    d0.col(i) = signals.col(pool[static_cast<size_t>(i)]);
  }
  return normalize_columns(d0).first;
}

// Replacement for a dead atom: the signal worst reconstructed by the current
// model, normalized and sign-fixed. Returns false if no usable signal exists.
inline bool replace_unused_atom(Matrix& dict, const Matrix& codes, const Matrix& signals,
                                Index k) {
  Index worst = -1;
  double worst_err = -1.0;
  for (Index j = 0; j < signals.cols(); ++j) {
    const double err = (signals.col(j) - dict * codes.col(j)).squaredNorm();
    if (err > worst_err && signals.col(j).norm() >= kZeroColumnTol) {
      worst_err = err;
      worst = j;
    }
  }
  if (worst < 0) return false;
  Vector atom = signals.col(worst) / signals.col(worst).norm();
  Vector dummy = Vector::Zero(1);
  fix_atom_sign(atom, dummy);
  dict.col(k) = atom;
  return true;
}

// Atoms that have collapsed onto each other (|<d_i, d_j>| > 0.99) carry no
// extra information; the higher-indexed one is replaced by the currently
// worst-reconstructed signal, as in the reference KSVD toolbox.
inline void replace_duplicate_atoms(Matrix& dict, const Matrix& codes,
                                    const Matrix& signals) {
  Vector column_errors(signals.cols());
  for (Index j = 0; j < signals.cols(); ++j) {
    column_errors(j) = (signals.col(j) - dict * codes.col(j)).squaredNorm();
  }
  for (Index j = 1; j < dict.cols(); ++j) {
    double coherence = 0.0;
    for (Index i = 0; i < j; ++i) {
      coherence = std::max(coherence, std::abs(dict.col(i).dot(dict.col(j))));
    }
    if (coherence <= 0.99) continue;
    Index worst = -1;
    double worst_err = -1.0;
    for (Index s = 0; s < signals.cols(); ++s) {
      if (column_errors(s) > worst_err && signals.col(s).norm() >= kZeroColumnTol) {
        worst_err = column_errors(s);
        worst = s;
      }
    }
    if (worst < 0) break;
    Vector atom = signals.col(worst) / signals.col(worst).norm();
    Vector dummy = Vector::Zero(1);
    fix_atom_sign(atom, dummy);
    dict.col(j) = atom;
    column_errors(worst) = -1.0;  // one replacement per signal per pass
  }
}

}  // namespace detail

// Alternating KSVD. `d0` is required (and used) only with
// InitStrategy::Provided; its columns must be unit norm.
inline KsvdResult ksvd_train(const Matrix& signals, const KsvdConfig& cfg,
                             const std::optional<Matrix>& d0 = std::nullopt) {
  const Index n = signals.cols();
  const int k = cfg.num_atoms;
  if (k < 1 || cfg.sparsity < 1 || cfg.sparsity > k || cfg.iterations < 1) {
    throw SparsityOutOfRange("ksvd_train: invalid config (K=" + std::to_string(k) +
                             ", T=" + std::to_string(cfg.sparsity) + ", iterations=" +
                             std::to_string(cfg.iterations) + ")");
  }
  if (!signals.allFinite()) throw Error("ksvd_train: signals contain non-finite values");

  Matrix dict;
  if (cfg.init_strategy == InitStrategy::FromSignals) {
    if (n < k) {
      throw TooFewSignals("ksvd_train: " + std::to_string(n) + " signals for " +
                          std::to_string(k) + " atoms");
    }
    dict = detail::init_from_signals(signals, k, cfg.seed);
  } else {
    if (!d0.has_value()) throw Error("ksvd_train: InitStrategy::Provided requires d0");
    if (d0->rows() != signals.rows() || d0->cols() != k) {
      throw DimensionMismatch("ksvd_train: d0 is " + std::to_string(d0->rows()) + "x" +
                              std::to_string(d0->cols()) + ", expected " +
                              std::to_string(signals.rows()) + "x" + std::to_string(k));
    }
    dict = *d0;
  }

  KsvdResult result;
  result.coding_errors.reserve(static_cast<size_t>(cfg.iterations));
  result.iteration_errors.reserve(static_cast<size_t>(cfg.iterations));
  Matrix codes;

  for (int it = 0; it < cfg.iterations; ++it) {
    if (it > 0) detail::replace_duplicate_atoms(dict, codes, signals);
    codes = batch_code(dict, signals, cfg.sparsity);
    result.coding_errors.push_back(reconstruction_error(dict, codes, signals));

    for (Index atom = 0; atom < k; ++atom) {
      const bool used = (codes.row(atom).array() != 0.0).any();
      if (!used) {
        detail::replace_unused_atom(dict, codes, signals, atom);
        continue;
      }
      AtomUpdate upd = update_atom(dict, codes, signals, atom);
      dict.col(atom) = upd.atom;
      codes.row(atom) = upd.coefficients.transpose();
    }
    result.iteration_errors.push_back(reconstruction_error(dict, codes, signals));
  }

  result.dictionary = std::move(dict);
  result.codes = std::move(codes);
  return result;
}

}  // namespace stksvd
