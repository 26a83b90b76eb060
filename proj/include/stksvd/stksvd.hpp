#pragma once

// Spatiotemporal discriminative KSVD: builds the label-consistency and
// spatiotemporal code targets, initializes the linear classifier W and code
// transform A by ridge regression, and trains (D, W, A) jointly by stacking
// them into one KSVD problem. Also the per-target atom selection rule.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stksvd/errors.hpp"
#include "stksvd/ksvd.hpp"
#include "stksvd/sparse_coding.hpp"

namespace stksvd {

// Per-atom provenance: which target the atom models and when/where the
// underlying sample was observed. Position is the bounding-box center.
struct AtomMeta {
  int class_label = 0;
  double time = 0.0;  // frame index
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct SampleMeta {
  double time = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct StksvdConfig {
  double kappa = 2.0;     // sparse-code (spatiotemporal) error weight
  double lambda = 4.0;    // classification error weight
  double xi = 1e-4;       // ridge regularization for W and A init
  double sigma_s = 10.0;  // spatiotemporal kernel scale (frames + pixels)
  int sparsity = 2;
  int iterations = 10;
  int atoms_per_target = 30;
  int recent_window = 5;  // frames of fresh samples offered to atom selection
  std::uint64_t seed = 0;
};

struct LabeledDictionary {
  Matrix atoms;                // N x K, unit columns
  std::vector<AtomMeta> meta;  // one entry per atom
};

struct StksvdModel {
  LabeledDictionary dictionary;
  Matrix classifier;        // W, c x K
  Matrix transform;         // A, K x K
  std::vector<int> classes;  // sorted class labels; row i of W <-> classes[i]
};

struct LabelMatrices {
  Matrix h;   // c x n, one-hot class indicator per signal
  Matrix q1;  // K x n, 1 iff atom and signal share a class
};

using ClassIndex = std::map<int, Index>;

inline ClassIndex make_class_index(const std::vector<int>& labels) {
  std::set<int> distinct(labels.begin(), labels.end());
  ClassIndex index;
  Index row = 0;
  for (int label : distinct) index[label] = row++;
  return index;
}

inline LabelMatrices build_label_matrices(const std::vector<int>& signal_labels,
                                          const std::vector<int>& atom_labels,
                                          const ClassIndex& class_index) {
  const Index c = static_cast<Index>(class_index.size());
  const Index n = static_cast<Index>(signal_labels.size());
  const Index k = static_cast<Index>(atom_labels.size());
  auto row_of = [&](int label) {
    auto it = class_index.find(label);
    if (it == class_index.end()) {
      throw UnknownLabel("build_label_matrices: label " + std::to_string(label) +
                         " missing from class index");
    }
    return it->second;
  };
  LabelMatrices out;
  out.h = Matrix::Zero(c, n);
  for (Index j = 0; j < n; ++j) out.h(row_of(signal_labels[static_cast<size_t>(j)]), j) = 1.0;
  out.q1 = Matrix::Zero(k, n);
  for (Index a = 0; a < k; ++a) {
    row_of(atom_labels[static_cast<size_t>(a)]);  // validate
    for (Index j = 0; j < n; ++j) {
      if (atom_labels[static_cast<size_t>(a)] == signal_labels[static_cast<size_t>(j)]) {
        out.q1(a, j) = 1.0;
      }
    }
  }
  return out;
}

// Spatiotemporal similarity kernel between atoms and training samples:
// theta = exp(-(|dt| + ||dp||) / sigma_s), entries in (0, 1].
inline Matrix build_spatiotemporal_matrix(const std::vector<AtomMeta>& atom_meta,
                                          const std::vector<SampleMeta>& signal_meta,
                                          double sigma_s) {
  if (!(sigma_s > 0.0)) {
    throw NonPositiveSigma("build_spatiotemporal_matrix: sigma_s = " + std::to_string(sigma_s));
  }
  const Index k = static_cast<Index>(atom_meta.size());
  const Index n = static_cast<Index>(signal_meta.size());
  Matrix qst(k, n);
  for (Index a = 0; a < k; ++a) {
    const AtomMeta& am = atom_meta[static_cast<size_t>(a)];
    for (Index j = 0; j < n; ++j) {
      const SampleMeta& sm = signal_meta[static_cast<size_t>(j)];
      const double dist = std::abs(am.time - sm.time) + (am.position - sm.position).norm();
      qst(a, j) = std::exp(-dist / sigma_s);
    }
  }
  return qst;
}

// Q = Q1 (elementwise*) Qst
inline Matrix build_discriminative_code(const Matrix& q1, const Matrix& qst) {
  if (q1.rows() != qst.rows() || q1.cols() != qst.cols()) {
    throw DimensionMismatch("build_discriminative_code: Q1 " + std::to_string(q1.rows()) +
                            "x" + std::to_string(q1.cols()) + " vs Qst " +
                            std::to_string(qst.rows()) + "x" + std::to_string(qst.cols()));
  }
  return q1.cwiseProduct(qst);
}

namespace detail {

// Ridge regression solving min ||Targets - M X||^2 + xi ||M||^2, i.e.
// M (X X^T + xi I) = Targets X^T. Returns M with one row per target row.
inline Matrix ridge_fit(const Matrix& codes, const Matrix& targets, double xi) {
  if (codes.cols() != targets.cols()) {
    throw DimensionMismatch("ridge_fit: X has " + std::to_string(codes.cols()) +
                            " signals, targets have " + std::to_string(targets.cols()));
  }
  if (xi < 0.0) throw Error("ridge_fit: negative regularization");
  const Index k = codes.rows();
  Matrix gram = codes * codes.transpose();
  gram.diagonal().array() += xi;
  const Matrix rhs = codes * targets.transpose();  // K x c
  if (xi == 0.0) {
    Eigen::FullPivLU<Matrix> lu(gram);
    if (!lu.isInvertible()) {
      throw SingularSystem("ridge_fit: X X^T singular with xi = 0");
    }
    return lu.solve(rhs).transpose();
  }
  Eigen::LDLT<Matrix> ldlt(gram);
  Matrix solved = ldlt.solve(rhs);
  if ((gram * solved - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) {
    // Near-singular despite the ridge; retry with a rank-revealing solve.
    Eigen::FullPivLU<Matrix> lu(gram);
    solved = lu.solve(rhs);
  }
  (void)k;
  return solved.transpose();
}

}  // namespace detail

// W = H X^T (X X^T + xi I)^-1, shape c x K, so that stage-1 scores are W x.
inline Matrix init_classifier(const Matrix& codes, const Matrix& labels, double xi) {
  return detail::ridge_fit(codes, labels, xi);
}

// A = Q X^T (X X^T + xi I)^-1, shape K x K.
inline Matrix init_transform(const Matrix& codes, const Matrix& q, double xi) {
  return detail::ridge_fit(codes, q, xi);
}

// Vertical stack Y' = (Y; sqrt(kappa) Q; sqrt(lambda) H). For any X,
// ||Y' - D' X||_F^2 = ||Y - D X||_F^2 + kappa ||Q - A X||_F^2 + lambda ||H - W X||_F^2
// when D' is the matching stack of (D; sqrt(kappa) A; sqrt(lambda) W).
inline Matrix stack_signals(const Matrix& y, const Matrix& q, const Matrix& h,
                            double kappa, double lambda) {
  if (y.cols() != q.cols() || y.cols() != h.cols()) {
    throw DimensionMismatch("stack_signals: column counts differ");
  }
  Matrix out(y.rows() + q.rows() + h.rows(), y.cols());
  out.topRows(y.rows()) = y;
  out.middleRows(y.rows(), q.rows()) = std::sqrt(kappa) * q;
  out.bottomRows(h.rows()) = std::sqrt(lambda) * h;
  return out;
}

inline Matrix stack_dictionary(const Matrix& d, const Matrix& a, const Matrix& w,
                               double kappa, double lambda) {
  if (d.cols() != a.cols() || d.cols() != w.cols()) {
    throw DimensionMismatch("stack_dictionary: column counts differ");
  }
  Matrix out(d.rows() + a.rows() + w.rows(), d.cols());
  out.topRows(d.rows()) = d;
  out.middleRows(d.rows(), a.rows()) = std::sqrt(kappa) * a;
  out.bottomRows(w.rows()) = std::sqrt(lambda) * w;
  return out;
}

// Joint training of (D, W, A). Initializes W and A by ridge regression on the
// codes of the starting dictionary, runs KSVD on the stacked system, then
// de-stacks: each returned dictionary atom is the Y-block of the learned
// stacked atom renormalized to unit length, and the W/A columns are the H/Q
// blocks divided by that same Y-block norm.
inline StksvdModel stksvd_train(const Matrix& signals, const std::vector<int>& signal_labels,
                                const std::vector<SampleMeta>& signal_meta,
                                const LabeledDictionary& d0, const StksvdConfig& cfg) {
  const Index n = signals.cols();
  const Index k = d0.atoms.cols();
  if (static_cast<Index>(signal_labels.size()) != n ||
      static_cast<Index>(signal_meta.size()) != n) {
    throw DimensionMismatch("stksvd_train: labels/meta size does not match signal count");
  }
  if (static_cast<Index>(d0.meta.size()) != k) {
    throw DimensionMismatch("stksvd_train: dictionary has " + std::to_string(k) +
                            " atoms but " + std::to_string(d0.meta.size()) + " meta entries");
  }
  if (!(cfg.kappa > 0.0) || !(cfg.lambda > 0.0) || !(cfg.xi > 0.0) || !(cfg.sigma_s > 0.0)) {
    throw Error("stksvd_train: kappa, lambda, xi, sigma_s must be positive");
  }

  std::vector<int> atom_labels;
  atom_labels.reserve(d0.meta.size());
  for (const AtomMeta& m : d0.meta) atom_labels.push_back(m.class_label);
  const ClassIndex class_index = make_class_index(atom_labels);
  for (int label : signal_labels) {
    if (class_index.find(label) == class_index.end()) {
      throw LabelCoverage("stksvd_train: signal class " + std::to_string(label) +
                          " has no dictionary atoms");
    }
  }

  const LabelMatrices lm = build_label_matrices(signal_labels, atom_labels, class_index);
  const Matrix qst = build_spatiotemporal_matrix(d0.meta, signal_meta, cfg.sigma_s);
  const Matrix q = build_discriminative_code(lm.q1, qst);

  const Matrix x0 = batch_code(d0.atoms, signals, cfg.sparsity);
  const Matrix w0 = init_classifier(x0, lm.h, cfg.xi);
  const Matrix a0 = init_transform(x0, q, cfg.xi);

  const Matrix stacked_signals = stack_signals(signals, q, lm.h, cfg.kappa, cfg.lambda);
  const Matrix stacked_dict = normalize_columns(
      stack_dictionary(d0.atoms, a0, w0, cfg.kappa, cfg.lambda)).first;

  KsvdConfig kcfg;
  kcfg.num_atoms = static_cast<int>(k);
  kcfg.sparsity = cfg.sparsity;
  kcfg.iterations = cfg.iterations;
  kcfg.init_strategy = InitStrategy::Provided;
  kcfg.seed = cfg.seed;
  const KsvdResult trained = ksvd_train(stacked_signals, kcfg, stacked_dict);

  const Index feature_dim = signals.rows();
  const Index c = lm.h.rows();
  StksvdModel model;
  model.dictionary.atoms = Matrix(feature_dim, k);
  model.dictionary.meta = d0.meta;
  model.transform = Matrix(k, k);
  model.classifier = Matrix(c, k);
  for (Index atom = 0; atom < k; ++atom) {
    const Vector y_block = trained.dictionary.col(atom).head(feature_dim);
    const double norm = std::max(y_block.norm(), kZeroColumnTol);
    model.dictionary.atoms.col(atom) = y_block / norm;
    model.transform.col(atom) = trained.dictionary.col(atom).segment(feature_dim, k) / norm;
    model.classifier.col(atom) = trained.dictionary.col(atom).tail(c) / norm;
  }
  model.classes.reserve(class_index.size());
  for (const auto& [label, row] : class_index) model.classes.push_back(label);
  return model;
}

// One dictionary candidate for a target: an existing atom or a fresh sample.
struct AtomSample {
  Vector feature;
  AtomMeta meta;
};

namespace detail {

inline bool canonical_before(const AtomSample& a, const AtomSample& b) {
  if (a.meta.time != b.meta.time) return a.meta.time < b.meta.time;
  const Index n = std::min(a.feature.size(), b.feature.size());
  for (Index i = 0; i < n; ++i) {
    if (a.feature(i) != b.feature(i)) return a.feature(i) < b.feature(i);
  }
  if (a.feature.size() != b.feature.size()) return a.feature.size() < b.feature.size();
  if (a.meta.position.x() != b.meta.position.x()) return a.meta.position.x() < b.meta.position.x();
  return a.meta.position.y() < b.meta.position.y();
}

inline double cosine(const Vector& a, const Vector& b) {
  const double denom = a.norm() * b.norm();
  return denom < kZeroColumnTol ? 0.0 : a.dot(b) / denom;
}

}  // namespace detail

// Keeps at most `atoms_per_target` of the pool existing-atoms + recent-samples,
// greedily evicting the most redundant member (highest max cosine similarity
// to any other survivor). Ties evict the older sample, then the higher
// canonical index. The pool is sorted canonically first, so the result does
// not depend on input order.
inline std::vector<AtomSample> select_atoms(const std::vector<AtomSample>& existing_atoms,
                                            const std::vector<AtomSample>& recent_samples,
                                            int atoms_per_target) {
  if (atoms_per_target < 1) {
    throw Error("select_atoms: atoms_per_target must be >= 1");
  }
  std::vector<AtomSample> pool;
  pool.reserve(existing_atoms.size() + recent_samples.size());
  pool.insert(pool.end(), existing_atoms.begin(), existing_atoms.end());
  pool.insert(pool.end(), recent_samples.begin(), recent_samples.end());
  std::sort(pool.begin(), pool.end(), detail::canonical_before);

  std::vector<bool> alive(pool.size(), true);
  size_t alive_count = pool.size();
  while (alive_count > static_cast<size_t>(atoms_per_target)) {
    size_t evict = 0;
    double evict_score = -2.0;
    bool have = false;
    for (size_t i = 0; i < pool.size(); ++i) {
      if (!alive[i]) continue;
      double redundancy = -2.0;
      for (size_t j = 0; j < pool.size(); ++j) {
        if (j == i || !alive[j]) continue;
        redundancy = std::max(redundancy,
                              detail::cosine(pool[i].feature, pool[j].feature));
      }
      if (!have || redundancy > evict_score + kOmpTieTol) {
        evict = i;
        evict_score = redundancy;
        have = true;
      } else if (std::abs(redundancy - evict_score) <= kOmpTieTol) {
        if (pool[i].meta.time < pool[evict].meta.time ||
            (pool[i].meta.time == pool[evict].meta.time && i > evict)) {
          evict = i;
          evict_score = redundancy;
        }
      }
    }
    alive[evict] = false;
    --alive_count;
  }

  std::vector<AtomSample> out;
  out.reserve(alive_count);
  for (size_t i = 0; i < pool.size(); ++i) {
    if (alive[i]) out.push_back(pool[i]);
  }
  return out;
}

}  // namespace stksvd
