// Copyright 2026 The rubriclearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RUBRICLEARN_CODING_RATE_HPP
#define RUBRICLEARN_CODING_RATE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rubriclearn/error.hpp"

namespace rubriclearn {

inline constexpr double kUnitNormTolerance = 1e-9;

struct CodingRateParams {
  double epsilon = 0.5;
  // Added to the diagonal once if the first factorization fails.
  double jitter = 1e-10;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw Error(ErrorKind::input, "coding rate epsilon must be a positive finite number");
    if (!(jitter >= 0.0) || jitter > 1e-6)
      throw Error(ErrorKind::input, "coding rate jitter must lie in [0, 1e-6]");
  }
};

/// Scales `v` to unit Euclidean norm. Rejects non-finite or zero vectors.
inline void normalize_unit(Eigen::Ref<Eigen::VectorXd> v) {
  if (!v.allFinite()) throw Error(ErrorKind::input, "embedding contains non-finite entries");
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorKind::input, "embedding has zero norm");
  v /= norm;
  if (std::abs(v.norm() - 1.0) > kUnitNormTolerance)
    throw Error(ErrorKind::input, "embedding could not be normalized to unit length");
}

inline bool is_unit(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.allFinite() && std::abs(v.norm() - 1.0) <= kUnitNormTolerance;
}

/// Column-stacked unit-norm embeddings (d x n). Every column is normalized
/// on the way in, so the coding rate is comparable across backends.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(Eigen::Index dim = 0) : data_(dim, 0) {
    if (dim < 0) throw Error(ErrorKind::input, "embedding dimension must be non-negative");
  }

  /// Normalizes each column of `m`.
  static EmbeddingMatrix from_matrix(Eigen::MatrixXd m) {
    EmbeddingMatrix out;
    if (m.cols() > 0 && m.rows() == 0) throw Error(ErrorKind::input, "embedding dimension must be positive");
    for (Eigen::Index j = 0; j < m.cols(); ++j) normalize_unit(m.col(j));
    out.data_ = std::move(m);
    return out;
  }

  static EmbeddingMatrix from_columns(std::span<const std::vector<double>> columns, Eigen::Index dim = -1) {
    if (dim < 0) dim = columns.empty() ? 0 : static_cast<Eigen::Index>(columns.front().size());
    Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (static_cast<Eigen::Index>(columns[j].size()) != dim)
        throw Error(ErrorKind::input, "embedding column " + std::to_string(j) + " has length " +
                                          std::to_string(columns[j].size()) + ", expected " + std::to_string(dim));
      m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(columns[j].data(), dim);
    }
    return from_matrix(std::move(m));
  }

  void append(Eigen::VectorXd column) {
    if (data_.cols() == 0 && data_.rows() == 0) data_.resize(column.size(), 0);
    if (column.size() != data_.rows())
      throw Error(ErrorKind::input, "dimension mismatch: column has length " + std::to_string(column.size()) +
                                        ", matrix has dim " + std::to_string(data_.rows()));
    normalize_unit(column);
    data_.conservativeResize(Eigen::NoChange, data_.cols() + 1);
    data_.col(data_.cols() - 1) = column;
  }

  Eigen::Index dim() const { return data_.rows(); }
  Eigen::Index size() const { return data_.cols(); }
  bool empty() const { return data_.cols() == 0; }
  const Eigen::MatrixXd& matrix() const { return data_; }
  Eigen::VectorXd column(Eigen::Index j) const { return data_.col(j); }

 private:
  Eigen::MatrixXd data_;
};

/// Which Gram matrix the log-determinant is taken over. Both give the same
/// value (Sylvester); `automatic` picks the smaller one.
enum class GramForm { automatic, columns, rows };

namespace detail {

/// Cholesky factor of a symmetric positive-definite matrix, retrying once
/// with `jitter` on the diagonal.
inline Eigen::LLT<Eigen::MatrixXd> factor_spd(Eigen::MatrixXd m, double jitter) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    if (jitter > 0.0) {
      m.diagonal().array() += jitter;
      llt.compute(m);
    }
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::numerical, "Cholesky factorization failed");
  }
  return llt;
}

inline double logdet_from(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline double logdet_spd(Eigen::MatrixXd m, double jitter) { return logdet_from(factor_spd(std::move(m), jitter)); }

inline double coding_rate_raw(const Eigen::Ref<const Eigen::MatrixXd>& e, const CodingRateParams& params,
                              GramForm form) {
  const Eigen::Index n = e.cols();
  const Eigen::Index d = e.rows();
  if (n == 0) return 0.0;
  if (!e.allFinite()) throw Error(ErrorKind::input, "embedding matrix contains non-finite entries");
  const double scale = 1.0 / (params.epsilon * params.epsilon * static_cast<double>(n));
  if (form == GramForm::automatic) form = n <= d ? GramForm::columns : GramForm::rows;
  Eigen::MatrixXd m;
  if (form == GramForm::columns) {
    m = Eigen::MatrixXd::Identity(n, n);
    m.selfadjointView<Eigen::Lower>().rankUpdate(e.transpose(), scale);
  } else {
    m = Eigen::MatrixXd::Identity(d, d);
    m.selfadjointView<Eigen::Lower>().rankUpdate(e, scale);
  }
  m = m.selfadjointView<Eigen::Lower>();
  const double rate = 0.5 * logdet_spd(std::move(m), params.jitter);
  if (!std::isfinite(rate)) throw Error(ErrorKind::numerical, "coding rate is not finite");
  return rate < 0.0 ? 0.0 : rate;
}

}  // namespace detail

/// C(E, eps) = 1/2 log det(I + E^T E / (eps^2 n)), natural log. Zero for an
/// empty matrix.
inline double coding_rate(const EmbeddingMatrix& e, const CodingRateParams& params = {},
                          GramForm form = GramForm::automatic) {
  params.validate();
  return detail::coding_rate_raw(e.matrix(), params, form);
}

/// C(base + candidate) - C(base), by direct recomputation. Can be negative:
/// the 1/n factor makes C non-monotone.
inline double marginal_gain(const EmbeddingMatrix& base, const Eigen::VectorXd& candidate,
                            const CodingRateParams& params = {}) {
  params.validate();
  if (!base.empty() && candidate.size() != base.dim())
    throw Error(ErrorKind::input, "dimension mismatch: candidate has length " + std::to_string(candidate.size()) +
                                      ", base has dim " + std::to_string(base.dim()));
  if (!is_unit(candidate)) throw Error(ErrorKind::input, "candidate embedding is not unit norm");
  Eigen::MatrixXd grown(candidate.size(), base.size() + 1);
  if (!base.empty()) grown.leftCols(base.size()) = base.matrix();
  grown.col(base.size()) = candidate;
  return detail::coding_rate_raw(grown, params, GramForm::automatic) -
         detail::coding_rate_raw(base.matrix(), params, GramForm::automatic);
}

/// Marginal gains of appending each column of `candidates` to `base`, sharing
/// one factorization across all candidates. With A = I + a*G over the base
/// (a evaluated at the grown size), det of the bordered matrix is
/// det(A) * s where s is the Schur complement of the new row/column.
inline std::vector<double> batch_marginal_gains(const Eigen::Ref<const Eigen::MatrixXd>& base,
                                                const Eigen::Ref<const Eigen::MatrixXd>& candidates,
                                                const CodingRateParams& params = {}) {
  params.validate();
  const Eigen::Index k = base.cols();
  const Eigen::Index d = candidates.rows();
  if (k > 0 && base.rows() != d) throw Error(ErrorKind::input, "dimension mismatch between base and candidates");
  std::vector<double> gains(static_cast<std::size_t>(candidates.cols()));
  if (candidates.cols() == 0) return gains;

  const double before = detail::coding_rate_raw(base, params, GramForm::automatic);
  const double a = 1.0 / (params.epsilon * params.epsilon * static_cast<double>(k + 1));
  const Eigen::VectorXd sq_norms = candidates.colwise().squaredNorm().transpose();

  Eigen::VectorXd schur;
  double logdet_base = 0.0;
  if (k == 0) {
    schur = (1.0 + a * sq_norms.array()).matrix();
  } else if (k <= d) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(k, k);
    m.noalias() += a * (base.transpose() * base);
    const auto llt = detail::factor_spd(std::move(m), params.jitter);
    logdet_base = detail::logdet_from(llt);
    Eigen::MatrixXd y = base.transpose() * candidates;
    llt.matrixL().solveInPlace(y);
    schur = (1.0 + a * sq_norms.array() - a * a * y.colwise().squaredNorm().transpose().array()).matrix();
  } else {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    m.noalias() += a * (base * base.transpose());
    const auto llt = detail::factor_spd(std::move(m), params.jitter);
    logdet_base = detail::logdet_from(llt);
    Eigen::MatrixXd y = candidates;
    llt.matrixL().solveInPlace(y);
    schur = (1.0 + a * y.colwise().squaredNorm().transpose().array()).matrix();
  }

  for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
    const double s = schur(j);
    if (s > 0.0 && std::isfinite(s)) {
      gains[static_cast<std::size_t>(j)] = 0.5 * (logdet_base + std::log(s)) - before;
    } else {
      // Cancellation wiped out the complement; recompute directly.
      Eigen::MatrixXd grown(d, k + 1);
      if (k > 0) grown.leftCols(k) = base;
      grown.col(k) = candidates.col(j);
      gains[static_cast<std::size_t>(j)] = detail::coding_rate_raw(grown, params, GramForm::automatic) - before;
    }
  }
  return gains;
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_CODING_RATE_HPP
