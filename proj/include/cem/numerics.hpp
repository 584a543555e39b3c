// Copyright 2026 The CEM Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense positive-definite covariance handling and Gaussian densities.
//
// Everything here is templated on the scalar type; the rest of the library
// instantiates it with double.

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cem/error.hpp"

namespace cem {

inline constexpr double kDefaultRidge = 1e-6;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetric positive (semi-)definite covariance in either diagonal or full
/// form. A ridge is added to the diagonal before any factorization or log
/// determinant; `trace` ignores it.
template <typename Scalar = double>
class Covariance {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  static Covariance diagonal(Vector entries,
                             Scalar ridge = Scalar(kDefaultRidge)) {
    if (ridge < Scalar(0)) {
      throw Error(ErrorKind::kInvalidArgument, "ridge must be nonnegative");
    }
    for (Eigen::Index i = 0; i < entries.size(); ++i) {
      if (!(entries[i] >= Scalar(0)) || !std::isfinite(entries[i])) {
        throw Error(ErrorKind::kNonPositiveDefinite,
                    "diagonal covariance entries must be finite and >= 0");
      }
    }
    Covariance c;
    c.ridge_ = ridge;
    c.repr_ = Diag{std::move(entries)};
    return c;
  }

  static Covariance isotropic(Eigen::Index dim, Scalar variance,
                              Scalar ridge = Scalar(0)) {
    return diagonal(Vector::Constant(dim, variance), ridge);
  }

  /// Factorizes `matrix + ridge * I`; throws NonPositiveDefinite when the
  /// matrix is not symmetric or the Cholesky factorization fails.
  static Covariance full(const Matrix& matrix,
                         Scalar ridge = Scalar(kDefaultRidge)) {
    if (matrix.rows() != matrix.cols()) {
      throw Error(ErrorKind::kShapeMismatch, "covariance must be square");
    }
    if (ridge < Scalar(0)) {
      throw Error(ErrorKind::kInvalidArgument, "ridge must be nonnegative");
    }
    const Scalar scale = std::max(Scalar(1), matrix.cwiseAbs().maxCoeff());
    if (!matrix.allFinite() ||
        (matrix - matrix.transpose()).cwiseAbs().maxCoeff() >
            Scalar(1e-10) * scale) {
      throw Error(ErrorKind::kNonPositiveDefinite,
                  "covariance must be finite and symmetric");
    }
    Matrix shifted = matrix;
    shifted.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kNonPositiveDefinite,
                  "Cholesky factorization failed");
    }
    Covariance c;
    c.ridge_ = ridge;
    c.repr_ = Full{matrix, llt.matrixL()};
    return c;
  }

  Eigen::Index dim() const {
    return is_diagonal() ? std::get<Diag>(repr_).entries.size()
                         : std::get<Full>(repr_).matrix.rows();
  }
  bool is_diagonal() const { return std::holds_alternative<Diag>(repr_); }
  Scalar ridge() const { return ridge_; }

  /// Diagonal entries without the ridge (works for both representations).
  Vector diagonal_entries() const {
    if (is_diagonal()) return std::get<Diag>(repr_).entries;
    return std::get<Full>(repr_).matrix.diagonal();
  }

  /// Dense matrix without the ridge.
  Matrix dense() const {
    if (is_diagonal()) {
      return std::get<Diag>(repr_).entries.asDiagonal();
    }
    return std::get<Full>(repr_).matrix;
  }

  /// Lower Cholesky factor of the ridged matrix.
  Matrix factor() const {
    if (is_diagonal()) {
      return (std::get<Diag>(repr_).entries.array() + ridge_)
          .sqrt()
          .matrix()
          .asDiagonal();
    }
    return std::get<Full>(repr_).lower;
  }

  /// Returns `this + shift * I`, keeping representation and ridge.
  Covariance plus_identity(Scalar shift) const {
    if (is_diagonal()) {
      return diagonal(std::get<Diag>(repr_).entries.array() + shift, ridge_);
    }
    Matrix m = std::get<Full>(repr_).matrix;
    m.diagonal().array() += shift;
    return full(m, ridge_);
  }

 private:
  struct Diag {
    Vector entries;
  };
  struct Full {
    Matrix matrix;
    Matrix lower;
  };

  Covariance() = default;

  Scalar ridge_ = Scalar(0);
  std::variant<Diag, Full> repr_;
};

template <typename Scalar>
Scalar logdet(const Covariance<Scalar>& c) {
  if (c.is_diagonal()) {
    const auto shifted = (c.diagonal_entries().array() + c.ridge()).eval();
    if ((shifted <= Scalar(0)).any()) {
      throw Error(ErrorKind::kNonPositiveDefinite,
                  "singular diagonal covariance (add a ridge)");
    }
    return shifted.log().sum();
  }
  return Scalar(2) * c.factor().diagonal().array().log().sum();
}

template <typename Scalar>
Scalar trace(const Covariance<Scalar>& c) {
  return c.diagonal_entries().sum();
}

template <typename Scalar>
Scalar gaussian_logpdf(const Eigen::Ref<const VectorX<Scalar>>& x,
                       const Eigen::Ref<const VectorX<Scalar>>& mean,
                       const Covariance<Scalar>& c) {
  if (x.size() != mean.size() || x.size() != c.dim()) {
    throw Error(ErrorKind::kShapeMismatch, "gaussian_logpdf dimensions");
  }
  const Scalar d = static_cast<Scalar>(x.size());
  const Scalar log_two_pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  const VectorX<Scalar> r = x - mean;
  Scalar maha;
  if (c.is_diagonal()) {
    const auto var = (c.diagonal_entries().array() + c.ridge()).eval();
    if ((var <= Scalar(0)).any()) {
      throw Error(ErrorKind::kNonPositiveDefinite,
                  "singular diagonal covariance (add a ridge)");
    }
    maha = (r.array().square() / var).sum();
  } else {
    const MatrixX<Scalar> lower = c.factor();
    const VectorX<Scalar> w =
        lower.template triangularView<Eigen::Lower>().solve(r);
    maha = w.squaredNorm();
  }
  return Scalar(-0.5) * (d * log_two_pi + logdet(c) + maha);
}

/// Draws one sample from N(mean, c) using the ridged factor.
template <typename Scalar, typename Rng>
VectorX<Scalar> sample_gaussian(const VectorX<Scalar>& mean,
                                const Covariance<Scalar>& c, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  VectorX<Scalar> n(mean.size());
  for (Eigen::Index i = 0; i < n.size(); ++i) n[i] = normal(rng);
  if (c.is_diagonal()) {
    return mean +
           ((c.diagonal_entries().array() + c.ridge()).sqrt() * n.array())
               .matrix();
  }
  return mean + c.factor() * n;
}

/// log(sum(exp(v))) without overflow.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.derived().array() - m).exp().sum());
}

}  // namespace cem
