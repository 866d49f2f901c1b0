#pragma once

#include "invmetric/core.hpp"

#include <Eigen/Eigenvalues>

namespace invmetric {

// d x d Hermitian matrix with cached eigen-decomposition (descending order).
class HermitianForm {
 public:
  HermitianForm() = default;
  explicit HermitianForm(const CMat& m) {
    if (m.rows() != m.cols()) throw Error(ErrorCode::invalid_argument, "HermitianForm: non-square matrix");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale)
      throw Error(ErrorCode::invalid_argument, "HermitianForm: matrix is not Hermitian");
    mat_ = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(mat_);
    const auto d = mat_.rows();
    values_.resize(d);
    vectors_.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      values_[i] = es.eigenvalues()[d - 1 - i];
      vectors_.col(i) = es.eigenvectors().col(d - 1 - i);
    }
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const CMat& matrix() const { return mat_; }
  // sigma_1 >= ... >= sigma_d
  const RVec& singular_values() const { return values_; }
  const CMat& eigenvectors() const { return vectors_; }
  double sigma(int k) const { return values_[k - 1]; }  // 1-based
  double min_eigenvalue() const { return values_[values_.size() - 1]; }
  double max_eigenvalue() const { return values_[0]; }

  // g(u, v) = u^T H conj(v)
  cplx operator()(const CVec& u, const CVec& v) const { return (u.transpose() * mat_ * v.conjugate())(0, 0); }
  double norm2(const CVec& v) const { return (*this)(v, v).real(); }

  // Orthonormal basis of the q-plane minimizing the form, i.e. realizing
  // sigma_{d-q+1}. Since g(u, u) = x^H H x with x = conj(u), the directions are
  // conjugated eigenvectors.
  CMat minimizing_subspace(int q) const { return vectors_.rightCols(q).conjugate(); }

 private:
  CMat mat_;
  RVec values_;
  CMat vectors_;
};

inline RVec singular_values(const HermitianForm& h) { return h.singular_values(); }

}  // namespace invmetric
