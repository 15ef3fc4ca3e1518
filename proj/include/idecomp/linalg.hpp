#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace idecomp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical thresholds. `rank` is relative to the largest singular value;
/// the others are absolute operator-norm bounds.
struct Tolerance {
  double rank = 1e-10;
  double orth = 1e-10;
  double proj = 1e-8;
  double eq = 1e-8;
  double pd = 1e-12;

  void validate() const {
    if (!(rank > 0 && orth > 0 && proj > 0 && eq > 0 && pd > 0)) throw LinalgError("tolerances must be positive");
  }
};

inline constexpr std::size_t kDefaultMaxAmbientDim = 4096;

/// Ambient-dimension cap for generated spaces; the ID_MAX_DIM environment
/// variable overrides the default.
inline std::size_t ambient_dim_cap() {
  const char* env = std::getenv("ID_MAX_DIM");
  if (env == nullptr || *env == '\0') return kDefaultMaxAmbientDim;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || v == 0) throw LinalgError(std::string("ID_MAX_DIM must be a positive integer, got '") + env + "'");
  return static_cast<std::size_t>(v);
}

/// Spectral norm.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() <= 64 && m.cols() <= 64) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// R^n with the inner product <x, y> = x^T G y.
///
/// Internally everything works in Cholesky coordinates y = L^T x, where
/// G = L L^T, so that the gram inner product becomes the dot product.
class AmbientSpace {
 public:
  AmbientSpace() : AmbientSpace(0) {}
  explicit AmbientSpace(Eigen::Index dim) : AmbientSpace(Matrix::Identity(dim, dim), true) {}
  explicit AmbientSpace(const Matrix& gram, const Tolerance& tol = {}) : AmbientSpace(gram, false, tol) {}

  static AmbientSpace euclidean(Eigen::Index dim) { return AmbientSpace(dim); }

  Eigen::Index dim() const { return data_->gram.rows(); }
  const Matrix& gram() const { return data_->gram; }
  bool is_euclidean() const { return data_->identity; }
  /// Upper-triangular L^T with G = L L^T.
  const Matrix& chol_upper() const { return data_->lt; }

  /// x -> L^T x
  Matrix to_chol(const Matrix& x) const { return is_euclidean() ? x : Matrix(data_->lt * x); }
  /// y -> L^{-T} y
  Matrix from_chol(const Matrix& y) const {
    return is_euclidean() ? y : Matrix(data_->lt.triangularView<Eigen::Upper>().solve(y));
  }

  double inner(const Vector& x, const Vector& y) const { return x.dot(data_->gram * y); }
  double norm(const Vector& x) const { return std::sqrt(std::max(0.0, inner(x, x))); }

  /// Operator norm of a linear map given in ambient coordinates, measured in
  /// the gram norm: || L^T M L^{-T} ||_2.
  double operator_norm(const Matrix& m) const {
    if (is_euclidean()) return spectral_norm(m);
    const Matrix right = data_->lt.transpose().triangularView<Eigen::Lower>().solve(m.transpose()).transpose();
    return spectral_norm(data_->lt * right);
  }

  bool same_as(const AmbientSpace& other) const {
    if (data_ == other.data_) return true;
    return dim() == other.dim() && gram() == other.gram();
  }

 private:
  struct Data {
    Matrix gram;
    Matrix lt;  // upper-triangular L^T
    bool identity = true;
  };

  AmbientSpace(const Matrix& gram, bool identity, const Tolerance& tol = {}) {
    if (gram.rows() != gram.cols()) throw LinalgError("gram matrix must be square");
    auto data = std::make_shared<Data>();
    data->gram = gram;
    data->identity = identity || gram.isIdentity(0.0);
    if (data->identity) {
      data->lt = Matrix::Identity(gram.rows(), gram.cols());
    } else {
      if (!gram.isApprox(gram.transpose(), 1e-12)) throw LinalgError("gram matrix must be symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
      if (gram.rows() > 0 && !(eig.eigenvalues()(0) > tol.pd))
        throw LinalgError("gram matrix is not positive definite (smallest eigenvalue " +
                          std::to_string(eig.eigenvalues()(0)) + ")");
      Eigen::LLT<Matrix> llt(gram);
      if (llt.info() != Eigen::Success) throw LinalgError("Cholesky factorization of gram failed");
      data->lt = llt.matrixU();
    }
    data_ = std::move(data);
  }

  std::shared_ptr<const Data> data_;
};

/// Subspace of an AmbientSpace carried by a gram-orthonormal frame.
class Subspace {
 public:
  Subspace() = default;

  const AmbientSpace& ambient() const { return ambient_; }
  Eigen::Index dim() const { return basis_.cols(); }
  Eigen::Index ambient_dim() const { return ambient_.dim(); }

  /// Columns orthonormal with respect to the gram.
  Matrix frame() const { return ambient_.from_chol(basis_); }
  /// Euclidean-orthonormal columns in Cholesky coordinates.
  const Matrix& chol_basis() const { return basis_; }

  static Subspace zero(const AmbientSpace& amb) { return Subspace(amb, Matrix(amb.dim(), 0)); }
  static Subspace whole(const AmbientSpace& amb) { return Subspace(amb, Matrix::Identity(amb.dim(), amb.dim())); }

  /// Wraps an already-orthonormal Cholesky-coordinate basis. No rank check.
  static Subspace from_chol_basis(const AmbientSpace& amb, Matrix basis) { return Subspace(amb, std::move(basis)); }

 private:
  Subspace(AmbientSpace amb, Matrix basis) : ambient_(std::move(amb)), basis_(std::move(basis)) {}

  AmbientSpace ambient_;
  Matrix basis_;
};

namespace detail {

inline void require_same(const AmbientSpace& a, const AmbientSpace& b) {
  if (!a.same_as(b)) throw LinalgError("subspaces live in different ambient spaces");
}

// Orthonormal basis of the column span of y (Euclidean coordinates).
inline Matrix orthonormal_range(const Matrix& y, double rel_tol) {
  if (y.cols() == 0 || y.rows() == 0) return Matrix(y.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd;
  if (y.rows() <= 64 && y.cols() <= 64) {
    svd.compute(y, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    if (s(0) > 0)
      while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
    return svd.matrixU().leftCols(r);
  }
  Eigen::BDCSVD<Matrix> big(y, Eigen::ComputeThinU);
  const auto& s = big.singularValues();
  Eigen::Index r = 0;
  if (s(0) > 0)
    while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
  return big.matrixU().leftCols(r);
}

}  // namespace detail

/// Orthonormal frame for the column span of `generators` (ambient coordinates).
inline Subspace span(const AmbientSpace& amb, const Matrix& generators, const Tolerance& tol = {}) {
  if (generators.rows() != amb.dim())
    throw LinalgError("generator rows (" + std::to_string(generators.rows()) + ") do not match ambient dimension (" +
                      std::to_string(amb.dim()) + ")");
  return Subspace::from_chol_basis(amb, detail::orthonormal_range(amb.to_chol(generators), tol.rank));
}

/// Orthogonal projector, stored in ambient coordinates: P = Q Q^T G.
class Projector {
 public:
  Projector(AmbientSpace amb, Matrix m) : ambient_(std::move(amb)), matrix_(std::move(m)) {}

  const AmbientSpace& ambient() const { return ambient_; }
  const Matrix& matrix() const { return matrix_; }

  Vector apply(const Vector& v) const { return matrix_ * v; }

  double idempotence_defect() const { return ambient_.operator_norm(matrix_ * matrix_ - matrix_); }
  double self_adjoint_defect() const {
    const Matrix& g = ambient_.gram();
    return spectral_norm(g * matrix_ - matrix_.transpose() * g);
  }

 private:
  AmbientSpace ambient_;
  Matrix matrix_;
};

inline Projector projector(const Subspace& s) {
  const Matrix& y = s.chol_basis();
  const AmbientSpace& amb = s.ambient();
  if (amb.is_euclidean()) return Projector(amb, y * y.transpose());
  // P = Q Q^T G = L^{-T} Y Y^T L^T
  return Projector(amb, amb.from_chol(y * (y.transpose() * amb.chol_upper())));
}

inline Projector zero_projector(const AmbientSpace& amb) { return Projector(amb, Matrix::Zero(amb.dim(), amb.dim())); }

/// Closed span of a collection (finite dimension: the plain sum).
inline Subspace join(const std::vector<Subspace>& ss, const Tolerance& tol = {}) {
  if (ss.empty()) throw LinalgError("join of an empty list needs an ambient; use join(ambient, list)");
  const AmbientSpace& amb = ss.front().ambient();
  Eigen::Index cols = 0;
  for (const auto& s : ss) {
    detail::require_same(amb, s.ambient());
    cols += s.dim();
  }
  if (ss.size() == 1) return ss.front();
  Matrix stacked(amb.dim(), cols);
  Eigen::Index c = 0;
  for (const auto& s : ss) {
    stacked.middleCols(c, s.dim()) = s.chol_basis();
    c += s.dim();
  }
  return Subspace::from_chol_basis(amb, detail::orthonormal_range(stacked, tol.rank));
}

inline Subspace join(const AmbientSpace& amb, const std::vector<Subspace>& ss, const Tolerance& tol = {}) {
  if (ss.empty()) return Subspace::zero(amb);
  detail::require_same(amb, ss.front().ambient());
  return join(ss, tol);
}

inline Subspace join(const Subspace& a, const Subspace& b, const Tolerance& tol = {}) { return join({a, b}, tol); }

/// Orthogonal complement with respect to the gram.
inline Subspace complement(const Subspace& s) {
  const AmbientSpace& amb = s.ambient();
  const Eigen::Index n = amb.dim();
  const Eigen::Index k = s.dim();
  if (k == 0) return Subspace::whole(amb);
  if (k == n) return Subspace::zero(amb);
  Eigen::HouseholderQR<Matrix> qr(s.chol_basis());
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return Subspace::from_chol_basis(amb, q.rightCols(n - k));
}

/// a ∩ b, computed as the complement of the join of the complements.
inline Subspace intersect(const Subspace& a, const Subspace& b, const Tolerance& tol = {}) {
  detail::require_same(a.ambient(), b.ambient());
  return complement(join(complement(a), complement(b), tol));
}

/// ||P_a - P_b|| <= tol.eq
inline double projector_distance(const Subspace& a, const Subspace& b) {
  detail::require_same(a.ambient(), b.ambient());
  // Projectors are gram-self-adjoint, so the Cholesky-coordinate forms give the operator norm directly.
  const Matrix pa = a.chol_basis() * a.chol_basis().transpose();
  const Matrix pb = b.chol_basis() * b.chol_basis().transpose();
  return spectral_norm(pa - pb);
}

inline bool subspace_eq(const Subspace& a, const Subspace& b, const Tolerance& tol = {}) {
  return projector_distance(a, b) <= tol.eq;
}

/// a ⊇ b, decided by ||P_a P_b - P_b|| <= tol.eq
inline bool contains(const Subspace& a, const Subspace& b, const Tolerance& tol = {}) {
  detail::require_same(a.ambient(), b.ambient());
  if (b.dim() == 0) return true;
  // ||(I - P_a) Q_b|| equals ||P_a P_b - P_b|| in Cholesky coordinates.
  const Matrix& qa = a.chol_basis();
  const Matrix& qb = b.chol_basis();
  return spectral_norm(qb - qa * (qa.transpose() * qb)) <= tol.eq;
}

/// ||P_a P_b||, zero iff the subspaces are orthogonal.
inline double overlap(const Subspace& a, const Subspace& b) {
  detail::require_same(a.ambient(), b.ambient());
  if (a.dim() == 0 || b.dim() == 0) return 0.0;
  return spectral_norm(a.chol_basis().transpose() * b.chol_basis());
}

}  // namespace idecomp
