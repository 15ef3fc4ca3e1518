#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "idecomp/interaction.hpp"
#include "idecomp/linalg.hpp"
#include "idecomp/poset.hpp"

namespace idecomp {

class ChaosError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Centered Gaussian law on R^I for a finite site list I.
class GaussianModel {
 public:
  GaussianModel(std::vector<std::string> sites, Matrix covariance, const Tolerance& tol = {})
      : sites_(std::move(sites)), cov_(std::move(covariance)) {
    const auto n = static_cast<Eigen::Index>(sites_.size());
    if (n == 0) throw ChaosError("gaussian model needs at least one site");
    if (cov_.rows() != n || cov_.cols() != n)
      throw ChaosError("covariance is " + std::to_string(cov_.rows()) + "x" + std::to_string(cov_.cols()) + " for " +
                       std::to_string(n) + " sites");
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov_.cwiseAbs().maxCoeff()))
      throw ChaosError("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()(0) <= tol.pd) throw ChaosError("covariance is not positive definite");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (sites_[i] == sites_[j]) throw ChaosError("duplicate site name '" + sites_[i] + "'");
  }

  /// Sites "s1".."sn".
  static GaussianModel with_covariance(Matrix covariance, const Tolerance& tol = {}) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < covariance.rows(); ++i) names.push_back("s" + std::to_string(i + 1));
    return GaussianModel(std::move(names), std::move(covariance), tol);
  }

  static GaussianModel standard(std::size_t n) {
    return with_covariance(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  }

  std::size_t num_sites() const { return sites_.size(); }
  const std::vector<std::string>& sites() const { return sites_; }
  const Matrix& covariance() const { return cov_; }
  double cov(std::size_t i, std::size_t j) const { return cov_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }

  std::size_t site(const std::string& name) const {
    for (std::size_t i = 0; i < sites_.size(); ++i)
      if (sites_[i] == name) return i;
    throw ChaosError("unknown site '" + name + "'");
  }

 private:
  std::vector<std::string> sites_;
  Matrix cov_;
};

/// Multiset of sites, kept sorted; the empty monomial is the constant 1.
/// Ordered by degree, then lexicographically.
struct Monomial {
  std::vector<std::size_t> sites;

  Monomial() = default;
  explicit Monomial(std::vector<std::size_t> s) : sites(std::move(s)) { std::sort(sites.begin(), sites.end()); }

  std::size_t degree() const { return sites.size(); }

  friend bool operator==(const Monomial&, const Monomial&) = default;
  friend bool operator<(const Monomial& x, const Monomial& y) {
    if (x.degree() != y.degree()) return x.degree() < y.degree();
    return x.sites < y.sites;
  }

  friend Monomial operator*(const Monomial& x, const Monomial& y) {
    std::vector<std::size_t> s = x.sites;
    s.insert(s.end(), y.sites.begin(), y.sites.end());
    return Monomial(std::move(s));
  }

  /// site -> multiplicity, over n sites.
  std::vector<unsigned> counts(std::size_t n) const {
    std::vector<unsigned> c(n, 0);
    for (auto s : sites) {
      if (s >= n) throw ChaosError("monomial refers to site " + std::to_string(s) + " of " + std::to_string(n));
      ++c[s];
    }
    return c;
  }
};

/// "1", or site names joined by '*'; a factor may carry a power "s1^3".
inline Monomial parse_monomial(const GaussianModel& model, const std::string& text) {
  std::string t;
  for (char ch : text)
    if (ch != ' ') t.push_back(ch);
  if (t.empty()) throw ChaosError("empty monomial");
  if (t == "1") return Monomial{};
  std::vector<std::size_t> sites;
  std::stringstream ss(t);
  std::string factor;
  while (std::getline(ss, factor, '*')) {
    if (factor.empty()) throw ChaosError("malformed monomial '" + text + "'");
    std::size_t power = 1;
    if (const auto caret = factor.find('^'); caret != std::string::npos) {
      const std::string p = factor.substr(caret + 1);
      if (p.empty() || p.find_first_not_of("0123456789") != std::string::npos)
        throw ChaosError("malformed power in '" + text + "'");
      power = std::stoul(p);
      factor = factor.substr(0, caret);
    }
    const std::size_t s = model.site(factor);
    sites.insert(sites.end(), power, s);
  }
  return Monomial(std::move(sites));
}

inline std::string monomial_label(const GaussianModel& model, const Monomial& x) {
  if (x.degree() == 0) return "1";
  std::string out;
  for (std::size_t k = 0; k < x.sites.size(); ++k) {
    if (k) out += "*";
    out += model.sites().at(x.sites[k]);
  }
  return out;
}

/// E[prod of the phi(s)] summed over perfect pairings, memoized on the
/// multiplicity vector.
class WickMoments {
 public:
  explicit WickMoments(const GaussianModel& model) : model_(model) {}

  double operator()(const Monomial& x, const Monomial& y) {
    if ((x.degree() + y.degree()) % 2 != 0) return 0.0;
    return moment((x * y).counts(model_.num_sites()));
  }

  double moment(const Monomial& x) {
    if (x.degree() % 2 != 0) return 0.0;
    return moment(x.counts(model_.num_sites()));
  }

 private:
  double moment(std::vector<unsigned> c) {
    std::size_t i = 0;
    while (i < c.size() && c[i] == 0) ++i;
    if (i == c.size()) return 1.0;
    if (auto it = memo_.find(c); it != memo_.end()) return it->second;
    const auto key = c;
    --c[i];
    double total = 0.0;
    for (std::size_t j = i; j < c.size(); ++j) {
      if (c[j] == 0 || model_.cov(i, j) == 0.0) continue;
      const double mult = c[j];
      --c[j];
      total += mult * model_.cov(i, j) * moment(c);
      ++c[j];
    }
    memo_.emplace(key, total);
    return total;
  }

  const GaussianModel& model_;
  std::map<std::vector<unsigned>, double> memo_;
};

inline double wick_moment(const GaussianModel& model, const Monomial& x, const Monomial& y) {
  WickMoments w(model);
  return w(x, y);
}

/// Every multiset of at most `max_degree` sites out of n, in Monomial order.
inline std::vector<Monomial> monomials_up_to(std::size_t n, std::size_t max_degree, std::size_t cap = ambient_dim_cap()) {
  std::vector<Monomial> out{Monomial{}};
  std::vector<Monomial> layer{Monomial{}};
  for (std::size_t d = 1; d <= max_degree; ++d) {
    std::vector<Monomial> next;
    for (const auto& m : layer) {
      const std::size_t start = m.sites.empty() ? 0 : m.sites.back();
      for (std::size_t s = start; s < n; ++s) {
        Monomial e = m;
        e.sites.push_back(s);
        next.push_back(std::move(e));
        if (out.size() + next.size() > cap)
          throw SizeGuardError("monomial basis exceeds cap of " + std::to_string(cap));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

/// Monomial coordinates up to degree M with the Wick Gram as inner product.
class ChaosBasis {
 public:
  ChaosBasis(GaussianModel model, std::size_t max_degree, const Tolerance& tol = {})
      : model_(std::move(model)), max_degree_(max_degree), monomials_(monomials_up_to(model_.num_sites(), max_degree)) {
    for (std::size_t k = 0; k < monomials_.size(); ++k) index_.emplace(monomials_[k], k);
    const auto n = static_cast<Eigen::Index>(monomials_.size());
    Matrix gram(n, n);
    WickMoments w(model_);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = r; c < n; ++c) gram(r, c) = gram(c, r) = w(monomials_[r], monomials_[c]);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues()(n - 1);
    if (eig.eigenvalues()(0) <= tol.rank * top)
      throw ChaosError("Wick Gram matrix is numerically rank deficient at degree " + std::to_string(max_degree) +
                       " (eigenvalue ratio " + std::to_string(eig.eigenvalues()(0) / top) + ")");
    ambient_ = AmbientSpace(gram, tol);
  }

  const GaussianModel& model() const { return model_; }
  std::size_t max_degree() const { return max_degree_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }
  const AmbientSpace& ambient() const { return ambient_; }

  std::size_t index_of(const Monomial& x) const {
    const auto it = index_.find(x);
    if (it == index_.end())
      throw ChaosError("monomial of degree " + std::to_string(x.degree()) + " exceeds max degree " +
                       std::to_string(max_degree_));
    return it->second;
  }

  Vector coordinate(const Monomial& x) const {
    Vector e = Vector::Zero(ambient_.dim());
    e(static_cast<Eigen::Index>(index_of(x))) = 1.0;
    return e;
  }

  /// Number of monomials of degree <= m.
  std::size_t count_up_to(std::size_t m) const {
    return static_cast<std::size_t>(std::count_if(monomials_.begin(), monomials_.end(), [m](const Monomial& x) { return x.degree() <= m; }));
  }

 private:
  GaussianModel model_;
  std::size_t max_degree_;
  std::vector<Monomial> monomials_;
  std::map<Monomial, std::size_t> index_;
  AmbientSpace ambient_;
};

/// H(0) ⊆ H(1) ⊆ ... ⊆ H(M) over the chain 0 < 1 < ... < M.
inline SubspaceFamily chaos_filtration(const ChaosBasis& basis, const Tolerance& tol = {}) {
  const auto n = basis.ambient().dim();
  std::vector<Subspace> spaces;
  for (std::size_t m = 0; m <= basis.max_degree(); ++m) {
    const auto k = static_cast<Eigen::Index>(basis.count_up_to(m));
    spaces.push_back(span(basis.ambient(), Matrix::Identity(n, n).leftCols(k), tol));
  }
  return SubspaceFamily(Poset::chain(basis.max_degree() + 1), basis.ambient(), std::move(spaces), tol);
}

/// S_m = H(m) ∩ H(m-1)^⊥ for m = 0..M.
inline std::vector<Subspace> chaos_pieces(const ChaosBasis& basis, const Tolerance& tol = {}) {
  auto pieces = interaction_subspaces(chaos_filtration(basis, tol), tol);
  pieces.pop_back();  // the top piece is zero: H(M) is the whole ambient
  return pieces;
}

/// A polynomial in monomial coordinates.
using Polynomial = std::map<Monomial, double>;

inline Polynomial to_polynomial(const ChaosBasis& basis, const Vector& coeffs, double drop_below = 0.0) {
  Polynomial p;
  for (std::size_t k = 0; k < basis.monomials().size(); ++k) {
    const double c = coeffs(static_cast<Eigen::Index>(k));
    if (std::abs(c) > drop_below) p[basis.monomials()[k]] = c;
  }
  return p;
}

inline Polynomial multiply(const Polynomial& p, const Polynomial& q) {
  Polynomial out;
  for (const auto& [x, a] : p)
    for (const auto& [y, b] : q) out[x * y] += a * b;
  return out;
}

/// :Psi(x): = s_m(Psi(x)) with m = deg x, in the basis's monomial coordinates.
inline Vector hermite_ito(const ChaosBasis& basis, const Monomial& x, const Tolerance& tol = {}) {
  if (x.degree() > basis.max_degree())
    throw ChaosError("monomial of degree " + std::to_string(x.degree()) + " exceeds max degree " +
                     std::to_string(basis.max_degree()));
  const auto pieces = chaos_pieces(basis, tol);
  return projector(pieces[x.degree()]).apply(basis.coordinate(x));
}

/// Same, over a basis truncated at deg x.
inline Polynomial hermite_ito(const GaussianModel& model, const Monomial& x, const Tolerance& tol = {}) {
  const ChaosBasis basis(model, x.degree(), tol);
  return to_polynomial(basis, hermite_ito(basis, x, tol));
}

}  // namespace idecomp
