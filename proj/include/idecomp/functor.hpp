#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "idecomp/interaction.hpp"
#include "idecomp/linalg.hpp"
#include "idecomp/poset.hpp"

namespace idecomp {

class DiagramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Edge map keyed by (lower, upper).
using EdgeMap = std::map<std::pair<Element, Element>, Matrix>;

/// A functor from a finite poset to finite-dimensional Hilbert spaces with
/// isometries as morphisms. Fibers are R^{d_a} with the dot product; the map
/// for b <= a is a d_a x d_b matrix with orthonormal columns.
///
/// Built from maps on covering pairs; every other composite is derived along
/// paths and cross-checked, which is exactly the functoriality test.
class IsometryDiagram {
 public:
  IsometryDiagram(Poset poset, std::vector<Eigen::Index> dims, const EdgeMap& edges, const Tolerance& tol = {})
      : poset_(std::move(poset)), dims_(std::move(dims)) {
    const std::size_t n = poset_.size();
    if (dims_.size() != n) throw DiagramError("expected " + std::to_string(n) + " fiber dimensions");
    for (Element a = 0; a < n; ++a) {
      if (dims_[a] < 0) throw DiagramError("negative dimension at '" + poset_.id(a) + "'");
      fibers_.push_back(AmbientSpace::euclidean(dims_[a]));
    }
    for (Element b = 0; b < n; ++b)
      for (Element a = 0; a < n; ++a)
        if (poset_.less(b, a) && dims_[b] > dims_[a])
          throw DiagramError("dimension drops along " + edge_name(b, a) + " (" + std::to_string(dims_[b]) + " > " +
                             std::to_string(dims_[a]) + ")");
    for (const auto& [key, m] : edges) {
      const auto [b, a] = key;
      if (b >= n || a >= n || !poset_.less(b, a)) throw DiagramError("edge " + edge_label(b, a) + " is not a strict relation");
      if (m.rows() != dims_[a] || m.cols() != dims_[b])
        throw DiagramError("edge " + edge_name(b, a) + " has shape " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()) + ", expected " + std::to_string(dims_[a]) + "x" +
                           std::to_string(dims_[b]));
      const double defect = spectral_norm(m.transpose() * m - Matrix::Identity(m.cols(), m.cols()));
      if (defect > tol.orth)
        throw DiagramError("edge " + edge_name(b, a) + " is not an isometry (defect " + std::to_string(defect) + ")");
    }

    maps_.assign(n * n, std::nullopt);
    for (Element a = 0; a < n; ++a) maps_[a * n + a] = Matrix::Identity(dims_[a], dims_[a]);
    const auto order = poset_.linear_extension();
    for (Element a : order) {
      for (Element b : order) {
        if (!poset_.less(b, a)) continue;
        std::optional<Matrix> derived;
        Element via = b;
        for (Element c = 0; c < n; ++c) {
          if (!poset_.covers(a, c) || !poset_.leq(b, c)) continue;
          auto cover = edges.find({c, a});
          if (cover == edges.end()) throw DiagramError("missing map on covering edge " + edge_name(c, a));
          Matrix candidate = cover->second * map(b, c);
          if (!derived) {
            derived = std::move(candidate);
            via = c;
          } else if (spectral_norm(*derived - candidate) > tol.eq) {
            throw DiagramError("diagram does not commute: paths " + poset_.id(b) + "<" + poset_.id(via) + "<" +
                               poset_.id(a) + " and " + poset_.id(b) + "<" + poset_.id(c) + "<" + poset_.id(a) +
                               " disagree (gap " + std::to_string(spectral_norm(*derived - candidate)) + ")");
          }
        }
        auto direct = edges.find({b, a});
        if (direct != edges.end() && spectral_norm(direct->second - *derived) > tol.eq)
          throw DiagramError("supplied map on " + edge_name(b, a) + " disagrees with the composite along covering edges");
        maps_[a * n + b] = std::move(*derived);
      }
    }
  }

  const Poset& poset() const { return poset_; }
  Eigen::Index dim(Element a) const { return dims_.at(a); }
  const std::vector<Eigen::Index>& dims() const { return dims_; }
  const AmbientSpace& fiber(Element a) const { return fibers_.at(a); }

  /// The map G(b <= a); identity for a == b.
  const Matrix& map(Element b, Element a) const {
    const auto& m = maps_.at(a * poset_.size() + b);
    if (!m) throw DiagramError(poset_.id(b) + " is not below " + poset_.id(a));
    return *m;
  }

  EdgeMap cover_edges() const {
    EdgeMap out;
    for (const auto& [b, a] : poset_.cover_pairs()) out[{b, a}] = map(b, a);
    return out;
  }

  std::string edge_name(Element b, Element a) const { return poset_.id(b) + "<" + poset_.id(a); }

 private:
  std::string edge_label(Element b, Element a) const {
    auto name = [&](Element e) { return e < poset_.size() ? poset_.id(e) : "#" + std::to_string(e); };
    return name(b) + "<" + name(a);
  }

  Poset poset_;
  std::vector<Eigen::Index> dims_;
  std::vector<AmbientSpace> fibers_;
  std::vector<std::optional<Matrix>> maps_;
};

struct DiagramReport {
  bool valid = true;
  std::string error;
};

/// Non-throwing validation of raw diagram data.
inline DiagramReport validate_diagram(const Poset& poset, const std::vector<Eigen::Index>& dims, const EdgeMap& edges,
                                      const Tolerance& tol = {}) {
  try {
    IsometryDiagram d(poset, dims, edges, tol);
  } catch (const DiagramError& e) {
    return {false, e.what()};
  }
  return {};
}

/// L(alpha, a) = im G(a <= alpha) inside the fiber at alpha.
class LeftCoupling {
 public:
  explicit LeftCoupling(const IsometryDiagram& d, const Tolerance& tol = {}) : diagram_(d) {
    const std::size_t n = d.poset().size();
    images_.assign(n * n, std::nullopt);
    for (Element alpha = 0; alpha < n; ++alpha)
      for (Element a = 0; a < n; ++a)
        if (d.poset().leq(a, alpha)) images_[alpha * n + a] = span(d.fiber(alpha), d.map(a, alpha), tol);
    // L(beta,a) -> L(alpha,a) is the restriction of G(beta <= alpha); it must be onto.
    for (Element alpha = 0; alpha < n; ++alpha)
      for (Element beta = 0; beta < n; ++beta) {
        if (!d.poset().less(beta, alpha)) continue;
        for (Element a = 0; a < n; ++a) {
          if (!d.poset().leq(a, beta)) continue;
          const Subspace moved = span(d.fiber(alpha), d.map(beta, alpha) * at(beta, a).frame(), tol);
          connecting_defect_ = std::max(connecting_defect_, projector_distance(moved, at(alpha, a)));
        }
      }
  }

  const IsometryDiagram& diagram() const { return diagram_; }

  const Subspace& at(Element alpha, Element a) const {
    const auto& s = images_.at(alpha * diagram_.poset().size() + a);
    if (!s) throw DiagramError("(" + diagram_.poset().id(alpha) + ", " + diagram_.poset().id(a) + ") is not in A1");
    return *s;
  }

  /// The family (L(alpha, a), a <= alpha) as a subspace family of the fiber
  /// at alpha, indexed on the principal lower set of alpha.
  SubspaceFamily family_at(Element alpha, const Tolerance& tol = {}) const {
    const auto members = diagram_.poset().lower_set(alpha).members();
    std::vector<Subspace> spaces;
    for (Element a : members) spaces.push_back(at(alpha, a));
    return SubspaceFamily(diagram_.poset().restrict_to(members), diagram_.fiber(alpha), std::move(spaces), tol);
  }

  /// Largest projector gap between G(beta<=alpha) L(beta,a) and L(alpha,a).
  double connecting_defect() const { return connecting_defect_; }

 private:
  IsometryDiagram diagram_;
  std::vector<std::optional<Subspace>> images_;
  double connecting_defect_ = 0.0;
};

inline LeftCoupling left_coupling(const IsometryDiagram& d, const Tolerance& tol = {}) { return LeftCoupling(d, tol); }

/// Ĝ(alpha, B) = join of L(alpha, b) over b in B, computed on request.
class A2Extension {
 public:
  A2Extension(LeftCoupling lc, const Tolerance& tol) : coupling_(std::move(lc)), tol_(tol) {}

  const LeftCoupling& coupling() const { return coupling_; }

  Subspace ghat(Element alpha, const LowerSet& b) const {
    const Poset& p = coupling_.diagram().poset();
    if (!p.is_lower_set(b)) throw DiagramError("argument is not a lower set");
    if (!b.subset_of(p.lower_set(alpha))) throw DiagramError("lower set is not contained in the lower set of " + p.id(alpha));
    std::vector<Subspace> parts;
    for (Element e : b.members()) parts.push_back(coupling_.at(alpha, e));
    return join(coupling_.diagram().fiber(alpha), parts, tol_);
  }

  /// Checks that G(beta<=alpha) carries Ĝ(beta,B) onto Ĝ(alpha,B) and that
  /// Ĝ(alpha,B1) ⊆ Ĝ(alpha,B) for B1 ⊆ B, across all of A2. Returns the
  /// largest defect.
  double compatibility_defect(std::size_t cap = kDefaultMaxLowerSets) const {
    const IsometryDiagram& d = coupling_.diagram();
    const Poset& p = d.poset();
    double worst = 0.0;
    PosetA2 a2(p, cap);
    const auto pairs = a2.enumerate();
    for (const auto& lo : pairs) {
      const Subspace g_lo = ghat(lo.alpha, lo.lower);
      for (const auto& hi : pairs) {
        if (!a2.leq(lo, hi)) continue;
        if (lo.alpha == hi.alpha) {
          if (!contains(ghat(hi.alpha, hi.lower), g_lo, tol_)) worst = std::max(worst, 1.0);
        } else if (lo.lower == hi.lower) {
          const Subspace moved = span(d.fiber(hi.alpha), d.map(lo.alpha, hi.alpha) * g_lo.frame(), tol_);
          worst = std::max(worst, projector_distance(moved, ghat(hi.alpha, hi.lower)));
        }
      }
    }
    return worst;
  }

 private:
  LeftCoupling coupling_;
  Tolerance tol_;
};

inline A2Extension extend_a2(const LeftCoupling& lc, const Tolerance& tol = {}) { return A2Extension(lc, tol); }

struct FunctorWitness {
  Element alpha;
  Element a;
  Element b;
  double gap;
};

struct FunctorIntersectionReport {
  bool holds = true;
  std::vector<FunctorWitness> witnesses;  // sorted by decreasing gap
  double max_gap = 0.0;
};

/// For each alpha and each pair a, b <= alpha: pi^alpha(â∩b̂) = pi^alpha(â) pi^alpha(b̂).
inline FunctorIntersectionReport check_intersection_property_functor(const IsometryDiagram& d, const Tolerance& tol = {}) {
  const LeftCoupling lc(d, tol);
  const A2Extension ext(lc, tol);
  const Poset& p = d.poset();
  FunctorIntersectionReport rep;
  for (Element alpha = 0; alpha < p.size(); ++alpha) {
    for (Element a = 0; a < p.size(); ++a) {
      if (!p.leq(a, alpha)) continue;
      for (Element b = a + 1; b < p.size(); ++b) {
        if (!p.leq(b, alpha)) continue;
        const Subspace common = ext.ghat(alpha, p.lower_set(a).intersect(p.lower_set(b)));
        const Matrix& qa = lc.at(alpha, a).chol_basis();
        const Matrix& qb = lc.at(alpha, b).chol_basis();
        const Matrix& qc = common.chol_basis();
        const double gap = spectral_norm(qc * qc.transpose() - (qa * qa.transpose()) * (qb * qb.transpose()));
        rep.max_gap = std::max(rep.max_gap, gap);
        if (gap > tol.proj) rep.witnesses.push_back({alpha, a, b, gap});
      }
    }
  }
  std::stable_sort(rep.witnesses.begin(), rep.witnesses.end(), [](const auto& x, const auto& y) {
    return std::tie(y.gap, x.alpha, x.a, x.b) < std::tie(x.gap, y.alpha, y.a, y.b);
  });
  rep.holds = rep.witnesses.empty();
  return rep;
}

/// S_c(alpha, a) = L(alpha,c) ∩ (sum_{d<c} L(alpha,d))^⊥ for c <= a, else 0.
/// The piece does not depend on a once c <= a, so it is stored per (c, alpha).
class Predecomposition {
 public:
  Predecomposition(const LeftCoupling& lc, const Tolerance& tol = {}) : coupling_(lc) {
    const IsometryDiagram& d = lc.diagram();
    const Poset& p = d.poset();
    const std::size_t n = p.size();
    pieces_.assign(n * n, std::nullopt);
    for (Element alpha = 0; alpha < n; ++alpha)
      for (Element c = 0; c < n; ++c) {
        if (!p.leq(c, alpha)) continue;
        std::vector<Subspace> below;
        for (Element e : p.strictly_below(c)) below.push_back(lc.at(alpha, e));
        pieces_[c * n + alpha] = intersect(lc.at(alpha, c), complement(join(d.fiber(alpha), below, tol)), tol);
      }

    // Connecting maps are restrictions of G(beta<=alpha); they must carry
    // S_c(beta) isometrically onto S_c(alpha).
    for (Element alpha = 0; alpha < n; ++alpha)
      for (Element beta = 0; beta < n; ++beta) {
        if (!p.less(beta, alpha)) continue;
        const Matrix& g = d.map(beta, alpha);
        for (Element c = 0; c < n; ++c) {
          if (!p.leq(c, beta)) continue;
          const Subspace moved = span(d.fiber(alpha), g * piece(c, beta).frame(), tol);
          connecting_defect_ = std::max(connecting_defect_, projector_distance(moved, piece(c, alpha)));
        }
      }

    // Naturality of s_c : L -> S_c on squares (beta,b) <= (alpha,a) with c <= b.
    const PosetA1 a1(p);
    for (const auto& hi : a1.pairs())
      for (const auto& lo : a1.pairs()) {
        if (!a1.leq(lo, hi)) continue;
        const Matrix& g = d.map(lo.alpha, hi.alpha);
        const Matrix dom = lc.at(lo.alpha, lo.a).frame();
        for (Element c = 0; c < n; ++c) {
          if (!p.leq(c, lo.a)) continue;
          const Matrix lhs = g * (projection(c, lo.alpha) * dom);
          const Matrix rhs = projection(c, hi.alpha) * (g * dom);
          naturality_defect_ = std::max(naturality_defect_, spectral_norm(lhs - rhs));
        }
      }
  }

  const LeftCoupling& coupling() const { return coupling_; }

  /// S_c(alpha, ·) for c <= alpha.
  const Subspace& piece(Element c, Element alpha) const {
    const auto& s = pieces_.at(c * coupling_.diagram().poset().size() + alpha);
    if (!s) throw DiagramError("S_c(alpha) requires c <= alpha");
    return *s;
  }

  Subspace piece(Element c, Element alpha, Element a) const {
    const Poset& p = coupling_.diagram().poset();
    if (!p.leq(a, alpha)) throw DiagramError("(alpha, a) is not in A1");
    if (!p.leq(c, a)) return Subspace::zero(coupling_.diagram().fiber(alpha));
    return piece(c, alpha);
  }

  /// V_c(a) = S_c(a, a)
  Subspace diagonal(Element c, Element a) const { return piece(c, a, a); }

  /// s_c(alpha, ·) as a d_alpha x d_alpha orthogonal projector.
  Matrix projection(Element c, Element alpha) const { return projector(piece(c, alpha)).matrix(); }

  double connecting_defect() const { return connecting_defect_; }
  double naturality_defect() const { return naturality_defect_; }

 private:
  LeftCoupling coupling_;
  std::vector<std::optional<Subspace>> pieces_;
  double connecting_defect_ = 0.0;
  double naturality_defect_ = 0.0;
};

inline Predecomposition predecomposition(const IsometryDiagram& d, const Tolerance& tol = {}) {
  return Predecomposition(LeftCoupling(d, tol), tol);
}

/// A decomposition G ≅ ⊕_c V_c 1[c <= ·] with explicit natural isometries.
///
/// Piece c is stored in coordinates: dimension piece_dims[c], and for
/// c <= b <= a an orthogonal matrix transport(c, b, a) realizing V_c(b) -> V_c(a).
/// natural_iso(a) maps G(a) onto the concatenation of the piece coordinates
/// for c <= a in ascending element order.
class FunctorDecomposition {
 public:
  const Poset& poset() const { return poset_; }
  const std::vector<Eigen::Index>& piece_dims() const { return piece_dims_; }
  const Matrix& natural_iso(Element a) const { return phi_.at(a); }
  const Subspace& generating_piece(Element c) const { return generators_.at(c); }
  const Matrix& transport(Element c, Element b, Element a) const { return transport_.at(key(c, b, a)); }

  /// Block offsets of the pieces inside natural_iso(a).
  std::vector<std::pair<Element, Eigen::Index>> blocks(Element a) const {
    std::vector<std::pair<Element, Eigen::Index>> out;
    Eigen::Index off = 0;
    for (Element c = 0; c < poset_.size(); ++c)
      if (poset_.leq(c, a)) {
        out.emplace_back(c, off);
        off += piece_dims_[c];
      }
    return out;
  }

  double max_iso_defect() const { return iso_defect_; }
  double naturality_defect() const { return naturality_defect_; }

 private:
  friend struct FunctorDecomposer;
  std::size_t key(Element c, Element b, Element a) const { return (c * poset_.size() + b) * poset_.size() + a; }

  Poset poset_;
  std::vector<Eigen::Index> piece_dims_;
  std::vector<Subspace> generators_;  // V_c(c) inside the fiber at c
  std::vector<Matrix> phi_;
  std::map<std::size_t, Matrix> transport_;
  double iso_defect_ = 0.0;
  double naturality_defect_ = 0.0;
};

struct FunctorDecomposeResult {
  std::optional<FunctorDecomposition> decomposition;
  FunctorIntersectionReport intersection;
  std::vector<Element> failing_nodes;  // alpha whose fiber family does not decompose
  std::string failure;                 // empty on success

  bool decomposable() const { return decomposition.has_value(); }
};

struct FunctorDecomposer {
  static FunctorDecomposeResult run(const IsometryDiagram& d, const Tolerance& tol) {
    FunctorDecomposeResult res;
    res.intersection = check_intersection_property_functor(d, tol);
    const Poset& p = d.poset();
    const std::size_t n = p.size();
    const LeftCoupling lc(d, tol);

    for (Element alpha = 0; alpha < n; ++alpha)
      if (!decompose(lc.family_at(alpha, tol), tol).decomposable()) res.failing_nodes.push_back(alpha);
    if (!res.failing_nodes.empty()) {
      res.failure = "fiber family at '" + p.id(res.failing_nodes.front()) + "' is not decomposable";
      return res;
    }

    const Predecomposition pre(lc, tol);
    FunctorDecomposition fd;
    fd.poset_ = p;
    fd.piece_dims_.resize(n);
    for (Element c = 0; c < n; ++c) {
      fd.generators_.push_back(pre.diagonal(c, c));
      fd.piece_dims_[c] = fd.generators_.back().dim();
    }
    std::vector<std::vector<Matrix>> frames(n);  // frames[a][c] = frame of V_c(a)
    for (Element a = 0; a < n; ++a) {
      frames[a].resize(n);
      Eigen::Index rows = 0;
      for (Element c = 0; c < n; ++c) {
        if (!p.leq(c, a)) continue;
        frames[a][c] = pre.diagonal(c, a).frame();
        if (frames[a][c].cols() != fd.piece_dims_[c]) {
          res.failure = "piece " + p.id(c) + " changes dimension between " + p.id(c) + " and " + p.id(a);
          return res;
        }
        rows += fd.piece_dims_[c];
      }
      if (rows != d.dim(a)) {
        res.failure = "pieces below '" + p.id(a) + "' do not exhaust its fiber";
        return res;
      }
      Matrix phi(rows, d.dim(a));
      for (const auto& [c, off] : fd.blocks(a)) phi.middleRows(off, fd.piece_dims_[c]) = frames[a][c].transpose();
      fd.iso_defect_ = std::max(fd.iso_defect_, spectral_norm(phi.transpose() * phi - Matrix::Identity(rows, rows)));
      fd.phi_.push_back(std::move(phi));
    }

    for (Element a = 0; a < n; ++a)
      for (Element b = 0; b < n; ++b) {
        if (!p.leq(b, a)) continue;
        const Matrix& g = d.map(b, a);
        Matrix inclusion = Matrix::Zero(d.dim(a), d.dim(b));
        const auto rows = fd.blocks(a);
        const auto cols = fd.blocks(b);
        for (const auto& [c, col_off] : cols) {
          Matrix t = frames[a][c].transpose() * g * frames[b][c];
          const Eigen::Index k = fd.piece_dims_[c];
          fd.iso_defect_ = std::max(fd.iso_defect_, spectral_norm(t.transpose() * t - Matrix::Identity(k, k)));
          Eigen::Index row_off = 0;
          for (const auto& [rc, ro] : rows)
            if (rc == c) row_off = ro;
          inclusion.block(row_off, col_off, k, k) = t;
          fd.transport_[fd.key(c, b, a)] = std::move(t);
        }
        fd.naturality_defect_ =
            std::max(fd.naturality_defect_, spectral_norm(fd.phi_[a] * g - inclusion * fd.phi_[b]));
      }

    if (fd.iso_defect_ > tol.orth) {
      res.failure = "natural map is not an isometric isomorphism (defect " + std::to_string(fd.iso_defect_) + ")";
      return res;
    }
    if (fd.naturality_defect_ > tol.eq) {
      res.failure = "natural isomorphism does not commute (defect " + std::to_string(fd.naturality_defect_) + ")";
      return res;
    }
    res.decomposition = std::move(fd);
    return res;
  }
};

/// Per-node decomposition of the left coupling, assembled into a natural
/// isometric isomorphism onto the direct sum of the diagonal pieces.
inline FunctorDecomposeResult decompose_functor(const IsometryDiagram& d, const Tolerance& tol = {}) {
  return FunctorDecomposer::run(d, tol);
}

/// Realizes a decomposed diagram as a family of coordinate subspaces:
/// ambient = ⊕_c R^{dim V_c}, and a maps to the blocks with c <= a.
inline SubspaceFamily embed_into_ambient(const FunctorDecomposition& fd, const Tolerance& tol = {}) {
  const Poset& p = fd.poset();
  Eigen::Index total = 0;
  std::vector<Eigen::Index> offset(p.size());
  for (Element c = 0; c < p.size(); ++c) {
    offset[c] = total;
    total += fd.piece_dims()[c];
  }
  const AmbientSpace amb = AmbientSpace::euclidean(total);
  std::vector<Subspace> spaces;
  for (Element a = 0; a < p.size(); ++a) {
    Eigen::Index cols = 0;
    for (Element c = 0; c < p.size(); ++c)
      if (p.leq(c, a)) cols += fd.piece_dims()[c];
    Matrix basis = Matrix::Zero(total, cols);
    Eigen::Index col = 0;
    for (Element c = 0; c < p.size(); ++c) {
      if (!p.leq(c, a)) continue;
      for (Eigen::Index k = 0; k < fd.piece_dims()[c]; ++k) basis(offset[c] + k, col++) = 1.0;
    }
    spaces.push_back(Subspace::from_chol_basis(amb, std::move(basis)));
  }
  return SubspaceFamily(p, amb, std::move(spaces), tol);
}

}  // namespace idecomp
