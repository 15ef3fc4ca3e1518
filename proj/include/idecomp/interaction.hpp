#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "idecomp/linalg.hpp"
#include "idecomp/poset.hpp"

namespace idecomp {

class FamilyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Increasing map a -> H_a from a finite poset into the subspaces of one
/// ambient space. Monotonicity is checked on construction.
class SubspaceFamily {
 public:
  SubspaceFamily(Poset poset, AmbientSpace ambient, std::vector<Subspace> spaces, const Tolerance& tol = {})
      : poset_(std::move(poset)), ambient_(std::move(ambient)), spaces_(std::move(spaces)) {
    if (spaces_.size() != poset_.size())
      throw FamilyError("family has " + std::to_string(spaces_.size()) + " subspaces for a poset of " +
                        std::to_string(poset_.size()) + " elements");
    for (Element a = 0; a < spaces_.size(); ++a)
      if (!spaces_[a].ambient().same_as(ambient_))
        throw FamilyError("subspace at '" + poset_.id(a) + "' lives in a different ambient space");
    for (Element b = 0; b < poset_.size(); ++b)
      for (Element a = 0; a < poset_.size(); ++a)
        if (poset_.less(b, a) && !contains(spaces_[a], spaces_[b], tol))
          throw FamilyError("family is not increasing: H_" + poset_.id(b) + " is not contained in H_" + poset_.id(a));
  }

  static SubspaceFamily from_generators(Poset poset, const AmbientSpace& ambient, const std::vector<Matrix>& generators,
                                        const Tolerance& tol = {}) {
    std::vector<Subspace> spaces;
    spaces.reserve(generators.size());
    for (const auto& g : generators) spaces.push_back(span(ambient, g, tol));
    return SubspaceFamily(std::move(poset), ambient, std::move(spaces), tol);
  }

  const Poset& poset() const { return poset_; }
  const AmbientSpace& ambient() const { return ambient_; }
  const Subspace& at(Element a) const { return spaces_.at(a); }
  const std::vector<Subspace>& spaces() const { return spaces_; }
  std::size_t size() const { return spaces_.size(); }

 private:
  Poset poset_;
  AmbientSpace ambient_;
  std::vector<Subspace> spaces_;
};

/// H(B): the join of H_b over b in B.
inline Subspace lower_set_space(const SubspaceFamily& fam, const LowerSet& b, const Tolerance& tol = {}) {
  if (!fam.poset().is_lower_set(b)) throw FamilyError("argument is not a lower set of the family's poset");
  std::vector<Subspace> parts;
  for (Element e : b.members()) parts.push_back(fam.at(e));
  return join(fam.ambient(), parts, tol);
}

/// Orthogonal projector onto H(B); the zero map for B empty.
inline Projector pi_of_lowerset(const SubspaceFamily& fam, const LowerSet& b, const Tolerance& tol = {}) {
  return projector(lower_set_space(fam, b, tol));
}

struct IntersectionWitness {
  Element a;
  Element b;
  double gap;
};

struct IntersectionReport {
  bool holds = true;
  std::vector<IntersectionWitness> witnesses;  // sorted by decreasing gap
  double max_gap = 0.0;
};

namespace detail {

inline Matrix chol_projector(const Subspace& s) { return s.chol_basis() * s.chol_basis().transpose(); }

inline void finish_report(IntersectionReport& rep) {
  std::stable_sort(rep.witnesses.begin(), rep.witnesses.end(), [](const auto& x, const auto& y) {
    return std::tie(y.gap, x.a, x.b) < std::tie(x.gap, y.a, y.b);
  });
  rep.holds = rep.witnesses.empty();
}

}  // namespace detail

/// Tests pi(â ∩ b̂) = pi_a pi_b for every unordered pair a != b.
///
/// Both sides are gram-self-adjoint when the identity holds, so one order of
/// the product suffices.
inline IntersectionReport check_intersection_property(const SubspaceFamily& fam, const Tolerance& tol = {}) {
  const Poset& p = fam.poset();
  std::vector<Matrix> pis;
  pis.reserve(fam.size());
  for (const auto& s : fam.spaces()) pis.push_back(detail::chol_projector(s));
  IntersectionReport rep;
  for (Element a = 0; a < p.size(); ++a) {
    for (Element b = a + 1; b < p.size(); ++b) {
      const LowerSet common = p.lower_set(a).intersect(p.lower_set(b));
      const Matrix lhs = detail::chol_projector(lower_set_space(fam, common, tol));
      const double gap = spectral_norm(lhs - pis[a] * pis[b]);
      rep.max_gap = std::max(rep.max_gap, gap);
      if (gap > tol.proj) rep.witnesses.push_back({a, b, gap});
    }
  }
  detail::finish_report(rep);
  return rep;
}

/// S_a = H_a ∩ (sum_{b<a} H_b)^⊥ for each a, plus the adjoined top
/// (last entry) S_1 = (sum_a H_a)^⊥.
inline std::vector<Subspace> interaction_subspaces(const SubspaceFamily& fam, const Tolerance& tol = {}) {
  const Poset& p = fam.poset();
  std::vector<Subspace> pieces;
  pieces.reserve(p.size() + 1);
  for (Element a = 0; a < p.size(); ++a) {
    std::vector<Subspace> below;
    for (Element b : p.strictly_below(a)) below.push_back(fam.at(b));
    pieces.push_back(intersect(fam.at(a), complement(join(fam.ambient(), below, tol)), tol));
  }
  pieces.push_back(complement(join(fam.ambient(), fam.spaces(), tol)));
  return pieces;
}

/// A verified interaction decomposition indexed on the poset with a top
/// adjoined. pieces[top] is S_1.
struct Decomposition {
  PosetPlus poset_plus;
  std::vector<Subspace> pieces;
  std::vector<Projector> projectors;
};

struct DecomposeResult {
  std::optional<Decomposition> decomposition;
  IntersectionReport intersection;
  std::vector<Subspace> pieces;           // candidate S_a, always computed
  std::optional<Element> first_mismatch;  // first element along the order where the induction breaks
  double max_overlap = 0.0;               // max ||P_{S_a} P_{S_b}||, a != b
  double max_reconstruction_gap = 0.0;    // max ||P(join_{b<=a} S_b) - P(H_a)||

  bool decomposable() const { return decomposition.has_value(); }
};

/// Builds the interaction subspaces and verifies, by induction along `order`,
/// that each is orthogonal to those already placed and that the pieces below
/// a rebuild H_a. Success is decided by that verification alone; the
/// intersection-property report is attached for comparison.
inline DecomposeResult decompose_along(const SubspaceFamily& fam, std::span<const Element> order,
                                       const Tolerance& tol = {}) {
  const Poset& p = fam.poset();
  if (order.size() != p.size()) throw FamilyError("induction order must list every element once");
  DecomposeResult res;
  res.intersection = check_intersection_property(fam, tol);
  res.pieces = interaction_subspaces(fam, tol);
  const Element top = p.size();

  std::vector<Element> placed;
  auto place = [&](Element a, const std::vector<Element>& lower) {
    bool ok = true;
    for (Element b : placed) {
      const double ov = overlap(res.pieces[a], res.pieces[b]);
      res.max_overlap = std::max(res.max_overlap, ov);
      if (ov > tol.proj) ok = false;
    }
    std::vector<Subspace> parts;
    for (Element b : lower) parts.push_back(res.pieces[b]);
    const Subspace rebuilt = join(fam.ambient(), parts, tol);
    const Subspace target = a == top ? Subspace::whole(fam.ambient()) : fam.at(a);
    const double gap = projector_distance(rebuilt, target);
    res.max_reconstruction_gap = std::max(res.max_reconstruction_gap, gap);
    if (gap > tol.eq || rebuilt.dim() != target.dim()) ok = false;
    if (!ok && !res.first_mismatch) res.first_mismatch = a;
    placed.push_back(a);
  };

  std::vector<bool> seen(p.size(), false);
  for (Element a : order) {
    if (a >= p.size() || seen[a]) throw FamilyError("induction order must list every element once");
    for (Element b : p.strictly_below(a))
      if (!seen[b]) throw FamilyError("induction order is not a linear extension");
    seen[a] = true;
    std::vector<Element> lower = p.lower_set(a).members();
    place(a, lower);
  }
  std::vector<Element> all(p.size() + 1);
  for (Element a = 0; a <= p.size(); ++a) all[a] = a;
  place(top, all);

  if (!res.first_mismatch) {
    Decomposition d{extend_plus(p), res.pieces, {}};
    for (const auto& s : res.pieces) d.projectors.push_back(projector(s));
    res.decomposition = std::move(d);
  }
  return res;
}

inline DecomposeResult decompose(const SubspaceFamily& fam, const Tolerance& tol = {}) {
  const auto order = fam.poset().linear_extension();
  return decompose_along(fam, order, tol);
}

/// s_a = sum_{b<=a} mu(a,b) pi_b over the poset with a top adjoined (H_1 is
/// the ambient). Raw linear maps in ambient coordinates; not projectors in
/// general.
inline std::vector<Matrix> mobius_projections(const SubspaceFamily& fam) {
  const PosetPlus plus = extend_plus(fam.poset());
  const std::size_t n = plus.poset.size();
  const auto mu = plus.poset.mobius();
  std::vector<Matrix> pis;
  for (const auto& s : fam.spaces()) pis.push_back(projector(s).matrix());
  pis.push_back(Matrix::Identity(fam.ambient().dim(), fam.ambient().dim()));
  std::vector<Matrix> out;
  for (Element a = 0; a < n; ++a) {
    Matrix s = Matrix::Zero(fam.ambient().dim(), fam.ambient().dim());
    for (Element b = 0; b < n; ++b)
      if (mu[a * n + b] != 0) s += static_cast<double>(mu[a * n + b]) * pis[b];
    out.push_back(std::move(s));
  }
  return out;
}

/// max_a ||s_a - s_a^⊥|| over the poset with top adjoined.
inline double mobius_orthogonal_gap(const SubspaceFamily& fam, const Tolerance& tol = {}) {
  const auto mob = mobius_projections(fam);
  const auto pieces = interaction_subspaces(fam, tol);
  double gap = 0.0;
  for (std::size_t a = 0; a < mob.size(); ++a)
    gap = std::max(gap, fam.ambient().operator_norm(mob[a] - projector(pieces[a]).matrix()));
  return gap;
}

/// On a meet semi-lattice: tests pi_a pi_b = pi_{a∧b}.
inline IntersectionReport meet_semilattice_shortcut(const SubspaceFamily& fam, const Tolerance& tol = {}) {
  const Poset& p = fam.poset();
  const auto meet = p.meet_table();
  if (!meet) throw FamilyError("poset is not a meet semi-lattice");
  std::vector<Matrix> pis;
  for (const auto& s : fam.spaces()) pis.push_back(detail::chol_projector(s));
  IntersectionReport rep;
  for (Element a = 0; a < p.size(); ++a) {
    for (Element b = a + 1; b < p.size(); ++b) {
      const double gap = spectral_norm(pis[(*meet)[a * p.size() + b]] - pis[a] * pis[b]);
      rep.max_gap = std::max(rep.max_gap, gap);
      if (gap > tol.proj) rep.witnesses.push_back({a, b, gap});
    }
  }
  detail::finish_report(rep);
  return rep;
}

}  // namespace idecomp
