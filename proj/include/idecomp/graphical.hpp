#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "idecomp/interaction.hpp"
#include "idecomp/linalg.hpp"
#include "idecomp/poset.hpp"

namespace idecomp {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Variable subsets are bitmasks: bit i is variable i.
using VarSet = std::size_t;

/// Finite discrete variables; configurations are laid out row-major with the
/// first variable varying slowest.
class DiscreteModel {
 public:
  DiscreteModel(std::vector<std::string> names, std::vector<std::size_t> states, std::size_t max_states = ambient_dim_cap())
      : names_(std::move(names)), states_(std::move(states)) {
    if (names_.size() != states_.size()) throw ModelError("variable names and state counts differ in length");
    if (names_.size() > 20) throw ModelError("at most 20 variables are supported");
    total_ = 1;
    for (std::size_t i = 0; i < states_.size(); ++i) {
      if (states_[i] < 1) throw ModelError("variable '" + names_[i] + "' has no states");
      total_ *= states_[i];
      if (total_ > max_states)
        throw SizeGuardError("state space exceeds cap of " + std::to_string(max_states) + " configurations");
    }
    for (std::size_t i = 0; i < names_.size(); ++i)
      for (std::size_t j = i + 1; j < names_.size(); ++j)
        if (names_[i] == names_[j]) throw ModelError("duplicate variable name '" + names_[i] + "'");
    strides_.assign(states_.size(), 1);
    for (std::size_t i = states_.size(); i-- > 1;) strides_[i - 1] = strides_[i] * states_[i];
    ambient_ = AmbientSpace::euclidean(static_cast<Eigen::Index>(total_));
  }

  /// Variables named "1", "2", ...
  static DiscreteModel with_states(std::vector<std::size_t> states, std::size_t max_states = ambient_dim_cap()) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < states.size(); ++i) names.push_back(std::to_string(i + 1));
    return DiscreteModel(std::move(names), std::move(states), max_states);
  }

  std::size_t num_variables() const { return states_.size(); }
  std::size_t num_states() const { return total_; }
  std::size_t states(std::size_t var) const { return states_.at(var); }
  const std::vector<std::string>& names() const { return names_; }
  const AmbientSpace& ambient() const { return ambient_; }
  VarSet all() const { return (VarSet{1} << num_variables()) - 1; }

  std::size_t variable(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    throw ModelError("unknown variable '" + name + "'");
  }

  VarSet subset(const std::vector<std::string>& vars) const {
    VarSet s = 0;
    for (const auto& v : vars) s |= VarSet{1} << variable(v);
    return s;
  }

  /// |E_a|
  std::size_t subset_states(VarSet a) const {
    std::size_t k = 1;
    for (std::size_t i = 0; i < num_variables(); ++i)
      if (a & (VarSet{1} << i)) k *= states_[i];
    return k;
  }

  /// Index of p_a(x) in E_a (row-major over the variables of a, ascending).
  std::size_t project(std::size_t config, VarSet a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < num_variables(); ++i) {
      if (!(a & (VarSet{1} << i))) continue;
      idx = idx * states_[i] + (config / strides_[i]) % states_[i];
    }
    return idx;
  }

  std::size_t coordinate(std::size_t config, std::size_t var) const { return (config / strides_[var]) % states_[var]; }

  std::vector<std::string> subset_names(VarSet a) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < num_variables(); ++i)
      if (a & (VarSet{1} << i)) out.push_back(names_[i]);
    return out;
  }

  std::string label(VarSet a) const { return Poset::subset_label(names_, a); }

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> states_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 1;
  AmbientSpace ambient_;
};

/// Cylindric functions f = g ∘ p_a, spanned by the indicators of the fibers of p_a.
inline Subspace factor_subspace(const DiscreteModel& model, VarSet a, const Tolerance& tol = {}) {
  if (a & ~model.all()) throw ModelError("subset refers to unknown variables");
  const std::size_t n = model.num_states();
  Matrix indicators = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.subset_states(a)));
  for (std::size_t x = 0; x < n; ++x) indicators(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(model.project(x, a))) = 1.0;
  return span(model.ambient(), indicators, tol);
}

/// Factor spaces over the power-set lattice; element index = variable bitmask.
inline SubspaceFamily factor_family(const DiscreteModel& model, const Tolerance& tol = {}) {
  Poset p = Poset::power_set(model.names());
  std::vector<Subspace> spaces;
  for (VarSet a = 0; a <= model.all(); ++a) spaces.push_back(factor_subspace(model, a, tol));
  return SubspaceFamily(std::move(p), model.ambient(), std::move(spaces), tol);
}

/// Lower-set closure of a collection of variable subsets, as a sorted list.
inline std::vector<VarSet> lower_closure(const DiscreteModel& model, const std::vector<VarSet>& classes) {
  std::vector<bool> in(model.all() + 1, false);
  for (VarSet a : classes) {
    if (a & ~model.all()) throw ModelError("subset refers to unknown variables");
    for (VarSet b = a;; b = (b - 1) & a) {  // every submask of a
      in[b] = true;
      if (b == 0) break;
    }
  }
  std::vector<VarSet> out;
  for (VarSet b = 0; b <= model.all(); ++b)
    if (in[b]) out.push_back(b);
  return out;
}

/// H_A = sum of the factor spaces V(a), a in A.
inline Subspace hierarchical_subspace(const DiscreteModel& model, const std::vector<VarSet>& classes, const Tolerance& tol = {}) {
  if (classes.empty()) throw ModelError("hierarchical model needs at least one class");
  std::vector<Subspace> parts;
  for (VarSet a : lower_closure(model, classes)) parts.push_back(factor_subspace(model, a, tol));
  return join(model.ambient(), parts, tol);
}

/// phi_a stored as a function on E_a (row-major over a's variables).
struct Potential {
  std::map<VarSet, Vector> terms;

  Vector evaluate(const DiscreteModel& model) const {
    Vector total = Vector::Zero(static_cast<Eigen::Index>(model.num_states()));
    for (const auto& [a, phi] : terms) {
      if (a & ~model.all()) throw ModelError("potential term refers to unknown variables");
      if (static_cast<std::size_t>(phi.size()) != model.subset_states(a))
        throw ModelError("potential term " + model.label(a) + " has length " + std::to_string(phi.size()) +
                         ", expected " + std::to_string(model.subset_states(a)));
      for (std::size_t x = 0; x < model.num_states(); ++x)
        total(static_cast<Eigen::Index>(x)) += phi(static_cast<Eigen::Index>(model.project(x, a)));
    }
    return total;
  }
};

/// Strictly positive probability vector on E_I.
class GibbsState {
 public:
  GibbsState(const DiscreteModel& model, Vector probs) : probs_(std::move(probs)) {
    if (static_cast<std::size_t>(probs_.size()) != model.num_states())
      throw ModelError("distribution has " + std::to_string(probs_.size()) + " entries, model has " +
                       std::to_string(model.num_states()) + " configurations");
    for (Eigen::Index i = 0; i < probs_.size(); ++i)
      if (!(probs_(i) > 0.0) || !std::isfinite(probs_(i)))
        throw ModelError("distribution is not strictly positive at configuration " + std::to_string(i));
    const double sum = probs_.sum();
    if (std::abs(sum - 1.0) > 1e-12) throw ModelError("distribution sums to " + std::to_string(sum) + ", not 1");
  }

  /// Rescales a positive vector to sum to one.
  static GibbsState normalized(const DiscreteModel& model, const Vector& weights) {
    return GibbsState(model, weights / weights.sum());
  }

  const Vector& probs() const { return probs_; }
  Vector log_probs() const { return probs_.array().log().matrix(); }

 private:
  Vector probs_;
};

inline GibbsState gibbs_from_potential(const DiscreteModel& model, const Potential& pot) {
  const Vector energy = pot.evaluate(model);
  const double shift = energy.maxCoeff();
  const Vector w = (energy.array() - shift).exp().matrix();
  return GibbsState(model, w / w.sum());
}

struct FactorizationReport {
  bool factorizes = true;
  std::vector<VarSet> closure;           // lower-set closure of the classes
  std::map<VarSet, double> norms;        // ||s_a(ln P)|| for every a
  double threshold = 0.0;                // tol_factor * ||ln P||
  double max_outside = 0.0;              // max norm over a outside the closure
};

/// P is in G_A iff the interaction components of ln P outside the closure of A vanish.
inline FactorizationReport factorization_test(const DiscreteModel& model, const Decomposition& factor_decomposition,
                                              const GibbsState& p, const std::vector<VarSet>& classes,
                                              double tol_factor = 1e-8) {
  if (factor_decomposition.pieces.size() != model.all() + 2)
    throw ModelError("decomposition does not belong to this model's factor family");
  FactorizationReport rep;
  rep.closure = lower_closure(model, classes);
  std::vector<bool> inside(model.all() + 1, false);
  for (VarSet a : rep.closure) inside[a] = true;
  const Vector lnp = p.log_probs();
  rep.threshold = tol_factor * lnp.norm();
  for (VarSet a = 0; a <= model.all(); ++a) {
    const double nrm = (factor_decomposition.projectors[a].matrix() * lnp).norm();
    rep.norms[a] = nrm;
    if (!inside[a]) rep.max_outside = std::max(rep.max_outside, nrm);
  }
  rep.factorizes = rep.max_outside <= rep.threshold;
  return rep;
}

inline Decomposition factor_decomposition(const DiscreteModel& model, const Tolerance& tol = {}) {
  auto res = decompose(factor_family(model, tol), tol);
  if (!res.decomposable()) throw ModelError("factor family failed to decompose numerically");
  return std::move(*res.decomposition);
}

inline FactorizationReport factorization_test(const DiscreteModel& model, const GibbsState& p,
                                              const std::vector<VarSet>& classes, double tol_factor = 1e-8,
                                              const Tolerance& tol = {}) {
  return factorization_test(model, factor_decomposition(model, tol), p, classes, tol_factor);
}

}  // namespace idecomp
