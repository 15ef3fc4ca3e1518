#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "idecomp/chaos.hpp"
#include "idecomp/functor.hpp"
#include "idecomp/graphical.hpp"
#include "idecomp/interaction.hpp"
#include "idecomp/json_io.hpp"
#include "idecomp/linalg.hpp"
#include "idecomp/poset.hpp"

namespace idecomp::jobs {

using io::json;

enum ExitCode : int { kPass = 0, kFail = 1, kInputError = 2 };

struct Options {
  Tolerance tol;
  bool tol_rank_set = false, tol_orth_set = false, tol_proj_set = false, tol_eq_set = false;
  std::size_t max_lowersets = kDefaultMaxLowerSets;
};

struct Result {
  int exit_code = kPass;
  json report;  // canonical: sorted keys, floats at 12 significant digits
  std::string text;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Spec-level tolerance first, then command-line overrides.
inline Tolerance effective_tolerance(const json& spec, const Options& opt) {
  Tolerance tol;
  if (const json* t = io::optional_field(spec, "tolerance", "")) io::read_tolerance(*t, "/tolerance", tol);
  if (opt.tol_rank_set) tol.rank = opt.tol.rank;
  if (opt.tol_orth_set) tol.orth = opt.tol.orth;
  if (opt.tol_proj_set) tol.proj = opt.tol.proj;
  if (opt.tol_eq_set) tol.eq = opt.tol.eq;
  tol.validate();
  return tol;
}

inline json tolerance_json(const Tolerance& t) {
  return {{"rank", t.rank}, {"orth", t.orth}, {"proj", t.proj}, {"eq", t.eq}, {"pd", t.pd}};
}

inline std::string kind_of(const json& spec) {
  return io::read_string(io::require(spec, "kind", ""), "/kind");
}

/// `{"variables": [{"name": .., "states": ..}, ...]}` or `{"states": [..]}`.
inline DiscreteModel read_model(const json& j, const std::string& path) {
  std::vector<std::string> names;
  std::vector<std::size_t> states;
  if (const json* st = io::optional_field(j, "states", path)) {
    const std::string sp = io::child(path, "states");
    if (!st->is_array() || st->empty()) throw io::InputError(sp, "expected a non-empty array of state counts");
    for (std::size_t i = 0; i < st->size(); ++i) {
      states.push_back(io::read_size((*st)[i], io::child(sp, i)));
      names.push_back(std::to_string(i + 1));
    }
  } else {
    const json& vars = io::require(j, "variables", path);
    const std::string vp = io::child(path, "variables");
    if (!vars.is_array() || vars.empty()) throw io::InputError(vp, "expected a non-empty array of variables");
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const std::string ip = io::child(vp, i);
      names.push_back(io::read_string(io::require(vars[i], "name", ip), io::child(ip, "name")));
      states.push_back(io::read_size(io::require(vars[i], "states", ip), io::child(ip, "states")));
    }
  }
  try {
    return DiscreteModel(std::move(names), std::move(states));
  } catch (const ModelError& e) {
    throw io::InputError(path, e.what());
  }
}

inline VarSet read_class(const DiscreteModel& model, const json& j, const std::string& path) {
  VarSet s = 0;
  const auto vars = io::read_strings(j, path);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    try {
      s |= VarSet{1} << model.variable(vars[i]);
    } catch (const ModelError& e) {
      throw io::InputError(io::child(path, i), e.what());
    }
  }
  return s;
}

inline std::vector<VarSet> read_classes(const DiscreteModel& model, const json& j, const std::string& path) {
  if (!j.is_array()) throw io::InputError(path, "expected an array of variable lists");
  std::vector<VarSet> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_class(model, j[i], io::child(path, i)));
  return out;
}

inline SubspaceFamily read_family(const json& spec, const Tolerance& tol) {
  if (const json* fm = io::optional_field(spec, "factor_model", "")) return factor_family(read_model(*fm, "/factor_model"), tol);
  Poset p = io::read_poset(io::require(spec, "poset", ""), "/poset");
  const json& amb = io::require(spec, "ambient", "");
  const auto n = static_cast<Eigen::Index>(io::read_size(io::require(amb, "dim", "/ambient"), "/ambient/dim"));
  if (static_cast<std::size_t>(n) > ambient_dim_cap())
    throw io::InputError("/ambient/dim", "ambient dimension exceeds cap of " + std::to_string(ambient_dim_cap()));
  AmbientSpace ambient = AmbientSpace::euclidean(n);
  if (const json* g = io::optional_field(amb, "gram", "/ambient")) {
    const Matrix gram = io::read_matrix(*g, "/ambient/gram");
    if (gram.rows() != n || gram.cols() != n) throw io::InputError("/ambient/gram", "gram shape does not match dim");
    try {
      ambient = AmbientSpace(gram, tol);
    } catch (const LinalgError& e) {
      throw io::InputError("/ambient/gram", e.what());
    }
  }
  const json& gens = io::require(spec, "generators", "");
  if (!gens.is_object()) throw io::InputError("/generators", "expected an object keyed by element id");
  std::vector<Subspace> spaces;
  for (Element a = 0; a < p.size(); ++a) {
    const std::string gp = io::child("/generators", p.id(a));
    const auto it = gens.find(p.id(a));
    if (it == gens.end()) throw io::InputError(gp, "missing generators for element '" + p.id(a) + "'");
    const Matrix g = io::read_matrix(*it, gp);
    if (g.rows() != n) throw io::InputError(gp, "generators have " + std::to_string(g.rows()) + " rows, ambient dim is " + std::to_string(n));
    spaces.push_back(span(ambient, g, tol));
  }
  for (const auto& [key, val] : gens.items())
    if (!p.has(key)) throw io::InputError(io::child("/generators", key), "unknown element '" + key + "'");
  try {
    return SubspaceFamily(std::move(p), ambient, std::move(spaces), tol);
  } catch (const FamilyError& e) {
    throw io::InputError("/generators", e.what());
  }
}

inline IsometryDiagram read_diagram(const json& spec, const Tolerance& tol) {
  Poset p = io::read_poset(io::require(spec, "poset", ""), "/poset");
  const json& dj = io::require(spec, "dims", "");
  if (!dj.is_object()) throw io::InputError("/dims", "expected an object keyed by element id");
  std::vector<Eigen::Index> dims;
  for (Element a = 0; a < p.size(); ++a) {
    const auto it = dj.find(p.id(a));
    if (it == dj.end()) throw io::InputError(io::child("/dims", p.id(a)), "missing dimension for element '" + p.id(a) + "'");
    const auto d = io::read_size(*it, io::child("/dims", p.id(a)));
    if (d > ambient_dim_cap()) throw io::InputError(io::child("/dims", p.id(a)), "fiber dimension exceeds cap");
    dims.push_back(static_cast<Eigen::Index>(d));
  }
  const json& ej = io::require(spec, "edges", "");
  if (!ej.is_object()) throw io::InputError("/edges", "expected an object keyed by \"lower<upper\"");
  EdgeMap edges;
  for (const auto& [key, val] : ej.items()) {
    const std::string ep = io::child("/edges", key);
    std::optional<std::pair<Element, Element>> parsed;
    for (std::size_t pos = key.find('<'); pos != std::string::npos; pos = key.find('<', pos + 1)) {
      const std::string lo = key.substr(0, pos), hi = key.substr(pos + 1);
      if (p.has(lo) && p.has(hi)) {
        parsed = {p.index_of(lo), p.index_of(hi)};
        break;
      }
    }
    if (!parsed) throw io::InputError(ep, "edge key must be \"lower<upper\" with known element ids");
    edges[*parsed] = io::read_matrix(val, ep);
  }
  try {
    return IsometryDiagram(std::move(p), std::move(dims), edges, tol);
  } catch (const DiagramError& e) {
    throw io::InputError("/edges", e.what());
  }
}

inline json family_intersection_json(const Poset& p, const IntersectionReport& rep) {
  json w = json::array();
  for (const auto& x : rep.witnesses) w.push_back({{"a", p.id(x.a)}, {"b", p.id(x.b)}, {"gap", x.gap}});
  return {{"holds", rep.holds}, {"max_gap", rep.max_gap}, {"witnesses", std::move(w)}};
}

inline std::string witness_lines(const Poset& p, const IntersectionReport& rep) {
  std::ostringstream os;
  for (const auto& x : rep.witnesses) os << "  witness (" << p.id(x.a) << ", " << p.id(x.b) << ")  gap " << fmt(x.gap) << "\n";
  return os.str();
}

inline Result decompose_family(const json& spec, const Options& opt) {
  const Tolerance tol = effective_tolerance(spec, opt);
  const SubspaceFamily fam = read_family(spec, tol);
  const Poset& p = fam.poset();
  const DecomposeResult res = decompose(fam, tol);
  const PosetPlus plus = extend_plus(p);
  auto name = [&](Element a) { return plus.poset.id(a); };

  json dims = json::object(), pieces = json::object();
  for (Element a = 0; a < res.pieces.size(); ++a) {
    dims[name(a)] = res.pieces[a].dim();
    pieces[name(a)] = io::write_matrix(res.pieces[a].frame());
  }

  const auto mob = mobius_projections(fam);
  const Matrix id = Matrix::Identity(fam.ambient().dim(), fam.ambient().dim());
  Matrix sum_mob = Matrix::Zero(id.rows(), id.cols()), sum_orth = sum_mob;
  double mob_gap = 0.0;
  for (Element a = 0; a < mob.size(); ++a) {
    const Matrix orth = projector(res.pieces[a]).matrix();
    sum_mob += mob[a];
    sum_orth += orth;
    mob_gap = std::max(mob_gap, fam.ambient().operator_norm(mob[a] - orth));
  }
  const double sum_defect = fam.ambient().operator_norm(sum_mob - id);
  const double orth_sum_defect = fam.ambient().operator_norm(sum_orth - id);

  json verification = {{"first_mismatch", res.first_mismatch ? json(name(*res.first_mismatch)) : json(nullptr)},
                       {"max_overlap", res.max_overlap},
                       {"max_reconstruction_gap", res.max_reconstruction_gap}};
  double lower_gap = 0.0;
  if (res.decomposable()) {
    // H(B) = ⊕_{b in B} S_b for every lower set B.
    p.for_each_lower_set(LowerSet(std::vector<bool>(p.size(), true)), [&](const LowerSet& b) {
      Matrix sum = Matrix::Zero(id.rows(), id.cols());
      for (Element e : b.members()) sum += res.decomposition->projectors[e].matrix();
      lower_gap = std::max(lower_gap, fam.ambient().operator_norm(pi_of_lowerset(fam, b, tol).matrix() - sum));
    }, opt.max_lowersets);
    verification["lower_set_gap"] = lower_gap;
  }

  Result out;
  out.exit_code = res.decomposable() ? kPass : kFail;
  out.report = {{"command", "decompose"},
                {"kind", "family"},
                {"decomposable", res.decomposable()},
                {"top", name(plus.top)},
                {"dims", std::move(dims)},
                {"pieces", std::move(pieces)},
                {"intersection_property", family_intersection_json(p, res.intersection)},
                {"verification", std::move(verification)},
                {"mobius", {{"max_gap", mob_gap}, {"sum_defect", sum_defect}, {"orthogonal_sum_defect", orth_sum_defect}}},
                {"tolerance", tolerance_json(tol)}};

  std::ostringstream os;
  os << "family over " << p.size() << " elements, ambient dim " << fam.ambient().dim() << "\n";
  os << "decomposable: " << (res.decomposable() ? "yes" : "no") << "\n";
  if (res.first_mismatch) os << "  induction breaks at " << name(*res.first_mismatch) << "\n";
  os << "intersection property: " << (res.intersection.holds ? "holds" : "fails") << " (max gap "
     << fmt(res.intersection.max_gap) << ")\n"
     << witness_lines(p, res.intersection);
  os << "pieces:\n";
  for (Element a = 0; a < res.pieces.size(); ++a) os << "  S_" << name(a) << "  dim " << res.pieces[a].dim() << "\n";
  os << "mobius vs orthogonal: max gap " << fmt(mob_gap) << ", |sum s - I| " << fmt(sum_defect) << ", |sum s_perp - I| "
     << fmt(orth_sum_defect) << "\n";
  out.text = os.str();
  return out;
}

inline Result check_family(const json& spec, const Options& opt) {
  const Tolerance tol = effective_tolerance(spec, opt);
  const SubspaceFamily fam = read_family(spec, tol);
  const Poset& p = fam.poset();
  const IntersectionReport rep = check_intersection_property(fam, tol);
  Result out;
  out.exit_code = rep.holds ? kPass : kFail;
  out.report = {{"command", "check"},
                {"kind", "family"},
                {"intersection_property", family_intersection_json(p, rep)},
                {"tolerance", tolerance_json(tol)}};
  std::ostringstream os;
  os << "intersection property: " << (rep.holds ? "holds" : "fails") << " (max gap " << fmt(rep.max_gap) << ")\n"
     << witness_lines(p, rep);
  if (p.is_meet_semilattice()) {
    const IntersectionReport meet = meet_semilattice_shortcut(fam, tol);
    out.report["meet_shortcut"] = family_intersection_json(p, meet);
    os << "meet shortcut: " << (meet.holds ? "holds" : "fails") << " (max gap " << fmt(meet.max_gap) << ")\n";
  }
  out.text = os.str();
  return out;
}

inline json functor_intersection_json(const Poset& p, const FunctorIntersectionReport& rep) {
  json w = json::array();
  for (const auto& x : rep.witnesses)
    w.push_back({{"alpha", p.id(x.alpha)}, {"a", p.id(x.a)}, {"b", p.id(x.b)}, {"gap", x.gap}});
  return {{"holds", rep.holds}, {"max_gap", rep.max_gap}, {"witnesses", std::move(w)}};
}

inline std::string functor_witness_lines(const Poset& p, const FunctorIntersectionReport& rep) {
  std::ostringstream os;
  for (const auto& x : rep.witnesses)
    os << "  witness at " << p.id(x.alpha) << ": (" << p.id(x.a) << ", " << p.id(x.b) << ")  gap " << fmt(x.gap) << "\n";
  return os.str();
}

inline Result decompose_diagram(const json& spec, const Options& opt) {
  const Tolerance tol = effective_tolerance(spec, opt);
  const IsometryDiagram d = read_diagram(spec, tol);
  const Poset& p = d.poset();
  const FunctorDecomposeResult res = decompose_functor(d, tol);
  json failing = json::array();
  for (Element a : res.failing_nodes) failing.push_back(p.id(a));
  Result out;
  out.exit_code = res.decomposable() ? kPass : kFail;
  out.report = {{"command", "decompose"},
                {"kind", "diagram"},
                {"decomposable", res.decomposable()},
                {"intersection_property", functor_intersection_json(p, res.intersection)},
                {"failing_nodes", std::move(failing)},
                {"failure", res.failure},
                {"tolerance", tolerance_json(tol)}};
  std::ostringstream os;
  os << "diagram over " << p.size() << " elements\n";
  os << "decomposable: " << (res.decomposable() ? "yes" : "no") << "\n";
  if (!res.failure.empty()) os << "  " << res.failure << "\n";
  os << "intersection property: " << (res.intersection.holds ? "holds" : "fails") << " (max gap "
     << fmt(res.intersection.max_gap) << ")\n"
     << functor_witness_lines(p, res.intersection);
  if (res.decomposable()) {
    const auto& fd = *res.decomposition;
    json dims = json::object();
    os << "generating pieces:\n";
    for (Element c = 0; c < p.size(); ++c) {
      dims[p.id(c)] = fd.piece_dims()[c];
      os << "  V_" << p.id(c) << "  dim " << fd.piece_dims()[c] << "\n";
    }
    out.report["piece_dims"] = std::move(dims);
    out.report["max_iso_defect"] = fd.max_iso_defect();
    out.report["naturality_defect"] = fd.naturality_defect();
    os << "isometry defect " << fmt(fd.max_iso_defect()) << ", naturality defect " << fmt(fd.naturality_defect()) << "\n";
  }
  out.text = os.str();
  return out;
}

inline Result check_diagram(const json& spec, const Options& opt) {
  const Tolerance tol = effective_tolerance(spec, opt);
  const IsometryDiagram d = read_diagram(spec, tol);
  const Poset& p = d.poset();
  const FunctorIntersectionReport rep = check_intersection_property_functor(d, tol);
  const double compat = extend_a2(LeftCoupling(d, tol), tol).compatibility_defect(opt.max_lowersets);
  Result out;
  out.exit_code = rep.holds ? kPass : kFail;
  out.report = {{"command", "check"},
                {"kind", "diagram"},
                {"intersection_property", functor_intersection_json(p, rep)},
                {"a2_compatibility_defect", compat},
                {"tolerance", tolerance_json(tol)}};
  std::ostringstream os;
  os << "intersection property: " << (rep.holds ? "holds" : "fails") << " (max gap " << fmt(rep.max_gap) << ")\n"
     << functor_witness_lines(p, rep) << "lower-set extension compatibility defect " << fmt(compat) << "\n";
  out.text = os.str();
  return out;
}

/// `{"a,b": [values on E_{a,b}], "": [constant]}`; keys list variable names.
inline Potential read_potential(const DiscreteModel& model, const json& j, const std::string& path) {
  if (!j.is_object()) throw io::InputError(path, "expected an object keyed by comma-separated variable names");
  Potential pot;
  for (const auto& [key, val] : j.items()) {
    const std::string kp = io::child(path, key);
    std::vector<std::string> names;
    std::stringstream ss(key);
    for (std::string v; std::getline(ss, v, ',');)
      if (!v.empty()) names.push_back(v);
    VarSet a = 0;
    try {
      a = model.subset(names);
    } catch (const ModelError& e) {
      throw io::InputError(kp, e.what());
    }
    const Vector phi = io::read_vector(val, kp);
    if (static_cast<std::size_t>(phi.size()) != model.subset_states(a))
      throw io::InputError(kp, "expected " + std::to_string(model.subset_states(a)) + " values");
    if (pot.terms.count(a)) throw io::InputError(kp, "duplicate potential term");
    pot.terms[a] = phi;
  }
  return pot;
}

inline Result analyze_gibbs(const json& spec, const Options& opt) {
  const Tolerance tol = effective_tolerance(spec, opt);
  const DiscreteModel model = read_model(io::require(spec, "model", ""), "/model");
  std::optional<GibbsState> state;
  if (const json* pj = io::optional_field(spec, "potential", "")) {
    state = gibbs_from_potential(model, read_potential(model, *pj, "/potential"));
  } else {
    const Vector probs = io::read_vector(io::require(spec, "distribution", ""), "/distribution");
    try {
      state.emplace(model, probs);
    } catch (const ModelError& e) {
      throw io::InputError("/distribution", e.what());
    }
  }
  const auto classes = read_classes(model, io::require(spec, "classes", ""), "/classes");
  double tol_factor = 1e-8;
  if (const json* tf = io::optional_field(spec, "tol_factor", "")) {
    tol_factor = io::read_number(*tf, "/tol_factor");
    if (!(tol_factor > 0)) throw io::InputError("/tol_factor", "must be positive");
  }
  const FactorizationReport rep = factorization_test(model, *state, classes, tol_factor, tol);
  json norms = json::object(), closure = json::array();
  for (const auto& [a, v] : rep.norms) norms[model.label(a)] = v;
  for (VarSet a : rep.closure) closure.push_back(model.label(a));
  Result out;
  out.exit_code = rep.factorizes ? kPass : kFail;
  out.report = {{"command", "analyze-gibbs"},
                {"kind", "gibbs"},
                {"factorizes", rep.factorizes},
                {"closure", std::move(closure)},
                {"norms", std::move(norms)},
                {"threshold", rep.threshold},
                {"max_outside", rep.max_outside},
                {"tol_factor", tol_factor},
                {"tolerance", tolerance_json(tol)}};
  std::ostringstream os;
  os << "factorizes: " << (rep.factorizes ? "yes" : "no") << " (max norm outside closure " << fmt(rep.max_outside)
     << ", threshold " << fmt(rep.threshold) << ")\n";
  std::vector<bool> inside(model.all() + 1, false);
  for (VarSet a : rep.closure) inside[a] = true;
  for (const auto& [a, v] : rep.norms) os << "  " << (inside[a] ? " " : "*") << " " << model.label(a) << "  " << fmt(v) << "\n";
  out.text = os.str();
  return out;
}

inline GaussianModel read_gaussian(const json& spec, const Tolerance& tol) {
  const json& sj = io::require(spec, "sites", "");
  std::vector<std::string> names;
  if (sj.is_array()) {
    names = io::read_strings(sj, "/sites");
  } else {
    const auto n = io::read_size(sj, "/sites");
    for (std::size_t i = 0; i < n; ++i) names.push_back("s" + std::to_string(i + 1));
  }
  Matrix cov = Matrix::Identity(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(names.size()));
  if (const json* cj = io::optional_field(spec, "covariance", "")) cov = io::read_matrix(*cj, "/covariance");
  try {
    return GaussianModel(std::move(names), std::move(cov), tol);
  } catch (const ChaosError& e) {
    throw io::InputError("/covariance", e.what());
  }
}

inline Result expand_chaos(const json& spec, const Options& opt) {
  const Tolerance tol = effective_tolerance(spec, opt);
  const GaussianModel model = read_gaussian(spec, tol);
  std::vector<Monomial> targets;
  std::size_t max_degree = 0;
  if (const json* ej = io::optional_field(spec, "expand", "")) {
    const auto texts = io::read_strings(*ej, "/expand");
    for (std::size_t i = 0; i < texts.size(); ++i) {
      try {
        targets.push_back(parse_monomial(model, texts[i]));
      } catch (const ChaosError& e) {
        throw io::InputError(io::child("/expand", i), e.what());
      }
      max_degree = std::max(max_degree, targets.back().degree());
    }
  }
  if (const json* mj = io::optional_field(spec, "max_degree", "")) {
    const auto m = io::read_size(*mj, "/max_degree");
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (targets[i].degree() > m) throw io::InputError(io::child("/expand", i), "monomial degree exceeds max_degree");
    max_degree = m;
  }
  const ChaosBasis basis(model, max_degree, tol);
  const auto pieces = chaos_pieces(basis, tol);

  json dims = json::array(), expansions = json::array();
  for (const auto& s : pieces) dims.push_back(s.dim());
  std::ostringstream os;
  os << "chaos over " << model.num_sites() << " sites up to degree " << max_degree << "; piece dims:";
  for (const auto& s : pieces) os << " " << s.dim();
  os << "\n";
  for (const auto& x : targets) {
    const Vector c = hermite_ito(basis, x, tol);
    // Coefficients below the rank tolerance relative to the largest are roundoff.
    const double cut = tol.rank * std::max(1.0, c.cwiseAbs().maxCoeff());
    json coeffs = json::object();
    os << ":" << monomial_label(model, x) << ": =";
    bool first = true;
    for (std::size_t k = 0; k < basis.monomials().size(); ++k) {
      const double v = c(static_cast<Eigen::Index>(k));
      if (std::abs(v) <= cut) continue;
      const std::string lbl = monomial_label(model, basis.monomials()[k]);
      coeffs[lbl] = v;
      os << (first ? " " : (v < 0 ? " - " : " + ")) << fmt(first ? v : std::abs(v)) << (lbl == "1" ? "" : "*" + lbl);
      first = false;
    }
    if (first) os << " 0";
    os << "\n";
    expansions.push_back({{"monomial", monomial_label(model, x)}, {"coefficients", std::move(coeffs)}});
  }
  Result out;
  out.report = {{"command", "chaos"},
                {"kind", "chaos"},
                {"max_degree", max_degree},
                {"piece_dims", std::move(dims)},
                {"expansions", std::move(expansions)},
                {"tolerance", tolerance_json(tol)}};
  out.text = os.str();
  return out;
}

inline Result finish(Result r, const json& spec) {
  r.report["spec_hash"] = io::spec_hash(spec);
  r.report = io::canonical(r.report);
  return r;
}

}  // namespace detail

/// Dispatches one job. Input problems become exit code 2 with an error
/// report; nothing escapes as an exception.
inline Result run(const std::string& command, const json& spec, const Options& opt = {}) {
  try {
    if (!spec.is_object()) throw io::InputError("", "expected a JSON object");
    const std::string kind = io::optional_field(spec, "kind", "") ? detail::kind_of(spec) : std::string{};
    auto expect = [&](std::initializer_list<const char*> kinds) {
      for (const char* k : kinds)
        if (kind == k) return;
      std::string allowed;
      for (const char* k : kinds) allowed += (allowed.empty() ? "" : ", ") + std::string(k);
      throw io::InputError("/kind", "command '" + command + "' accepts kind " + allowed + ", got '" + kind + "'");
    };
    if (command == "decompose") {
      expect({"family", "diagram"});
      return detail::finish(kind == "family" ? detail::decompose_family(spec, opt) : detail::decompose_diagram(spec, opt), spec);
    }
    if (command == "check") {
      expect({"family", "diagram"});
      return detail::finish(kind == "family" ? detail::check_family(spec, opt) : detail::check_diagram(spec, opt), spec);
    }
    if (command == "analyze-gibbs") {
      expect({"gibbs"});
      return detail::finish(detail::analyze_gibbs(spec, opt), spec);
    }
    if (command == "chaos") {
      expect({"chaos"});
      return detail::finish(detail::expand_chaos(spec, opt), spec);
    }
    throw io::InputError("", "unknown command '" + command + "'");
  } catch (const io::InputError& e) {
    Result r;
    r.exit_code = kInputError;
    r.report = {{"command", command}, {"error", e.what()}, {"pointer", e.pointer()}};
    r.text = std::string("input error: ") + e.what() + "\n";
    return r;
  } catch (const std::exception& e) {
    // Remaining library errors (caps, degenerate input) are input problems too.
    Result r;
    r.exit_code = kInputError;
    r.report = {{"command", command}, {"error", e.what()}, {"pointer", ""}};
    r.text = std::string("input error: ") + e.what() + "\n";
    return r;
  }
}

}  // namespace idecomp::jobs
