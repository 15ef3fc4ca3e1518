// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "idecomp/idecomp.hpp"
#include "support/generators.hpp"

namespace {

using namespace idecomp;
using idecomp::testing::Rng;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

/// Collected by criteria 1 and 3 for criterion 4.
std::vector<SubspaceFamily> g_decomposable;

/// Independent check of a claimed decomposition: pairwise orthogonality of
/// the piece projectors and sum_{b<=a} P_b = pi_a (identity at the top).
void verify_decomposition(const SubspaceFamily& fam, const Decomposition& d, double tol, Outcome& o, const std::string& tag) {
  const AmbientSpace& amb = fam.ambient();
  const Poset& p = fam.poset();
  const std::size_t n = d.projectors.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double ov = amb.operator_norm(d.projectors[a].matrix() * d.projectors[b].matrix());
      if (ov > tol) fail(o, tag + ": pieces not orthogonal (" + std::to_string(ov) + ")");
    }
  const Matrix id = Matrix::Identity(amb.dim(), amb.dim());
  for (Element a = 0; a <= p.size(); ++a) {
    Matrix sum = Matrix::Zero(amb.dim(), amb.dim());
    for (Element b = 0; b <= p.size(); ++b)
      if (a == p.size() || (b < p.size() && p.leq(b, a))) sum += d.projectors[b].matrix();
    const Matrix target = a == p.size() ? id : projector(fam.at(a)).matrix();
    const double gap = amb.operator_norm(sum - target);
    if (gap > tol) fail(o, tag + ": reconstruction gap " + std::to_string(gap));
  }
}

Outcome criterion1() {
  Outcome o;
  Rng rng(1001);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  std::uniform_real_distribution<double> density(0.1, 0.7);
  int failures = 0;
  for (int trial = 0; trial < 240; ++trial) {
    const Poset p = idecomp::testing::random_poset(rng, size(rng), density(rng));
    const bool synth = trial % 2 == 0;
    const bool weighted = trial % 4 < 2;
    const std::string tag = "family " + std::to_string(trial);
    const SubspaceFamily fam = synth ? idecomp::testing::decomposable_family(rng, p, 16, weighted).family
                                     : idecomp::testing::perturbed_family(rng, p, 16, 0.3, weighted);
    if (fam.ambient().dim() > 16) fail(o, tag + ": ambient dim above 16");
    const auto res = decompose(fam);
    const auto rep = check_intersection_property(fam);
    if (rep.holds != res.decomposable()) fail(o, tag + ": (I) and decompose disagree");
    if (synth && !res.decomposable()) fail(o, tag + ": synthesized decomposable family rejected");
    if (res.decomposable()) {
      verify_decomposition(fam, *res.decomposition, 1e-8, o, tag);
      g_decomposable.push_back(fam);
    } else {
      ++failures;
    }
  }
  o.detail = o.pass ? "240 families, " + std::to_string(failures) + " non-decomposable, all verdicts agree" : o.detail;
  if (o.pass && failures == 0) fail(o, "perturbation never produced a non-decomposable family");
  return o;
}

Outcome criterion2() {
  Outcome o;
  Rng rng(2002);
  std::uniform_int_distribution<std::size_t> size(1, 6);
  std::uniform_real_distribution<double> density(0.2, 0.7);
  int failures = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const Poset p = idecomp::testing::random_poset(rng, size(rng), density(rng));
    const std::string tag = "diagram " + std::to_string(trial);
    if (trial % 3 != 2) {
      const auto syn = idecomp::testing::synthetic_diagram(rng, p, 2, 12);
      const auto res = decompose_functor(syn.diagram);
      if (res.intersection.holds != res.decomposable()) fail(o, tag + ": (I') and decompose disagree");
      if (!res.decomposable()) {
        fail(o, tag + ": synthesized diagram rejected: " + res.failure);
        continue;
      }
      const auto& fd = *res.decomposition;
      for (Element c = 0; c < p.size(); ++c)
        if (fd.piece_dims()[c] != syn.piece_dims[c]) fail(o, tag + ": generating piece dim mismatch");
      for (Element a = 0; a < p.size(); ++a) {
        const Matrix& phi = fd.natural_iso(a);
        const Eigen::Index k = phi.cols();
        const double d1 = spectral_norm(phi.transpose() * phi - Matrix::Identity(k, k));
        const double d2 = spectral_norm(phi * phi.transpose() - Matrix::Identity(phi.rows(), phi.rows()));
        if (d1 > 1e-8 || d2 > 1e-8) fail(o, tag + ": natural map not isometric");
      }
      // Naturality recomputed from the edges: phi_a G(b<a) = incl * phi_b.
      for (const auto& [b, a] : p.cover_pairs()) {
        Matrix incl = Matrix::Zero(syn.diagram.dim(a), syn.diagram.dim(b));
        for (const auto& [c, col] : fd.blocks(b))
          for (const auto& [rc, row] : fd.blocks(a))
            if (rc == c) incl.block(row, col, fd.piece_dims()[c], fd.piece_dims()[c]) = fd.transport(c, b, a);
        const double nat = spectral_norm(fd.natural_iso(a) * syn.diagram.map(b, a) - incl * fd.natural_iso(b));
        if (nat > 1e-8) fail(o, tag + ": naturality defect " + std::to_string(nat));
      }
    } else {
      const auto fam = idecomp::testing::perturbed_family(rng, p, 12, 0.3, false);
      const auto res = decompose_functor(idecomp::testing::diagram_from_family(fam));
      if (res.intersection.holds != res.decomposable()) fail(o, tag + ": (I') and decompose disagree");
      if (!res.decomposable()) ++failures;
    }
  }
  if (o.pass) o.detail = "120 diagrams, " + std::to_string(failures) + " non-decomposable, all verdicts agree";
  if (o.pass && failures == 0) fail(o, "no non-decomposable diagram was generated");
  return o;
}

Outcome criterion3() {
  Outcome o;
  auto check = [&](const std::vector<std::size_t>& states) {
    const auto model = DiscreteModel::with_states(states);
    const auto fam = factor_family(model);
    const auto res = decompose(fam);
    if (!res.decomposable()) return fail(o, "factor family failed to decompose");
    verify_decomposition(fam, *res.decomposition, 1e-8, o, "factor family");
    g_decomposable.push_back(fam);
    Eigen::Index total = 0;
    for (VarSet a = 0; a <= model.all(); ++a) {
      Eigen::Index expect = 1;
      for (std::size_t i = 0; i < states.size(); ++i)
        if (a & (VarSet{1} << i)) expect *= static_cast<Eigen::Index>(states[i] - 1);
      const Eigen::Index got = res.pieces[a].dim();
      if (got != expect) fail(o, "dim S_" + model.label(a) + " = " + std::to_string(got) + ", expected " + std::to_string(expect));
      total += got;
    }
    if (res.pieces.back().dim() != 0) fail(o, "top piece is not zero");
    if (total != static_cast<Eigen::Index>(model.num_states())) fail(o, "piece dims do not sum to |E|");
  };
  check({2, 2, 2});
  check({2, 3, 4});
  if (o.pass) o.detail = "binary: 8 pieces of dim 1; (2,3,4): dims match products";
  return o;
}

Outcome criterion4() {
  Outcome o;
  double worst = 0.0;
  for (const auto& fam : g_decomposable) worst = std::max(worst, mobius_orthogonal_gap(fam));
  if (worst > 1e-7) fail(o, "Mobius gap " + std::to_string(worst) + " on a decomposable instance");

  const Poset v = Poset::from_relation({"0", "0'", "2"}, std::vector<std::pair<std::string, std::string>>{{"0", "2"}, {"0'", "2"}});
  const AmbientSpace plane = AmbientSpace::euclidean(2);
  Matrix l0(2, 1), l1(2, 1);
  l0 << 1, 0;
  l1 << 1, 1;
  const SubspaceFamily two_lines(v, plane, {span(plane, l0), span(plane, l1), Subspace::whole(plane)});
  const auto mob = mobius_projections(two_lines);
  const auto pieces = interaction_subspaces(two_lines);
  Matrix sum = Matrix::Zero(2, 2), sum_orth = Matrix::Zero(2, 2);
  for (std::size_t a = 0; a < mob.size(); ++a) {
    sum += mob[a];
    sum_orth += projector(pieces[a]).matrix();
  }
  const double d = spectral_norm(sum - Matrix::Identity(2, 2));
  const double d_orth = spectral_norm(sum_orth - Matrix::Identity(2, 2));
  if (d > 1e-10) fail(o, "Mobius sum defect " + std::to_string(d));
  if (d_orth < 0.1) fail(o, "orthogonal sum defect only " + std::to_string(d_orth));
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu instances, max gap %.2e; counterexample |sum s - I| = %.1e, |sum s_perp - I| = %.3f",
                g_decomposable.size(), worst, d, d_orth);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome criterion5() {
  Outcome o;
  Rng rng(5005);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const DiscreteModel model({"1", "2", "3"}, {2, 2, 2});
  const Decomposition dec = factor_decomposition(model);
  const std::vector<VarSet> pairs = {model.subset({"1", "2"}), model.subset({"2", "3"})};
  const std::vector<VarSet> singles = {model.subset({"1"}), model.subset({"2"}), model.subset({"3"})};
  double worst_pass = 0.0, weakest_fail = 1e300;
  for (int draw = 0; draw < 20; ++draw) {
    // P(x1) P(x2|x1) P(x3|x2) with positive random tables.
    Vector p1(2), t12(4), t23(4);
    for (int i = 0; i < 2; ++i) p1(i) = u(rng);
    for (int i = 0; i < 4; ++i) t12(i) = u(rng), t23(i) = u(rng);
    Vector probs(8);
    for (std::size_t x = 0; x < 8; ++x) {
      const auto a = model.coordinate(x, 0), b = model.coordinate(x, 1), c = model.coordinate(x, 2);
      const double c12 = t12(static_cast<Eigen::Index>(2 * a + b)) / (t12(static_cast<Eigen::Index>(2 * a)) + t12(static_cast<Eigen::Index>(2 * a + 1)));
      const double c23 = t23(static_cast<Eigen::Index>(2 * b + c)) / (t23(static_cast<Eigen::Index>(2 * b)) + t23(static_cast<Eigen::Index>(2 * b + 1)));
      probs(static_cast<Eigen::Index>(x)) = p1(static_cast<Eigen::Index>(a)) / (p1(0) + p1(1)) * c12 * c23;
    }
    const auto state = GibbsState::normalized(model, probs);
    const auto pass = factorization_test(model, dec, state, pairs, 1e-8);
    const auto single = factorization_test(model, dec, state, singles, 1e-8);
    worst_pass = std::max(worst_pass, pass.max_outside / state.log_probs().norm());
    weakest_fail = std::min(weakest_fail, single.max_outside);
    if (!pass.factorizes) fail(o, "draw " + std::to_string(draw) + " fails the chain classes");
    if (single.factorizes || single.max_outside < 1e-3) fail(o, "draw " + std::to_string(draw) + " passes singletons");
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "20 chains; max relative off-class norm %.1e, min singleton violation %.3g", worst_pass, weakest_fail);
  if (o.pass) o.detail = buf;
  return o;
}

/// He_m coefficients from He_{k+1} = x He_k - k He_{k-1}.
std::vector<double> hermite_he(std::size_t m) {
  std::vector<double> prev{1.0}, cur{0.0, 1.0};
  if (m == 0) return prev;
  for (std::size_t k = 1; k < m; ++k) {
    std::vector<double> next(k + 2, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= static_cast<double>(k) * prev[i];
    prev = cur;
    cur = next;
  }
  return cur;
}

Monomial power(std::size_t site, std::size_t m) { return Monomial(std::vector<std::size_t>(m, site)); }

Outcome criterion6() {
  Outcome o;
  double worst = 0.0;
  const auto one = GaussianModel::standard(1);
  for (std::size_t m = 0; m <= 8; ++m) {
    const Polynomial h = hermite_ito(one, power(0, m));
    const auto he = hermite_he(m);
    for (const auto& [mono, c] : h)
      if (mono.degree() > m) fail(o, "He_" + std::to_string(m) + " has a term above its degree");
    for (std::size_t k = 0; k <= m; ++k) {
      const auto it = h.find(power(0, k));
      worst = std::max(worst, std::abs((it == h.end() ? 0.0 : it->second) - he[k]));
    }
  }
  if (worst > 1e-8) fail(o, "Hermite coefficient error " + std::to_string(worst));

  // :x1^a x2^b: = He_a(x1) He_b(x2), compared coefficientwise.
  double worst_prod = 0.0;
  const auto two = GaussianModel::standard(2);
  for (std::size_t m1 = 0; m1 <= 4; ++m1)
    for (std::size_t m2 = 0; m2 <= 4; ++m2) {
      const Polynomial h = hermite_ito(two, power(0, m1) * power(1, m2));
      const auto h1 = hermite_he(m1), h2 = hermite_he(m2);
      for (std::size_t i = 0; i <= m1; ++i)
        for (std::size_t j = 0; j <= m2; ++j) {
          const double want = h1[i] * h2[j];
          const auto it = h.find(power(0, i) * power(1, j));
          worst_prod = std::max(worst_prod, std::abs((it == h.end() ? 0.0 : it->second) - want));
        }
      for (const auto& [mono, c] : h) {
        const auto counts = mono.counts(2);
        if ((counts[0] > m1 || counts[1] > m2) && std::abs(c) > 1e-8) worst_prod = std::max(worst_prod, std::abs(c));
      }
    }
  if (worst_prod > 1e-8) fail(o, "product rule error " + std::to_string(worst_prod));
  char buf[128];
  std::snprintf(buf, sizeof buf, "He_0..He_8 max error %.1e; product rule max error %.1e", worst, worst_prod);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome criterion7() {
  Outcome o;
  Rng rng(7007);
  int failing = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<std::string> items = trial % 2 ? std::vector<std::string>{"x", "y", "z"} : std::vector<std::string>{"x", "y"};
    const Poset p = Poset::power_set(items);
    const SubspaceFamily fam = trial % 5 < 2 ? idecomp::testing::decomposable_family(rng, p, 16, trial % 3 == 0).family
                                             : idecomp::testing::perturbed_family(rng, p, 16, 0.3, trial % 3 == 0);
    const bool general = check_intersection_property(fam).holds;
    const bool shortcut = meet_semilattice_shortcut(fam).holds;
    if (general != shortcut) fail(o, "instance " + std::to_string(trial) + ": shortcut and general verdicts differ");
    if (shortcut != decompose(fam).decomposable()) fail(o, "instance " + std::to_string(trial) + ": shortcut and decompose differ");
    failing += !general;
  }
  if (o.pass) o.detail = "50 power-set families, " + std::to_string(failing) + " failing, zero disagreements";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // 0 = no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {"1 family equivalence", criterion1, 10.0}, {"2 diagram equivalence", criterion2, 30.0},
      {"3 factor spaces", criterion3, 1.0},        {"4 Mobius identity", criterion4, 0.0},
      {"5 Gibbs factorization", criterion5, 0.0}, {"6 Hermite-Ito", criterion6, 5.0},
      {"7 meet shortcut", criterion7, 0.0},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      fail(o, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) fail(o, "took " + std::to_string(secs) + " s");
    all = all && o.pass;
    std::printf("%s  criterion %s  (%.2f s)  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
  }
  return all ? 0 : 1;
}
