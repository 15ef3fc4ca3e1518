#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idecomp/jobs.hpp"

namespace {

using idecomp::io::json;
namespace jobs = idecomp::jobs;

struct Args {
  std::string input;
  std::string format = "json";
  std::optional<double> tol_rank, tol_orth, tol_proj, tol_eq;
  std::size_t max_lowersets = idecomp::kDefaultMaxLowerSets;
  // analyze-gibbs
  std::string model, dist, classes;
  // chaos
  std::optional<std::size_t> sites, max_degree;
  std::string cov;
  std::vector<std::string> expand;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("--format", a.format, "Report format")->check(CLI::IsMember({"json", "text"}));
  sub->add_option("--tol-rank", a.tol_rank, "Relative singular-value rank threshold")->check(CLI::PositiveNumber);
  sub->add_option("--tol-orth", a.tol_orth, "Frame and isometry orthonormality threshold")->check(CLI::PositiveNumber);
  sub->add_option("--tol-proj", a.tol_proj, "Projector identity threshold")->check(CLI::PositiveNumber);
  sub->add_option("--tol-eq", a.tol_eq, "Subspace equality threshold")->check(CLI::PositiveNumber);
  sub->add_option("--max-lowersets", a.max_lowersets, "Cap on lower-set enumeration")->check(CLI::PositiveNumber);
}

jobs::Options options_from(const Args& a) {
  jobs::Options o;
  if (a.tol_rank) o.tol.rank = *a.tol_rank, o.tol_rank_set = true;
  if (a.tol_orth) o.tol.orth = *a.tol_orth, o.tol_orth_set = true;
  if (a.tol_proj) o.tol.proj = *a.tol_proj, o.tol_proj_set = true;
  if (a.tol_eq) o.tol.eq = *a.tol_eq, o.tol_eq_set = true;
  o.max_lowersets = a.max_lowersets;
  return o;
}

json gibbs_spec(const Args& a) {
  if (!a.input.empty()) return idecomp::io::load_file(a.input);
  if (a.model.empty() || a.dist.empty() || a.classes.empty())
    throw idecomp::io::InputError("", "analyze-gibbs needs --input or all of --model, --dist, --classes");
  return {{"kind", "gibbs"},
          {"model", idecomp::io::load_file(a.model)},
          {"distribution", idecomp::io::load_file(a.dist)},
          {"classes", idecomp::io::load_file(a.classes)}};
}

json chaos_spec(const Args& a) {
  if (!a.input.empty()) return idecomp::io::load_file(a.input);
  if (!a.sites) throw idecomp::io::InputError("", "chaos needs --input or --sites");
  json spec = {{"kind", "chaos"}, {"sites", *a.sites}, {"expand", a.expand}};
  if (!a.cov.empty()) spec["covariance"] = idecomp::io::load_file(a.cov);
  if (a.max_degree) spec["max_degree"] = *a.max_degree;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interaction decomposition of poset-indexed subspace families and isometry diagrams"};
  app.require_subcommand(1);
  Args a;

  auto* dec = app.add_subcommand("decompose", "Decompose a subspace family or isometry diagram");
  dec->add_option("--input", a.input, "Job spec (JSON)")->required();
  add_common(dec, a);

  auto* chk = app.add_subcommand("check", "Test the intersection property");
  chk->add_option("--input", a.input, "Job spec (JSON)")->required();
  add_common(chk, a);

  auto* gib = app.add_subcommand("analyze-gibbs", "Test whether a distribution factorizes over a hierarchical model");
  gib->add_option("--input", a.input, "Combined job spec (JSON)");
  gib->add_option("--model", a.model, "Model (JSON)");
  gib->add_option("--dist", a.dist, "Distribution as a flat row-major array (JSON)");
  gib->add_option("--classes", a.classes, "Classes as arrays of variable names (JSON)");
  add_common(gib, a);

  auto* cha = app.add_subcommand("chaos", "Hermite-Ito expansions over a finite Gaussian model");
  cha->add_option("--input", a.input, "Combined job spec (JSON)");
  cha->add_option("--sites", a.sites, "Number of sites s1..sn");
  cha->add_option("--cov", a.cov, "Covariance matrix (JSON)");
  cha->add_option("--max-degree", a.max_degree, "Degree cap");
  cha->add_option("--expand", a.expand, "Monomial such as s1*s1*s2")->take_all();
  add_common(cha, a);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return jobs::kInputError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  jobs::Result r;
  try {
    json spec;
    if (command == "analyze-gibbs") spec = gibbs_spec(a);
    else if (command == "chaos") spec = chaos_spec(a);
    else spec = idecomp::io::load_file(a.input);
    r = jobs::run(command, spec, options_from(a));
  } catch (const idecomp::io::InputError& e) {
    r.exit_code = jobs::kInputError;
    r.report = {{"command", command}, {"error", e.what()}, {"pointer", e.pointer()}};
    r.text = std::string("input error: ") + e.what() + "\n";
  }
  if (a.format == "json") std::cout << r.report.dump(2) << "\n";
  else (r.exit_code == jobs::kInputError ? std::cerr : std::cout) << r.text;
  return r.exit_code;
}
