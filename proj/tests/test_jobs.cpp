#include <gtest/gtest.h>

#include <string>

#include "idecomp/jobs.hpp"

namespace {

using namespace idecomp;
using io::json;

#ifndef IDECOMP_SAMPLES_DIR
#error "IDECOMP_SAMPLES_DIR must be defined"
#endif

json sample(const std::string& name) { return io::load_file(std::string(IDECOMP_SAMPLES_DIR) + "/" + name); }

TEST(Jobs, CounterexampleFailsWithWitness) {
  const auto r = jobs::run("decompose", sample("two_minimal_under_top.json"));
  EXPECT_EQ(r.exit_code, jobs::kFail);
  const auto& w = r.report["intersection_property"]["witnesses"];
  ASSERT_FALSE(w.empty());
  EXPECT_EQ(w[0]["a"], "0");
  EXPECT_EQ(w[0]["b"], "0'");
  EXPECT_FALSE(r.report["decomposable"].get<bool>());
  EXPECT_LE(r.report["mobius"]["sum_defect"].get<double>(), 1e-10);
  EXPECT_GE(r.report["mobius"]["orthogonal_sum_defect"].get<double>(), 0.1);
  EXPECT_EQ(jobs::run("check", sample("two_minimal_under_top.json")).exit_code, jobs::kFail);
}

TEST(Jobs, FactorFamilyHasEightUnitPieces) {
  const auto r = jobs::run("decompose", sample("factor_family_3bin.json"));
  EXPECT_EQ(r.exit_code, jobs::kPass);
  const auto& dims = r.report["dims"];
  int ones = 0;
  for (const auto& [k, v] : dims.items()) {
    if (k == r.report["top"]) EXPECT_EQ(v, 0);
    else ones += v == 1;
  }
  EXPECT_EQ(ones, 8);
  EXPECT_LE(r.report["verification"]["lower_set_gap"].get<double>(), 1e-8);
  const auto c = jobs::run("check", sample("factor_family_3bin.json"));
  EXPECT_EQ(c.exit_code, jobs::kPass);
  EXPECT_TRUE(c.report["meet_shortcut"]["holds"].get<bool>());
}

TEST(Jobs, WeightedInnerProduct) {
  const auto r = jobs::run("decompose", sample("weighted_square.json"));
  EXPECT_EQ(r.exit_code, jobs::kPass) << r.text;
  EXPECT_EQ(r.report["dims"]["{x,y}"], 1);
  EXPECT_EQ(r.report["dims"]["1"], 1);
}

TEST(Jobs, CycleIsInputError) {
  const auto r = jobs::run("decompose", sample("cycle.json"));
  EXPECT_EQ(r.exit_code, jobs::kInputError);
  EXPECT_EQ(r.report["pointer"], "/poset");
}

TEST(Jobs, SchemaErrorsCarryPointers) {
  json spec = sample("two_minimal_under_top.json");
  spec["generators"]["0"]["data"] = {1, "x"};
  auto r = jobs::run("decompose", spec);
  EXPECT_EQ(r.exit_code, jobs::kInputError);
  EXPECT_EQ(r.report["pointer"], "/generators/0/data/1");

  spec = sample("two_minimal_under_top.json");
  spec["generators"].erase("0'");
  r = jobs::run("decompose", spec);
  EXPECT_EQ(r.report["pointer"], "/generators/0'");

  spec = sample("two_minimal_under_top.json");
  spec["generators"]["2"] = {{1}, {0}};
  r = jobs::run("decompose", spec);
  EXPECT_EQ(r.exit_code, jobs::kInputError);  // not increasing

  r = jobs::run("decompose", json{{"kind", "bogus"}});
  EXPECT_EQ(r.report["pointer"], "/kind");
  r = jobs::run("decompose", json::array());
  EXPECT_EQ(r.exit_code, jobs::kInputError);

  spec = sample("diagram_chain.json");
  spec["edges"]["0<1"]["data"] = {1, 1};
  r = jobs::run("decompose", spec);
  EXPECT_EQ(r.exit_code, jobs::kInputError);
  EXPECT_EQ(r.report["pointer"], "/edges");

  spec = sample("diagram_chain.json");
  spec["edges"]["0<7"] = spec["edges"]["0<1"];
  r = jobs::run("decompose", spec);
  EXPECT_EQ(r.report["pointer"], "/edges/0<7");
}

TEST(Jobs, ReportsAreDeterministicAndCanonical) {
  const json spec = sample("two_minimal_under_top.json");
  const auto a = jobs::run("decompose", spec);
  const auto b = jobs::run("decompose", spec);
  EXPECT_EQ(a.report.dump(2), b.report.dump(2));
  EXPECT_EQ(a.report["spec_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(a.report["spec_hash"], io::spec_hash(spec));
  json other = spec;
  other["ambient"]["dim"] = 3;
  EXPECT_NE(io::spec_hash(other), io::spec_hash(spec));
}

TEST(Jobs, Canonicalization) {
  EXPECT_EQ(io::round12(0.1 + 0.2), 0.3);
  EXPECT_EQ(io::round12(-0.0), 0.0);
  EXPECT_EQ(io::canonical(json{{"x", 1.0 / 3.0}}).dump(), "{\"x\":0.333333333333}");
  // Published FNV-1a-64 test vectors.
  EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Jobs, MatrixFormats) {
  const Matrix a = io::read_matrix(json::parse(R"({"dim": [2, 3], "data": [1, 2, 3, 4, 5, 6]})"), "");
  const Matrix b = io::read_matrix(json::parse("[[1, 2, 3], [4, 5, 6]]"), "");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a(1, 0), 4.0);
  EXPECT_EQ(io::read_matrix(io::write_matrix(a), ""), a);
  EXPECT_THROW(io::read_matrix(json::parse("[[1, 2], [3]]"), ""), io::InputError);
  EXPECT_THROW(io::read_matrix(json::parse(R"({"dim": [2, 2], "data": [1]})"), ""), io::InputError);
}

TEST(Jobs, PosetFormats) {
  EXPECT_EQ(io::read_poset(json::parse(R"({"power_set_of": ["a", "b"]})"), "").size(), 4u);
  EXPECT_EQ(io::read_poset(json::parse(R"({"chain": 3})"), "").size(), 3u);
  try {
    io::read_poset(json::parse(R"({"elements": ["a"], "covers": [["a", "b"]]})"), "/poset");
    FAIL();
  } catch (const io::InputError& e) {
    EXPECT_EQ(e.pointer(), "/poset/covers/0");
  }
}

TEST(Jobs, ToleranceOverrides) {
  json spec = sample("two_minimal_under_top.json");
  spec["tolerance"] = {{"proj", 1.0}, {"eq", 1.0}};
  auto r = jobs::run("check", spec);
  EXPECT_EQ(r.exit_code, jobs::kPass);  // gap 0.707 is below a tolerance of 1
  jobs::Options opt;
  opt.tol.proj = 1e-8;
  opt.tol_proj_set = true;
  r = jobs::run("check", spec, opt);
  EXPECT_EQ(r.exit_code, jobs::kFail);
  spec["tolerance"] = {{"proj", -1.0}};
  EXPECT_EQ(jobs::run("check", spec).exit_code, jobs::kInputError);
  spec["tolerance"] = {{"bogus", 1.0}};
  EXPECT_EQ(jobs::run("check", spec).report["pointer"], "/tolerance/bogus");
}

TEST(Jobs, Diagram) {
  const auto r = jobs::run("decompose", sample("diagram_chain.json"));
  EXPECT_EQ(r.exit_code, jobs::kPass) << r.text;
  EXPECT_EQ(r.report["piece_dims"]["0"], 1);
  EXPECT_EQ(r.report["piece_dims"]["1"], 1);
  EXPECT_EQ(r.report["piece_dims"]["2"], 1);
  const auto c = jobs::run("check", sample("diagram_chain.json"));
  EXPECT_EQ(c.exit_code, jobs::kPass);
  EXPECT_LE(c.report["a2_compatibility_defect"].get<double>(), 1e-8);
  jobs::Options tiny;
  tiny.max_lowersets = 1;
  EXPECT_EQ(jobs::run("check", sample("diagram_chain.json"), tiny).exit_code, jobs::kInputError);
}

TEST(Jobs, Gibbs) {
  json spec = {{"kind", "gibbs"},
               {"model", sample("chain_model.json")},
               {"distribution", sample("chain_dist.json")},
               {"classes", sample("chain_pairs.json")}};
  auto r = jobs::run("analyze-gibbs", spec);
  EXPECT_EQ(r.exit_code, jobs::kPass) << r.text;
  EXPECT_EQ(r.report["closure"].size(), 6u);
  spec["classes"] = sample("singletons.json");
  r = jobs::run("analyze-gibbs", spec);
  EXPECT_EQ(r.exit_code, jobs::kFail);
  EXPECT_GE(r.report["norms"]["{x1,x2}"].get<double>(), 1e-3);

  r = jobs::run("analyze-gibbs", sample("gibbs_pairs.json"));
  EXPECT_EQ(r.exit_code, jobs::kPass) << r.text;

  spec["distribution"][0] = 0.0;
  r = jobs::run("analyze-gibbs", spec);
  EXPECT_EQ(r.exit_code, jobs::kInputError);
  EXPECT_EQ(r.report["pointer"], "/distribution");
  spec = sample("gibbs_pairs.json");
  spec["classes"] = json::array({json::array({"1", "9"})});
  EXPECT_EQ(jobs::run("analyze-gibbs", spec).report["pointer"], "/classes/0/1");
}

TEST(Jobs, Chaos) {
  const auto r = jobs::run("chaos", sample("chaos_two_sites.json"));
  EXPECT_EQ(r.exit_code, jobs::kPass) << r.text;
  EXPECT_EQ(r.report["piece_dims"], json({1, 2, 3, 4}));
  const auto& uu = r.report["expansions"][0]["coefficients"];
  EXPECT_NEAR(uu["1"].get<double>(), -1.0, 1e-12);
  EXPECT_NEAR(uu["u*u"].get<double>(), 1.0, 1e-12);
  const auto& uv = r.report["expansions"][1]["coefficients"];
  EXPECT_NEAR(uv["1"].get<double>(), -0.5, 1e-12);
  // :u^2 v: = u^2 v - 2 c_uv u - c_uu v
  const auto& uuv = r.report["expansions"][2]["coefficients"];
  EXPECT_NEAR(uuv["u"].get<double>(), -1.0, 1e-10);
  EXPECT_NEAR(uuv["v"].get<double>(), -1.0, 1e-10);
  EXPECT_NEAR(uuv["u*u*v"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(uuv.size(), 3u);

  json bad = sample("chaos_two_sites.json");
  bad["expand"][1] = "u*w";
  EXPECT_EQ(jobs::run("chaos", bad).report["pointer"], "/expand/1");
  bad = sample("chaos_two_sites.json");
  bad["max_degree"] = 1;
  EXPECT_EQ(jobs::run("chaos", bad).exit_code, jobs::kInputError);
}

TEST(Jobs, CommandKindMismatch) {
  EXPECT_EQ(jobs::run("chaos", sample("factor_family_3bin.json")).exit_code, jobs::kInputError);
  EXPECT_EQ(jobs::run("nope", sample("factor_family_3bin.json")).exit_code, jobs::kInputError);
}

}  // namespace
