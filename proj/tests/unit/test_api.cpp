#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "combkit/harness.hpp"
#include "combkit/sample.hpp"
#include "combkit/tuner.hpp"

using namespace combkit;

namespace {

ClassSystem sys(std::vector<std::string> eqs) { return parse(eqs); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NotValidated;
}

const std::vector<std::string> kMolecule = {"M = C + (C * M) + (C * M * M) + (C * M * M * M)", "C = c + c13",
                                            "c = atom(z: 1)", "c13 = atom(z: 1, u: 1)"};

}  // namespace

TEST(Tuner, ExpectedSizeOfBinaryTrees) {
  // E = z B' / B; at z = 0.2, B' = (1 + B^2) / (1 - 2 z B).
  const auto s = sys({"B = z + (z*B*B)"});
  const double b = (1 - std::sqrt(0.84)) / 0.4;
  const double e = 0.2 * (1 + b * b) / (1 - 0.4 * b) / b;
  const auto got = expected_size(s, "B", Point::parse({"z=0.2"}));
  EXPECT_NEAR(got.at("z").mid(), e, 1e-12);
  EXPECT_LE(got.at("z").width(), 1e-12);
}

TEST(Tuner, UnivariateTargets) {
  const auto s = sys({"B = z + (z*B*B)"});
  for (double n : {5.0, 50.0, 1000.0}) {
    const auto r = tune(s, "B", {{"z", n}});
    EXPECT_NEAR(r.expected.at("z").mid(), n, 0.005 * n) << n;
    EXPECT_LT(r.point.at("z"), mpq_class(1, 2));
    ASSERT_TRUE(r.rho.has_value());
    EXPECT_NEAR(*r.rho, 0.5, 1e-6);
  }
}

TEST(Tuner, GeneralTreesAndSequences) {
  const auto t = tune(sys({"T = z * Seq(T)"}), "T", {{"z", 30}});
  EXPECT_NEAR(t.expected.at("z").mid(), 30, 0.15);
  // Seq(z): E = z / (1 - z).
  const auto q = tune(sys({"S = Seq(z)"}), "S", {{"z", 9}});
  EXPECT_NEAR(q.point.at("z").get_d(), 0.9, 0.9 * 0.005);
}

TEST(Tuner, FixedSizeClass) {
  const auto r = tune(sys({"A = z * z"}), "A", {{"z", 2}});
  EXPECT_EQ(r.point.at("z"), mpq_class(1, 2));
}

TEST(Tuner, InfeasibleBelowMinimum) {
  EXPECT_EQ(code_of([] { tune(sys({"P = z*z + z*z*P"}), "P", {{"z", 1}}); }), ErrorCode::Infeasible);
  EXPECT_EQ(code_of([] { tune(sys({"Q = z + z*z*z"}), "Q", {{"z", 4}}); }), ErrorCode::Infeasible);
  // Just above the minimum is reachable from below.
  const auto r = tune(sys({"P = z*z + z*z*P"}), "P", {{"z", 2.5}});
  EXPECT_NEAR(r.expected.at("z").mid(), 2.5, 0.0125);
}

TEST(Tuner, Multivariate) {
  const auto s = sys(kMolecule);
  const auto r = tune(s, "M", {{"z", 20}, {"u", 5}});
  EXPECT_NEAR(r.expected.at("z").mid(), 20, 0.1);
  EXPECT_NEAR(r.expected.at("u").mid(), 5, 0.025);
  const auto again = expected_size(s, "M", r.point);
  EXPECT_NEAR(again.at("u").mid(), r.expected.at("u").mid(), 1e-9);
}

TEST(Tuner, PinnedVariable) {
  TuneOptions opt;
  opt.pinned = {{"u", 0.5}};
  const auto r = tune(sys(kMolecule), "M", {{"z", 20}}, opt);
  EXPECT_EQ(r.point.at("u"), mpq_class(1, 2));
  EXPECT_NEAR(r.expected.at("z").mid(), 20, 0.1);
}

TEST(Tuner, RoundCoordinate) {
  EXPECT_EQ(round_coordinate(0.2), parse_rational("0.20000000000000001"));
  EXPECT_EQ(round_coordinate(0.5), mpq_class(1, 2));
  EXPECT_EQ(round_coordinate(0.49999974990555029), parse_rational("0.49999974990555029"));
}

TEST(SampleApi, WindowChecks) {
  const auto s = sys({"B = z + (z*B*B)"});
  EXPECT_EQ(code_of([&] { check_window(s, "B", {SizeVector(1, 2), SizeVector(1, 2)}); }), ErrorCode::WindowEmpty);
  EXPECT_EQ(code_of([&] { check_window(s, "B", {SizeVector(1, 0), SizeVector(1, 0)}); }), ErrorCode::WindowEmpty);
  EXPECT_NO_THROW(check_window(s, "B", {SizeVector(1, 2), SizeVector(1, 3)}));
  const auto a = sys({"A = z * z"});
  EXPECT_EQ(code_of([&] { check_window(a, "A", {SizeVector(1, 3), SizeVector(1, 9)}); }), ErrorCode::WindowEmpty);
}

TEST(SampleApi, ExactSizeWithExplicitPoint) {
  const auto s = sys({"B = z + (z*B*B)"});
  SampleRequest req;
  req.class_name = "B";
  req.n = 25;
  req.point = Point::parse({"z=0.45"});
  req.target = {{"z", 7}};
  req.seed = 3;
  TermBuilder builder;
  const auto terms = sample(s, req, builder);
  ASSERT_EQ(terms.size(), 25u);
  for (const auto& t : terms) EXPECT_EQ(std::count(t.begin(), t.end(), 'z'), 7) << t;
  const auto r = sample_traces(s, req);
  EXPECT_EQ(r.stats.accepted, 25u);
  EXPECT_GE(r.stats.attempts, 25u);
  ASSERT_TRUE(r.window.has_value());
  EXPECT_EQ(r.window->lo[0], 7);
  EXPECT_EQ(r.traces.front().class_name, "B");
}

TEST(SampleApi, TunedWindow) {
  const auto s = sys({"B = z + (z*B*B)"});
  SampleRequest req;
  req.class_name = "B";
  req.n = 5;
  req.target = {{"z", 100}};
  req.tolerance = 0.1;
  req.seed = 11;
  const auto r = sample_traces(s, req);
  for (const auto& t : r.traces) {
    EXPECT_GE(t.size[0], 90);
    EXPECT_LE(t.size[0], 110);
  }
}

TEST(SampleApi, AttemptBudget) {
  SampleRequest req;
  req.class_name = "B";
  req.n = 1;
  req.point = Point::parse({"z=0.1"});
  req.target = {{"z", 41}};
  req.max_attempts = 50;
  EXPECT_EQ(code_of([&] { sample_traces(sys({"B = z + (z*B*B)"}), req); }), ErrorCode::NoConvergence);
}

TEST(Harness, ChiSquare) {
  auto [c0, p0] = chi_square_uniform({10, 10}, 2);
  EXPECT_DOUBLE_EQ(c0, 0);
  EXPECT_DOUBLE_EQ(p0, 1);
  // One degree of freedom: p = erfc(sqrt(chi2 / 2)).
  auto [c1, p1] = chi_square_uniform({20}, 2);
  EXPECT_DOUBLE_EQ(c1, 20);
  EXPECT_NEAR(p1, std::erfc(std::sqrt(10.0)), 1e-15);
  // Unobserved third cell: chi2 = 2 (5/3)^2 / (10/3) + 10/3 = 5; p = e^-2.5.
  auto [c2, p2] = chi_square_uniform({5, 5}, 3);
  EXPECT_NEAR(c2, 5, 1e-12);
  EXPECT_NEAR(p2, std::exp(-2.5), 1e-12);
  EXPECT_EQ(code_of([] { chi_square_uniform({4}, 1); }), ErrorCode::TooFewCategories);
}

TEST(Harness, UniformitySmall) {
  UniformityOptions opt;
  opt.samples = 2000;
  opt.seed = 4;
  const auto s = sys({"UB = z + (z*UB) + (z*UB*UB)"});
  const auto row = uniformity_at_size(s, "UB", 5, opt);
  EXPECT_EQ(row.count, 9u);
  EXPECT_EQ(row.observed_distinct, 9u);
  EXPECT_EQ(row.stats.accepted, 2000u);
  EXPECT_GT(row.p_value, 1e-4);
  EXPECT_EQ(code_of([&] { uniformity_at_size(s, "UB", 1, opt); }), ErrorCode::TooFewCategories);
  EXPECT_EQ(code_of([&] { uniformity_at_size(sys(kMolecule), "M", 3, opt); }), ErrorCode::BoundsMismatch);
}

TEST(Harness, BenchAgreement) {
  BenchOptions opt;
  opt.attempts = 2000;
  opt.blocks = 10;
  opt.resamples = 100;
  opt.seed = 9;
  const auto r = bench_rejection(sys({"B = z + (z*B*B)"}), "B", Point::parse({"z=0.48"}),
                                 {SizeVector(1, 5), SizeVector(1, 9)}, opt);
  EXPECT_EQ(r.outcome_mismatches, 0u);
  EXPECT_EQ(r.trace_mismatches, 0u);
  EXPECT_EQ(r.early.accepted, r.baseline.accepted);
  EXPECT_GT(r.accepted, 0u);
  EXPECT_GT(r.early.early_aborts, 0u);
  EXPECT_LE(r.early.decisions, r.baseline.decisions);
  EXPECT_LE(r.ci_low, r.ci_high);
}
