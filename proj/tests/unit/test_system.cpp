#include <gtest/gtest.h>

#include "brute_force.hpp"
#include "combkit/gf.hpp"
#include "combkit/system.hpp"

using namespace combkit;

namespace {

ErrorCode first_code(const ClassSystem& s) {
  if (s.report().ok()) return ErrorCode::NotValidated;
  return s.report().diagnostics.front().code;
}

const std::vector<std::vector<std::string>>& test_classes() {
  static const std::vector<std::vector<std::string>> classes = {
      {"B = z + (z * B * B)"},
      {"B = z + (B * B)"},
      {"UB = z + (z * UB) + (z * UB * UB)"},
      {"T = z * Seq(T)"},
      {"A = z"},
      {"S = Seq(z)"},
      {"M = C + (C * M) + (C * M * M) + (C * M * M * M)", "C = c + c13", "c = atom(z: 1)",
       "c13 = atom(z: 1, u: 1)"},
      {"F = z + u * F * F + Seq(u * z)"},
      {"W = Seq(a + b)"},
      {"A = B * C", "B = z + z * B", "C = u + Seq(z * z)"},
      {"P = atom(x: 2) + atom(x: 1, y: 1) * P"},
  };
  return classes;
}

}  // namespace

TEST(System, ValidBinaryTrees) {
  const auto s = parse(std::vector<std::string>{"B = z + (z*B*B)"});
  EXPECT_TRUE(s.valid());
  EXPECT_EQ(s.variables(), std::vector<std::string>{"z"});
  EXPECT_EQ(min_size(s, "B"), SizeVector(std::vector<std::int64_t>{1}));
  EXPECT_EQ(max_size(s, "B")[0], kUnbounded);
}

TEST(System, Diagnostics) {
  EXPECT_EQ(first_code(parse(std::vector<std::string>{"A = Seq(A)"})), ErrorCode::IllFoundedSequence);
  EXPECT_EQ(first_code(parse(std::vector<std::string>{"A = A * z"})), ErrorCode::EmptyClass);
  EXPECT_EQ(first_code(parse(std::vector<std::string>{"A = Q"})), ErrorCode::UnresolvedReference);
  EXPECT_EQ(first_code(parse(std::vector<std::string>{"A = z + A"})), ErrorCode::NonStabilizing);
  EXPECT_EQ(first_code(parse(std::vector<std::string>{"A = Seq(Seq(z))"})), ErrorCode::IllFoundedSequence);
  EXPECT_EQ(first_code(parse(std::vector<std::string>{"A = B", "B = A"})), ErrorCode::EmptyClass);
}

TEST(System, DiagnosticsCarryNodes) {
  const auto s = parse(std::vector<std::string>{"A = z * Q"});
  ASSERT_FALSE(s.valid());
  ASSERT_TRUE(s.report().diagnostics[0].node.has_value());
  EXPECT_EQ(s.node(*s.report().diagnostics[0].node).name, "Q");
  EXPECT_THROW(min_size(s, "A"), Error);
}

TEST(System, MoleculeVerbatimListingIsEmpty) {
  // Every alternative of M as printed contains M itself.
  const auto s = parse(std::vector<std::string>{"M = C * (C * M) + (C * M * M) + (C * M * M * M)", "C = c + c13",
                                                "c = atom(z: 1)", "c13 = atom(z: 1, u: 1)"});
  EXPECT_EQ(first_code(s), ErrorCode::EmptyClass);
}

TEST(System, MoleculeBounds) {
  const auto s = parse(test_classes()[6]);
  ASSERT_TRUE(s.valid());
  EXPECT_EQ(s.variables(), (std::vector<std::string>{"z", "u"}));
  EXPECT_EQ(min_size(s, "M"), SizeVector(std::vector<std::int64_t>{1, 0}));
  EXPECT_EQ(max_size(s, "C"), SizeVector(std::vector<std::int64_t>{1, 1}));
  EXPECT_EQ(max_size(s, "M")[0], kUnbounded);
  EXPECT_EQ(max_size(s, "M")[1], kUnbounded);
  EXPECT_EQ(s.size_to_string(max_size(s, "M")), "{z: inf, u: inf}");
}

TEST(System, SimpleBounds) {
  const auto a = parse(std::vector<std::string>{"A = z"});
  EXPECT_EQ(max_size(a, "A"), SizeVector(std::vector<std::int64_t>{1}));
  const auto s = parse(std::vector<std::string>{"S = Seq(z)"});
  EXPECT_EQ(min_size(s, "S"), SizeVector(std::vector<std::int64_t>{0}));
  EXPECT_EQ(max_size(s, "S")[0], kUnbounded);
  // u is bounded by 1 even though z is unbounded.
  const auto m = parse(std::vector<std::string>{"A = u * Seq(z)"});
  EXPECT_EQ(m.variables(), (std::vector<std::string>{"u", "z"}));
  EXPECT_EQ(max_size(m, "A")[0], 1);
  EXPECT_EQ(max_size(m, "A")[1], kUnbounded);
  EXPECT_THROW(min_size(a, "Nope"), Error);
}

TEST(System, NodeIdsArePreorderInEquationOrder) {
  const auto s = parse(std::vector<std::string>{"B = z + (z*B*B)", "C = B"});
  ASSERT_EQ(s.node_count(), 7u);
  EXPECT_EQ(s.node(0).kind, NodeKind::Union);
  EXPECT_EQ(s.node(1).kind, NodeKind::Atom);
  EXPECT_EQ(s.node(2).kind, NodeKind::Product);
  EXPECT_EQ(s.node(3).kind, NodeKind::Atom);
  EXPECT_EQ(s.node(4).kind, NodeKind::ClassRef);
  EXPECT_EQ(s.node(6).kind, NodeKind::ClassRef);
  EXPECT_EQ(s.class_root(1), 6);
  EXPECT_EQ(s.resolve(6), 0);
  for (std::size_t i = 0; i < s.node_count(); ++i) EXPECT_EQ(s.node(static_cast<std::int32_t>(i)).id, static_cast<std::int32_t>(i));
}

TEST(System, MinSizeMatchesBruteForce) {
  for (const auto& lines : test_classes()) {
    const auto s = parse(lines);
    ASSERT_TRUE(s.valid()) << lines[0];
    const auto bf = bruteforce::brute_force(s.specification(), 8);
    ASSERT_TRUE(bf.finite) << lines[0];
    for (std::size_t c = 0; c < s.class_count(); ++c) {
      const auto& name = s.class_name(c);
      const auto counts = bf.counts(name);
      ASSERT_FALSE(counts.empty()) << name;
      for (std::size_t v = 0; v < s.variable_count(); ++v) {
        std::int64_t best = kUnbounded;
        for (const auto& [size, n] : counts) {
          auto it = size.find(s.variables()[v]);
          best = std::min<std::int64_t>(best, it == size.end() ? 0 : it->second);
        }
        EXPECT_EQ(min_size(s, name)[v], best) << lines[0] << " class " << name << " var " << s.variables()[v];
      }
    }
  }
}

TEST(System, MaxSizeIsSoundAgainstBruteForce) {
  for (const auto& lines : test_classes()) {
    const auto s = parse(lines);
    const auto bf = bruteforce::brute_force(s.specification(), 8);
    for (std::size_t c = 0; c < s.class_count(); ++c) {
      const auto mx = max_size(s, s.class_name(c));
      for (const auto& [size, n] : bf.counts(s.class_name(c)))
        for (std::size_t v = 0; v < s.variable_count(); ++v) {
          auto it = size.find(s.variables()[v]);
          EXPECT_LE(it == size.end() ? 0 : it->second, mx[v]);
        }
    }
  }
}

TEST(System, ValidateAgreesWithBruteForce) {
  const std::vector<std::vector<std::string>> invalid = {
      {"A = Seq(A)"}, {"A = A * z"}, {"A = z + A"}, {"A = Seq(z + Seq(z))"}, {"A = z + B", "B = A"}};
  for (const auto& lines : invalid) {
    const auto s = parse(lines);
    EXPECT_FALSE(s.valid()) << lines[0];
    const auto bf = bruteforce::brute_force(s.specification(), 8, 20000);
    bool nonempty = true;
    for (std::size_t c = 0; c < s.class_count(); ++c) nonempty = nonempty && !bf.counts(s.class_name(c)).empty();
    EXPECT_FALSE(bf.finite && nonempty) << lines[0];
  }
  for (const auto& lines : test_classes()) {
    const auto s = parse(lines);
    EXPECT_TRUE(s.valid()) << lines[0];
    EXPECT_TRUE(bruteforce::brute_force(s.specification(), 8).finite) << lines[0];
  }
}

TEST(System, StabilizationBudgetIsConfigurable) {
  // A chain of n classes needs a budget growing with n.
  std::vector<std::string> chain;
  for (int i = 0; i < 12; ++i) chain.push_back("A" + std::to_string(i) + " = z * A" + std::to_string(i + 1));
  chain.push_back("A12 = z");
  const auto s = parse(chain);
  EXPECT_TRUE(s.valid());
  ValidationOptions tight;
  tight.iteration_budget = 3;
  EXPECT_FALSE(validate(s, tight).ok());
  EXPECT_TRUE(validate(s).ok());
}

TEST(Transfer, OneTermPerNode) {
  const auto s = parse(test_classes()[6]);
  const auto gfs = transfer(s);
  EXPECT_EQ(gfs.terms().size(), s.node_count());
  for (std::size_t i = 0; i < s.node_count(); ++i) EXPECT_EQ(gfs.terms()[i].node, static_cast<std::int32_t>(i));
  EXPECT_EQ(gfs.equation_text(1), "C = c + c13");
  EXPECT_EQ(gfs.node_text(s.class_root(2)), "z");
  EXPECT_EQ(gfs.node_text(s.class_root(3)), "z*u");
}

TEST(Transfer, Rules) {
  const auto b = transfer(parse(std::vector<std::string>{"B = z + (z*B*B)"}));
  EXPECT_EQ(b.equation_text(0), "B = z + z*B*B");
  const auto q = transfer(parse(std::vector<std::string>{"S = Seq(z)"}));
  EXPECT_EQ(q.equation_text(0), "S = 1/(1 - z)");
  EXPECT_EQ(q.unknown_count(), 2u);
  EXPECT_THROW(transfer(parse(std::vector<std::string>{"A = Q"})), Error);
}
