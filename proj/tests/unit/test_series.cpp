#include <gtest/gtest.h>

#include "brute_force.hpp"
#include "combkit/series.hpp"

using namespace combkit;

namespace {

std::vector<std::string> univariate(std::vector<std::string> v) { return v; }

std::vector<long> as_longs(const std::vector<mpz_class>& v) {
  std::vector<long> out;
  for (const auto& x : v) out.push_back(x.get_si());
  return out;
}

TruncatedSeries z_series(std::uint32_t bound) { return TruncatedSeries::monomial({"z"}, {bound}, {1}); }

const std::vector<std::vector<std::string>>& equivalence_classes() {
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
      {"E = Seq(z * Seq(z * E))"},
  };
  return classes;
}

}  // namespace

TEST(TruncatedSeries, QuasiInverseGeometric) {
  const auto q = series_quasi_inverse(z_series(30));
  for (std::uint32_t k = 0; k <= 30; ++k) EXPECT_EQ(q.coefficient({k}), 1) << k;
  EXPECT_EQ(q.term_count(), 31u);
  EXPECT_THROW(series_quasi_inverse(TruncatedSeries::constant({"z"}, {5}, 1)), Error);
}

TEST(TruncatedSeries, MonomialShift) {
  TruncatedSeries b({"z"}, {10});
  b.set({1}, 1);
  b.set({3}, 2);
  b.set({10}, 7);
  const auto shifted = series_mul(z_series(10), b);
  EXPECT_EQ(shifted.coefficient({2}), 1);
  EXPECT_EQ(shifted.coefficient({4}), 2);
  EXPECT_EQ(shifted.coefficient({1}), 0);
  EXPECT_EQ(shifted.term_count(), 2u);
}

TEST(TruncatedSeries, BinaryTreeEquationReproduced) {
  const auto s = parse(univariate({"B = z + (z*B*B)"}));
  const auto b = counting_table(s, "B", {{"z", 21}});
  const auto rhs = series_add(z_series(21), series_mul(z_series(21), series_mul(b, b)));
  EXPECT_EQ(rhs, b);
}

TEST(TruncatedSeries, KroneckerMatchesSchoolbook) {
  // Large enough to take the packed path; the reference is a plain double loop.
  TruncatedSeries a({"z"}, {300}), b({"z"}, {300});
  mpz_class x = 1;
  for (std::uint32_t k = 0; k <= 300; ++k) {
    x = x * 7 + 3;
    a.set({k}, (k % 3 == 0) ? mpz_class(-x) : x);
    b.set({k}, mpz_class(k) * k - 50);
  }
  const auto p = series_mul(a, b);
  for (std::uint32_t n = 0; n <= 300; ++n) {
    mpz_class ref = 0;
    for (std::uint32_t i = 0; i <= n; ++i) ref += a.coefficient({i}) * b.coefficient({n - i});
    ASSERT_EQ(p.coefficient({n}), ref) << n;
  }
}

TEST(TruncatedSeries, MultivariateKronecker) {
  TruncatedSeries a({"x", "y"}, {12, 9}), b({"x", "y"}, {12, 9});
  for (std::uint32_t i = 0; i <= 12; ++i)
    for (std::uint32_t j = 0; j <= 9; ++j) {
      a.set({i, j}, mpz_class(static_cast<long>(i * 31 + j * 17) % 23 - 11));
      b.set({i, j}, mpz_class(static_cast<long>(i * 13 + j * 29) % 19 - 9));
    }
  const auto p = series_mul(a, b);
  for (std::uint32_t i = 0; i <= 12; ++i)
    for (std::uint32_t j = 0; j <= 9; ++j) {
      mpz_class ref = 0;
      for (std::uint32_t i1 = 0; i1 <= i; ++i1)
        for (std::uint32_t j1 = 0; j1 <= j; ++j1) ref += a.coefficient({i1, j1}) * b.coefficient({i - i1, j - j1});
      ASSERT_EQ(p.coefficient({i, j}), ref) << i << "," << j;
    }
  const auto t = series_mul(a, b, 5);
  for (const auto& [e, v] : t.coefficients()) EXPECT_LE(total_degree(e), 5u);
  EXPECT_EQ(t.coefficient({2, 3}), p.coefficient({2, 3}));
}

TEST(TruncatedSeries, InverseRoundTrip) {
  TruncatedSeries a({"z"}, {40});
  a.set({0}, 1);
  a.set({1}, -3);
  a.set({5}, 11);
  const auto inv = series_inverse(a);
  EXPECT_EQ(series_mul(a, inv), TruncatedSeries::constant({"z"}, {40}, 1));
  a.set({0}, 2);
  EXPECT_THROW(series_inverse(a), Error);
}

TEST(Newton, BinaryTreesListing) {
  const auto s = parse(univariate({"B = z + (z*B*B)"}));
  const std::vector<long> expected = {0, 1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42, 0, 132, 0, 429, 0, 1430, 0, 4862, 0};
  EXPECT_EQ(as_longs(counting_sequence(s, "B", 20)), expected);
  EXPECT_EQ(as_longs(counting_sequence(s, "B", 20, SolveMethod::FixedPoint)), expected);
}

TEST(Newton, UnaryBinaryTrees) {
  const auto s = parse(univariate({"UB = z + (z*UB) + (z*UB*UB)"}));
  const auto c = as_longs(counting_sequence(s, "UB", 7));
  EXPECT_EQ(std::vector<long>(c.begin() + 3, c.end()), (std::vector<long>{2, 4, 9, 21, 51}));
}

TEST(Newton, GeneralTrees) {
  const auto s = parse(univariate({"T = z * SEQ(T)"}));
  const auto c = as_longs(counting_sequence(s, "T", 7));
  EXPECT_EQ(std::vector<long>(c.begin() + 3, c.end()), (std::vector<long>{2, 5, 14, 42, 132}));
}

TEST(Newton, LeafSizedBinaryTrees) {
  const auto s = parse(univariate({"B = z + (B * B)"}));
  const auto c = as_longs(counting_sequence(s, "B", 7));
  EXPECT_EQ(std::vector<long>(c.begin() + 3, c.end()), (std::vector<long>{2, 5, 14, 42, 132}));
}

TEST(Newton, SingleAtom) {
  const auto s = parse(univariate({"A = z"}));
  const auto gfs = transfer(s);
  EXPECT_EQ(newton_solve(gfs, {12}).at("A"), z_series(12));
}

TEST(Newton, MoleculeAtomClass) {
  const auto s = parse(equivalence_classes()[6]);
  const auto c = counting_table(s, "C", {{"z", 1}, {"u", 1}});
  EXPECT_EQ(c.coefficient({1, 0}), 1);
  EXPECT_EQ(c.coefficient({1, 1}), 1);
  EXPECT_EQ(c.term_count(), 2u);
  EXPECT_THROW(counting_table(s, "C", {{"z", 1}}), Error);
  EXPECT_THROW(counting_sequence(s, "C", 4), Error);
  const auto marginal = counting_sequence(s, "M", 3, "z", {{"u", 3}});
  // Sizes 1..3 with both carbon kinds: 2, then C*M has 4, ...
  EXPECT_EQ(marginal[1], 2);
  EXPECT_EQ(marginal[2], 4);
}

TEST(Newton, EquivalentToFixedPointAndBruteForce) {
  for (const auto& lines : equivalence_classes()) {
    const auto s = parse(lines);
    ASSERT_TRUE(s.valid()) << lines[0];
    const auto gfs = transfer(s);
    const std::vector<std::uint32_t> bounds(s.variable_count(), 8);
    const auto newton = newton_solve(gfs, bounds);
    SolveOptions fp;
    fp.method = SolveMethod::FixedPoint;
    const auto naive = newton_solve(gfs, bounds, fp);
    const auto bf = bruteforce::brute_force(s.specification(), 8);
    ASSERT_TRUE(bf.finite);
    for (std::size_t c = 0; c < s.class_count(); ++c) {
      const auto& name = s.class_name(c);
      EXPECT_EQ(newton.at(name), naive.at(name)) << lines[0] << " " << name;
      std::map<Exponent, mpz_class> expect;
      for (const auto& [size, n] : bf.counts(name)) {
        Exponent e(s.variable_count(), 0);
        for (const auto& [v, k] : size) e[*s.variable_index(v)] = static_cast<std::uint32_t>(k);
        expect[e] = n;
      }
      std::map<Exponent, mpz_class> got;
      for (const auto& [e, v] : newton.at(name).coefficients())
        if (total_degree(e) <= 8) got[e] = v;
      EXPECT_EQ(got, expect) << lines[0] << " " << name;
    }
  }
}

TEST(Newton, DoublingProperty) {
  for (const char* eq : {"B = z + (z*B*B)", "UB = z + (z*UB) + (z*UB*UB)", "T = z * Seq(T)"}) {
    const auto s = parse(univariate({eq}));
    const auto gfs = transfer(s);
    std::vector<TruncatedSeries> history;
    SolveOptions opts;
    opts.on_iteration = [&](std::size_t, const std::vector<TruncatedSeries>& y) { history.push_back(y[0]); };
    const auto final = newton_solve(gfs, {100}, opts).series[0];
    ASSERT_GE(history.size(), 7u);
    for (std::size_t i = 0; i < history.size(); ++i) {
      const std::uint32_t fixed = std::min<std::uint32_t>(1u << (i + 1), 101) - 1;
      for (std::uint32_t k = 0; k <= fixed; ++k) ASSERT_EQ(history[i].coefficient({k}), final.coefficient({k})) << eq << " it " << i << " k " << k;
    }
  }
}

TEST(Newton, DecimalStrings) {
  const auto s = parse(univariate({"B = z + (z*B*B)"}));
  const auto c = counting_sequence(s, "B", 201);
  const auto str = to_decimal_strings(c);
  EXPECT_EQ(str[0], "0");
  EXPECT_EQ(str[7], "5");
  // C_100, the 100th Catalan number.
  EXPECT_EQ(str[201], "896519947090131496687170070074100632420837521538745909320");
}

TEST(Newton, RequiresValidSystem) {
  EXPECT_THROW(counting_sequence(parse(univariate({"A = Seq(A)"})), "A", 5), Error);
}
