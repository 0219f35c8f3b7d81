#include <gtest/gtest.h>

#include <cmath>
#include <tuple>

#include "combkit/oracle.hpp"
#include "combkit/series.hpp"

using namespace combkit;

namespace {

struct Closed {
  BigFloat lo{300}, hi{300};
};

// (1 - sqrt(1 - 4 z^2)) / (2 z) at 300 bits, as a tight interval.
Closed binary_tree_value(const mpq_class& z) {
  Closed c;
  for (auto [out, rnd, inv] : {std::tuple{&c.lo, MPFR_RNDD, MPFR_RNDU}, std::tuple{&c.hi, MPFR_RNDU, MPFR_RNDD}}) {
    BigFloat d(300), s(300);
    mpq_class disc = 1 - 4 * z * z;
    mpfr_set_q(d.get(), disc.get_mpq_t(), inv);
    mpfr_sqrt(s.get(), d.get(), inv);
    mpfr_ui_sub(s.get(), 1, s.get(), rnd);
    mpq_class twoz = 2 * z;
    mpfr_div_q(out->get(), s.get(), twoz.get_mpq_t(), rnd);
  }
  return c;
}

bool encloses(const Interval& iv, const Closed& c) {
  return mpfr_lessequal_p(iv.lo.get(), c.lo.get()) && mpfr_greaterequal_p(iv.hi.get(), c.hi.get());
}

const NodeValues eval(const std::string& eq, const std::string& point, mpfr_prec_t p = 53) {
  const auto s = parse(std::vector<std::string>{eq});
  return eval_system(transfer(s), Point::parse({point}), p);
}

ErrorCode error_of(const std::string& eq, const std::string& point) {
  try {
    eval(eq, point);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NotValidated;
}

}  // namespace

TEST(Rational, Parsing) {
  EXPECT_EQ(parse_rational("0.2"), mpq_class(1, 5));
  EXPECT_EQ(parse_rational("0.48"), mpq_class(12, 25));
  EXPECT_EQ(parse_rational("1/5"), mpq_class(1, 5));
  EXPECT_EQ(parse_rational("2e-3"), mpq_class(1, 500));
  EXPECT_EQ(parse_rational("1.5E2"), mpq_class(150));
  EXPECT_EQ(parse_rational("-3"), mpq_class(-3));
  EXPECT_EQ(parse_rational(".5"), mpq_class(1, 2));
  for (const char* bad : {"", "x", "0.2.3", "1/0", "1e", "e5", "0x10", "1/2/3", "0.2 "}) EXPECT_THROW(parse_rational(bad), Error) << bad;
}

TEST(Rational, Point) {
  const auto p = Point::parse({"z=0.2", "u=1/3"});
  EXPECT_EQ(p.at("z"), mpq_class(1, 5));
  EXPECT_EQ(p.ordered({"u", "z"}), (std::vector<mpq_class>{mpq_class(1, 3), mpq_class(1, 5)}));
  EXPECT_THROW(p.ordered({"z"}), Error);
  EXPECT_THROW(p.ordered({"z", "u", "w"}), Error);
  EXPECT_THROW(Point::parse({"z=0"}).ordered({"z"}), Error);
  EXPECT_THROW(Point::parse({"z"}), Error);
  EXPECT_THROW(Point::parse({"z=1", "z=2"}), Error);
}

TEST(Oracle, BinaryTreesAtPointTwo) {
  const auto v = eval("B = z + (z*B*B)", "z=0.2");
  const auto closed = binary_tree_value(mpq_class(1, 5));
  EXPECT_TRUE(encloses(v.classes[0], closed));
  EXPECT_TRUE(encloses(v.node(0), closed));
  EXPECT_LE(v.classes[0].width(), std::ldexp(1.0, -40));
  EXPECT_NEAR(v.classes[0].mid(), 0.208712152522080, 1e-14);
}

TEST(Oracle, AtomIsExact) {
  const auto v = eval("A = z", "z=0.3");
  EXPECT_TRUE(v.classes[0].contains(mpq_class(3, 10)));
  // Width of at most one ulp at 53 bits.
  BigFloat next(53);
  mpfr_set(next.get(), v.classes[0].lo.get(), MPFR_RNDN);
  mpfr_nextabove(next.get());
  EXPECT_TRUE(mpfr_lessequal_p(v.classes[0].hi.get(), next.get()));
}

TEST(Oracle, Divergence) {
  EXPECT_EQ(error_of("B = z + (z*B*B)", "z=0.6"), ErrorCode::Divergent);
  EXPECT_EQ(error_of("B = z + (z*B*B)", "z=3"), ErrorCode::Divergent);
  EXPECT_EQ(error_of("S = Seq(z)", "z=1"), ErrorCode::SeqOperandAtOne);
  EXPECT_EQ(error_of("T = z * Seq(T)", "z=0.3"), ErrorCode::SeqOperandAtOne);
  const auto at_rho = error_of("B = z + (z*B*B)", "z=0.5");
  EXPECT_TRUE(at_rho == ErrorCode::Divergent || at_rho == ErrorCode::ContractionFailed) << to_string(at_rho);
  EXPECT_EQ(category_of(ErrorCode::Divergent), ErrorCategory::Numeric);
}

TEST(Oracle, SeqOperandsBelowOne) {
  const auto s = parse(std::vector<std::string>{"T = z * Seq(T)"});
  const auto gfs = transfer(s);
  for (const char* z : {"0.05", "0.1", "0.2", "0.24", "0.2499"}) {
    const auto v = eval_system(gfs, Point::parse({std::string("z=") + z}), 53);
    for (auto id : gfs.seq_nodes()) {
      const auto& operand = v.node(gfs.term(id).operands[0]);
      EXPECT_LT(mpfr_cmp_ui(operand.hi.get(), 1), 0) << z;
    }
  }
}

TEST(Oracle, NearSingularity) {
  // Tuned points for large targets sit very close to the singularity.
  const auto v = eval("B = z + (z*B*B)", "z=0.49999975");
  EXPECT_GT(v.classes[0].mid(), 0.99);
  EXPECT_LT(v.classes[0].mid(), 1.0);
}

TEST(Oracle, MonotoneRefinement) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"B = z + (z*B*B)", "z=0.2"}, {"B = z + (z*B*B)", "z=0.48"}, {"T = z * Seq(T)", "z=0.2"},
      {"UB = z + (z*UB) + (z*UB*UB)", "z=0.3"}, {"B = z + (B*B)", "z=0.1"}};
  for (const auto& [eq, pt] : cases) {
    double prev = 1;
    for (mpfr_prec_t p : {24, 48, 96, 192, 384}) {
      const auto v = eval(eq, pt, p);
      for (const auto& node : v.nodes) ASSERT_LE(mpfr_cmp(node.lo.get(), node.hi.get()), 0);
      const double w = v.classes[0].width();
      EXPECT_LE(w, prev) << eq << " at " << p;
      prev = w;
    }
    EXPECT_LT(prev, 1e-100) << eq;
  }
}

TEST(Oracle, SoundAgainstSeriesSums) {
  // rho for each class; every node coefficient is at most 4 * rho^-n.
  const std::vector<std::pair<std::string, mpq_class>> classes = {{"B = z + (z*B*B)", mpq_class(1, 2)},
                                                                  {"B = z + (B*B)", mpq_class(1, 4)},
                                                                  {"UB = z + (z*UB) + (z*UB*UB)", mpq_class(1, 3)},
                                                                  {"T = z * Seq(T)", mpq_class(1, 4)}};
  for (const auto& [eq, rho] : classes) {
    const auto s = parse(std::vector<std::string>{eq});
    const auto gfs = transfer(s);
    const SeriesRing ring(gfs.variables(), {200});
    const auto sol = newton_solve(gfs, {200});
    const auto node_series = evaluate_nodes(gfs, ring, std::span<const TruncatedSeries>(sol.series), SeqMode::Direct);
    for (int i = 1; i <= 20; ++i) {
      const mpq_class x = rho * mpq_class(4 * i, 100);  // up to 0.8 rho
      const auto v = eval_system(gfs, Point({{"z", x}}), 53);
      // Tail beyond degree 200 is at most 4 * 0.8^201 / 0.2.
      BigFloat tail(512);
      mpfr_set_d(tail.get(), 0.8, MPFR_RNDU);
      mpfr_pow_ui(tail.get(), tail.get(), 201, MPFR_RNDU);
      mpfr_mul_ui(tail.get(), tail.get(), 20, MPFR_RNDU);
      for (std::size_t id = 0; id < node_series.size(); ++id) {
        BigFloat lo(512), hi(512), xl(512), xh(512), pl(512), ph(512), t(512);
        mpfr_set_q(xl.get(), x.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(xh.get(), x.get_mpq_t(), MPFR_RNDU);
        for (const auto& [e, c] : node_series[id].coefficients()) {
          mpfr_pow_ui(pl.get(), xl.get(), e[0], MPFR_RNDD);
          mpfr_pow_ui(ph.get(), xh.get(), e[0], MPFR_RNDU);
          mpfr_mul_z(t.get(), pl.get(), c.get_mpz_t(), MPFR_RNDD);
          mpfr_add(lo.get(), lo.get(), t.get(), MPFR_RNDD);
          mpfr_mul_z(t.get(), ph.get(), c.get_mpz_t(), MPFR_RNDU);
          mpfr_add(hi.get(), hi.get(), t.get(), MPFR_RNDU);
        }
        mpfr_add(hi.get(), hi.get(), tail.get(), MPFR_RNDU);
        const auto& iv = v.nodes[id];
        EXPECT_TRUE(mpfr_lessequal_p(lo.get(), iv.hi.get())) << eq << " node " << id << " x=" << x;
        EXPECT_TRUE(mpfr_greaterequal_p(hi.get(), iv.lo.get())) << eq << " node " << id << " x=" << x;
      }
    }
  }
}

TEST(Oracle, MultivariateMolecule) {
  const auto s = parse(std::vector<std::string>{"M = C + (C * M) + (C * M * M) + (C * M * M * M)", "C = c + c13",
                                                "c = atom(z: 1)", "c13 = atom(z: 1, u: 1)"});
  const auto gfs = transfer(s);
  const auto v = eval_system(gfs, Point::parse({"z=0.1", "u=0.5"}), 64);
  // C(z, u) = z + z u exactly.
  EXPECT_TRUE(v.classes[1].contains(mpq_class(3, 20)));
  // M = C (1 + M + M^2 + M^3): check the residual numerically.
  const double m = v.classes[0].mid(), c = 0.15;
  EXPECT_NEAR(m, c * (1 + m + m * m + m * m * m), 1e-15);
}

TEST(Derivatives, Atom) {
  const auto s = parse(std::vector<std::string>{"A = z"});
  const auto d = eval_derivatives(transfer(s), Point::parse({"z=0.3"}), 53);
  EXPECT_TRUE(d.at(0, 0).contains(mpq_class(1)));
  EXPECT_EQ(d.at(0, 0).width(), 0.0);
}

TEST(Derivatives, BinaryTrees) {
  const auto s = parse(std::vector<std::string>{"B = z + (z*B*B)"});
  const auto gfs = transfer(s);
  const auto v = eval_system(gfs, Point::parse({"z=0.2"}), 53);
  const auto d = eval_derivatives(gfs, Point::parse({"z=0.2"}), v);
  // B' = (B^2 + 1) / (1 - 2 z B), from the closed form at 300 bits.
  const auto closed = binary_tree_value(mpq_class(1, 5));
  EXPECT_NEAR(d.at(0, 0).mid(), 1.1386181397495, 1e-12);
  EXPECT_LE(d.at(0, 0).width(), 1e-12);
  BigFloat exact(300);
  {
    BigFloat b(300), q(300);
    mpfr_set(b.get(), closed.lo.get(), MPFR_RNDN);
    mpfr_sqr(q.get(), b.get(), MPFR_RNDN);
    mpfr_add_ui(q.get(), q.get(), 1, MPFR_RNDN);
    BigFloat t(300);
    mpfr_mul_ui(t.get(), b.get(), 2, MPFR_RNDN);
    mpfr_div_ui(t.get(), t.get(), 5, MPFR_RNDN);
    mpfr_ui_sub(t.get(), 1, t.get(), MPFR_RNDN);
    mpfr_div(exact.get(), q.get(), t.get(), MPFR_RNDN);
  }
  EXPECT_TRUE(mpfr_lessequal_p(d.at(0, 0).lo.get(), exact.get()));
  EXPECT_TRUE(mpfr_greaterequal_p(d.at(0, 0).hi.get(), exact.get()));
}

TEST(Derivatives, ProductMonomial) {
  const auto s = parse(std::vector<std::string>{"A = z * u"});
  const auto d = eval_derivatives(transfer(s), Point::parse({"z=0.2", "u=0.3"}), 53);
  const auto u = *s.variable_index("u");
  const auto z = *s.variable_index("z");
  EXPECT_TRUE(d.at(0, u).contains(mpq_class(1, 5)));
  EXPECT_TRUE(d.at(0, z).contains(mpq_class(3, 10)));
  EXPECT_LT(d.at(0, u).width(), 1e-15);
}

TEST(Derivatives, SequenceClass) {
  // Central difference quotient at 128 bits as a cross-check.
  const auto s = parse(std::vector<std::string>{"T = z * Seq(T)"});
  const auto gfs = transfer(s);
  const auto d = eval_derivatives(gfs, Point::parse({"z=0.2"}), 128);
  const auto a = eval_system(gfs, Point::parse({"z=0.2000001"}), 128).classes[0].mid();
  const auto b = eval_system(gfs, Point::parse({"z=0.1999999"}), 128).classes[0].mid();
  EXPECT_NEAR(d.at(0, 0).mid(), (a - b) / 2e-7, 1e-6);
}

TEST(Point, ExactDecimalRendering) {
  EXPECT_EQ(exact_decimal(parse_rational("0.2")), "0.2");
  EXPECT_EQ(exact_decimal(parse_rational("49999974990555029e-17")), "0.49999974990555029");
  EXPECT_EQ(exact_decimal(parse_rational("-3/8")), "-0.375");
  EXPECT_EQ(exact_decimal(parse_rational("12")), "12");
  EXPECT_EQ(exact_decimal(parse_rational("1/3")), "1/3");
  EXPECT_EQ(Point::parse({"u=0.5", "z=0.25"}).to_string(), "u=0.5, z=0.25");
}
