#include "combkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>

#include "combkit/error.hpp"

namespace combkit {

BigFloat::BigFloat(mpfr_prec_t precision) {
  mpfr_init2(value_, precision);
  mpfr_set_zero(value_, 1);
}

BigFloat::BigFloat(const BigFloat& other) {
  mpfr_init2(value_, other.precision());
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
  std::memcpy(value_, other.value_, sizeof(mpfr_t));
  other.live_ = false;
}

BigFloat& BigFloat::operator=(const BigFloat& other) {
  if (this == &other) return *this;
  if (!live_) {
    mpfr_init2(value_, other.precision());
    live_ = true;
  } else if (precision() != other.precision()) {
    mpfr_set_prec(value_, other.precision());
  }
  mpfr_set(value_, other.value_, MPFR_RNDN);
  return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& other) noexcept {
  if (this == &other) return *this;
  if (live_) mpfr_clear(value_);
  std::memcpy(value_, other.value_, sizeof(mpfr_t));
  live_ = other.live_;
  other.live_ = false;
  return *this;
}

BigFloat::~BigFloat() {
  if (live_) mpfr_clear(value_);
}

namespace {

std::string format(mpfr_srcptr x, mpfr_rnd_t rnd) {
  const int digits = static_cast<int>(std::ceil(static_cast<double>(mpfr_get_prec(x)) * 0.30103)) + 1;
  char* buf = nullptr;
  if (rnd == MPFR_RNDD)
    mpfr_asprintf(&buf, "%.*RDe", digits, x);
  else
    mpfr_asprintf(&buf, "%.*RUe", digits, x);
  std::string out(buf);
  mpfr_free_str(buf);
  return out;
}

}  // namespace

bool Interval::contains(const mpq_class& q) const {
  return mpfr_cmp_q(lo.get(), q.get_mpq_t()) <= 0 && mpfr_cmp_q(hi.get(), q.get_mpq_t()) >= 0;
}

bool Interval::contains(const Interval& inner) const {
  return mpfr_lessequal_p(lo.get(), inner.lo.get()) && mpfr_greaterequal_p(hi.get(), inner.hi.get());
}

double Interval::width() const {
  BigFloat w(precision());
  mpfr_sub(w.get(), hi.get(), lo.get(), MPFR_RNDU);
  return w.to_double(MPFR_RNDU);
}

double Interval::mid() const {
  BigFloat m(precision() + 1);
  mpfr_add(m.get(), hi.get(), lo.get(), MPFR_RNDN);
  mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
  return m.to_double();
}

std::string Interval::lo_string() const { return format(lo.get(), MPFR_RNDD); }
std::string Interval::hi_string() const { return format(hi.get(), MPFR_RNDU); }

mpq_class parse_rational(const std::string& text) {
  auto fail = [&]() -> Error { return Error(ErrorCode::InvalidPoint, "not a decimal or rational number: '" + text + "'"); };
  if (text.empty()) throw fail();
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    const std::string num = text.substr(0, slash), den = text.substr(slash + 1);
    auto integral = [](const std::string& s) {
      std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
      if (i >= s.size()) return false;
      for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
      return true;
    };
    if (!integral(num) || !integral(den)) throw fail();
    mpq_class q(mpz_class(num[0] == '+' ? num.substr(1) : num, 10), mpz_class(den[0] == '+' ? den.substr(1) : den, 10));
    if (q.get_den() == 0) throw fail();
    q.canonicalize();
    return q;
  }
  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') negative = text[i++] == '-';
  std::string digits;
  long scale = 0;
  bool any = false, dot = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits += c;
      any = true;
      if (dot) --scale;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) throw fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw fail();
    const std::string ex = text.substr(i + 1);
    std::size_t j = (!ex.empty() && (ex[0] == '+' || ex[0] == '-')) ? 1 : 0;
    if (j >= ex.size() || ex.size() - j > 6) throw fail();
    for (std::size_t k = j; k < ex.size(); ++k)
      if (!std::isdigit(static_cast<unsigned char>(ex[k]))) throw fail();
    scale += std::stol(ex);
  }
  mpz_class num(digits, 10);
  mpz_class den = 1;
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(scale)));
  if (scale >= 0)
    num *= p;
  else
    den = p;
  mpq_class q(negative ? mpz_class(-num) : num, den);
  q.canonicalize();
  return q;
}

Point Point::parse(const std::vector<std::string>& assignments) {
  Point p;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ErrorCode::InvalidPoint, "expected var=value, got '" + a + "'");
    const std::string var = a.substr(0, eq);
    if (p.values_.count(var)) throw Error(ErrorCode::InvalidPoint, "variable '" + var + "' given twice");
    p.values_[var] = parse_rational(a.substr(eq + 1));
  }
  return p;
}

const mpq_class& Point::at(const std::string& var) const {
  auto it = values_.find(var);
  if (it == values_.end()) throw Error(ErrorCode::InvalidPoint, "no value for variable '" + var + "'");
  return it->second;
}

std::vector<mpq_class> Point::ordered(const std::vector<std::string>& variables) const {
  for (const auto& [var, v] : values_)
    if (std::find(variables.begin(), variables.end(), var) == variables.end())
      throw Error(ErrorCode::InvalidPoint, "unknown variable '" + var + "'");
  std::vector<mpq_class> out;
  for (const auto& var : variables) {
    const mpq_class& v = at(var);
    if (sgn(v) <= 0) throw Error(ErrorCode::InvalidPoint, "variable '" + var + "' must be positive");
    out.push_back(v);
  }
  return out;
}

std::string exact_decimal(const mpq_class& q) {
  mpz_class den = q.get_den();
  const mp_bitcnt_t twos = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), mpz_class(2).get_mpz_t());
  const mp_bitcnt_t fives = mpz_remove(den.get_mpz_t(), den.get_mpz_t(), mpz_class(5).get_mpz_t());
  if (den != 1) return q.get_str();
  const unsigned long k = std::max(twos, fives);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, k);
  const mpz_class scaled = q.get_num() * scale / q.get_den();
  std::string digits = mpz_class(abs(scaled)).get_str();
  if (digits.size() <= k) digits.insert(0, k + 1 - digits.size(), '0');
  std::string out = digits.substr(0, digits.size() - k);
  std::string frac = digits.substr(digits.size() - k);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  if (!frac.empty()) out += "." + frac;
  return (scaled < 0 ? "-" : "") + out;
}

std::string Point::to_string() const {
  std::string out;
  for (const auto& [var, v] : values_) {
    if (!out.empty()) out += ", ";
    out += var + "=" + exact_decimal(v);
  }
  return out;
}

namespace {

// Round-to-nearest arithmetic for the Newton phase.
class ScalarRing {
 public:
  ScalarRing(mpfr_prec_t prec, const std::vector<mpq_class>& point) : prec_(prec) {
    for (const auto& q : point) {
      BigFloat x(prec);
      mpfr_set_q(x.get(), q.get_mpq_t(), MPFR_RNDN);
      x_.push_back(std::move(x));
    }
  }
  BigFloat zero() const { return BigFloat(prec_); }
  BigFloat one() const {
    BigFloat r(prec_);
    mpfr_set_ui(r.get(), 1, MPFR_RNDN);
    return r;
  }
  BigFloat monomial(const SizeVector& e) const {
    BigFloat r = one(), t(prec_);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      mpfr_pow_ui(t.get(), x_[i].get(), static_cast<unsigned long>(e[i]), MPFR_RNDN);
      mpfr_mul(r.get(), r.get(), t.get(), MPFR_RNDN);
    }
    return r;
  }
  BigFloat add(const BigFloat& a, const BigFloat& b) const {
    BigFloat r(prec_);
    mpfr_add(r.get(), a.get(), b.get(), MPFR_RNDN);
    return r;
  }
  BigFloat sub(const BigFloat& a, const BigFloat& b) const {
    BigFloat r(prec_);
    mpfr_sub(r.get(), a.get(), b.get(), MPFR_RNDN);
    return r;
  }
  BigFloat mul(const BigFloat& a, const BigFloat& b) const {
    BigFloat r(prec_);
    mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDN);
    return r;
  }
  BigFloat div(const BigFloat& a, const BigFloat& b) const {
    BigFloat r(prec_);
    mpfr_div(r.get(), a.get(), b.get(), MPFR_RNDN);
    return r;
  }
  BigFloat quasi_inverse(const BigFloat& a) const {
    if (mpfr_cmp_ui(a.get(), 1) >= 0)
      throw Error(ErrorCode::SeqOperandAtOne, "sequence operand reached 1; point is outside the domain");
    BigFloat r(prec_);
    mpfr_ui_sub(r.get(), 1, a.get(), MPFR_RNDN);
    mpfr_ui_div(r.get(), 1, r.get(), MPFR_RNDN);
    return r;
  }
  mpfr_prec_t precision() const noexcept { return prec_; }

 private:
  mpfr_prec_t prec_;
  std::vector<BigFloat> x_;
};

// Outward-rounded interval arithmetic.
class IntervalRing {
 public:
  IntervalRing(mpfr_prec_t prec, const std::vector<mpq_class>& point) : prec_(prec) {
    for (const auto& q : point) {
      Interval x(prec);
      mpfr_set_q(x.lo.get(), q.get_mpq_t(), MPFR_RNDD);
      mpfr_set_q(x.hi.get(), q.get_mpq_t(), MPFR_RNDU);
      x_.push_back(std::move(x));
    }
  }
  Interval zero() const { return Interval(prec_); }
  Interval one() const {
    Interval r(prec_);
    mpfr_set_ui(r.lo.get(), 1, MPFR_RNDD);
    mpfr_set_ui(r.hi.get(), 1, MPFR_RNDU);
    return r;
  }
  Interval monomial(const SizeVector& e) const {
    Interval r = one();
    BigFloat t(prec_);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      mpfr_pow_ui(t.get(), x_[i].lo.get(), static_cast<unsigned long>(e[i]), MPFR_RNDD);
      mpfr_mul(r.lo.get(), r.lo.get(), t.get(), MPFR_RNDD);
      mpfr_pow_ui(t.get(), x_[i].hi.get(), static_cast<unsigned long>(e[i]), MPFR_RNDU);
      mpfr_mul(r.hi.get(), r.hi.get(), t.get(), MPFR_RNDU);
    }
    return r;
  }
  Interval add(const Interval& a, const Interval& b) const {
    Interval r(prec_);
    mpfr_add(r.lo.get(), a.lo.get(), b.lo.get(), MPFR_RNDD);
    mpfr_add(r.hi.get(), a.hi.get(), b.hi.get(), MPFR_RNDU);
    return r;
  }
  Interval sub(const Interval& a, const Interval& b) const {
    Interval r(prec_);
    mpfr_sub(r.lo.get(), a.lo.get(), b.hi.get(), MPFR_RNDD);
    mpfr_sub(r.hi.get(), a.hi.get(), b.lo.get(), MPFR_RNDU);
    return r;
  }
  Interval mul(const Interval& a, const Interval& b) const {
    Interval r(prec_);
    if (mpfr_sgn(a.lo.get()) >= 0 && mpfr_sgn(b.lo.get()) >= 0) {
      mpfr_mul(r.lo.get(), a.lo.get(), b.lo.get(), MPFR_RNDD);
      mpfr_mul(r.hi.get(), a.hi.get(), b.hi.get(), MPFR_RNDU);
      return r;
    }
    BigFloat t(prec_);
    bool first = true;
    for (mpfr_srcptr p : {a.lo.get(), a.hi.get()})
      for (mpfr_srcptr q : {b.lo.get(), b.hi.get()}) {
        mpfr_mul(t.get(), p, q, MPFR_RNDD);
        if (first || mpfr_less_p(t.get(), r.lo.get())) mpfr_set(r.lo.get(), t.get(), MPFR_RNDD);
        mpfr_mul(t.get(), p, q, MPFR_RNDU);
        if (first || mpfr_greater_p(t.get(), r.hi.get())) mpfr_set(r.hi.get(), t.get(), MPFR_RNDU);
        first = false;
      }
    return r;
  }
  Interval scale(const Interval& a, std::int64_t k) const {
    Interval r(prec_);
    mpfr_mul_si(r.lo.get(), a.lo.get(), static_cast<long>(k), MPFR_RNDD);
    mpfr_mul_si(r.hi.get(), a.hi.get(), static_cast<long>(k), MPFR_RNDU);
    return r;
  }
  Interval quasi_inverse(const Interval& a) const {
    if (mpfr_cmp_ui(a.hi.get(), 1) >= 0)
      throw Error(ErrorCode::SeqOperandAtOne, "sequence operand enclosure reaches 1");
    Interval d(prec_), r(prec_);
    mpfr_ui_sub(d.lo.get(), 1, a.hi.get(), MPFR_RNDD);
    mpfr_ui_sub(d.hi.get(), 1, a.lo.get(), MPFR_RNDU);
    mpfr_ui_div(r.lo.get(), 1, d.hi.get(), MPFR_RNDD);
    mpfr_ui_div(r.hi.get(), 1, d.lo.get(), MPFR_RNDU);
    return r;
  }
  mpfr_prec_t precision() const noexcept { return prec_; }

 private:
  mpfr_prec_t prec_;
  std::vector<Interval> x_;
};

using ScalarMatrix = std::vector<std::vector<std::optional<BigFloat>>>;

// Solves (I - J) x = b without pivoting. For a nonnegative J with spectral
// radius below 1 every pivot is positive; a nonpositive pivot means the point
// is at or beyond the singularity.
std::optional<std::vector<BigFloat>> solve_i_minus(const ScalarRing& ring, const ScalarMatrix& jac,
                                                   std::vector<BigFloat> b) {
  const std::size_t n = b.size();
  std::vector<std::vector<BigFloat>> m(n, std::vector<BigFloat>(n, ring.zero()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (jac[i][j]) mpfr_neg(m[i][j].get(), jac[i][j]->get(), MPFR_RNDN);
      if (i == j) m[i][j] = ring.add(m[i][j], ring.one());
    }
  for (std::size_t i = 0; i < n; ++i) {
    if (mpfr_sgn(m[i][i].get()) <= 0) return std::nullopt;
    for (std::size_t r = i + 1; r < n; ++r) {
      if (mpfr_zero_p(m[r][i].get())) continue;
      const BigFloat f = ring.div(m[r][i], m[i][i]);
      for (std::size_t c = i + 1; c < n; ++c) m[r][c] = ring.sub(m[r][c], ring.mul(f, m[i][c]));
      b[r] = ring.sub(b[r], ring.mul(f, b[i]));
    }
  }
  std::vector<BigFloat> x(n, ring.zero());
  for (std::size_t i = n; i-- > 0;) {
    BigFloat acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc = ring.sub(acc, ring.mul(m[i][c], x[c]));
    x[i] = ring.div(acc, m[i][i]);
  }
  return x;
}

std::size_t default_budget(mpfr_prec_t p) {
  std::size_t bits = 0;
  while ((mpfr_prec_t{1} << bits) < p) ++bits;
  return 64 * std::max<std::size_t>(bits, 1);
}

std::vector<BigFloat> ones(const ScalarRing& ring, std::size_t n) { return std::vector<BigFloat>(n, ring.one()); }

// Box y +/- delta * v at precision p, clipped below at 0.
std::vector<Interval> inflate(const std::vector<BigFloat>& y, const std::vector<BigFloat>& v, const BigFloat& delta,
                              mpfr_prec_t p, bool clip) {
  std::vector<Interval> box;
  BigFloat t(y[0].precision());
  for (std::size_t i = 0; i < y.size(); ++i) {
    Interval b(p);
    mpfr_mul(t.get(), delta.get(), v[i].get(), MPFR_RNDU);
    mpfr_sub(b.lo.get(), y[i].get(), t.get(), MPFR_RNDD);
    mpfr_add(b.hi.get(), y[i].get(), t.get(), MPFR_RNDU);
    if (clip && mpfr_sgn(b.lo.get()) < 0) mpfr_set_zero(b.lo.get(), 1);
    box.push_back(std::move(b));
  }
  return box;
}

bool inside(const std::vector<Interval>& inner, const std::vector<Interval>& outer) {
  for (std::size_t i = 0; i < inner.size(); ++i)
    if (!outer[i].contains(inner[i])) return false;
  return true;
}

// Upper bound of (J_box * v)_i < v_i for every row: the Jacobian is a
// contraction on the whole box in the v-weighted max norm.
bool contracts(const IntervalRing& ring, const std::vector<std::vector<std::optional<Interval>>>& jac,
               const std::vector<BigFloat>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    BigFloat acc(ring.precision() + 64), t(ring.precision() + 64);
    for (std::size_t j = 0; j < n; ++j) {
      if (!jac[i][j]) continue;
      mpfr_mul(t.get(), jac[i][j]->hi.get(), v[j].get(), MPFR_RNDU);
      mpfr_add(acc.get(), acc.get(), t.get(), MPFR_RNDU);
    }
    if (!mpfr_less_p(acc.get(), v[i].get())) return false;
  }
  return true;
}

}  // namespace

NodeValues eval_system(const GFSystem& gfs, const Point& point, mpfr_prec_t precision, const OracleOptions& options) {
  if (precision < 2 || precision > MPFR_PREC_MAX / 4)
    throw Error(ErrorCode::InvalidPoint, "working precision out of range");
  const auto x = point.ordered(gfs.variables());
  const std::size_t n = gfs.class_count();
  const ScalarRing sring(precision + options.guard_bits, x);
  const std::size_t budget = options.iteration_budget ? options.iteration_budget : default_budget(precision);

  // Newton from 0 on the class system; for these monotone convex maps the
  // iterates increase towards the least fixed point whenever it exists.
  std::vector<BigFloat> y(n, sring.zero());
  BigFloat tol(sring.precision());
  std::size_t it = 0;
  double previous = HUGE_VAL;
  ScalarMatrix jac;
  for (;;) {
    if (++it > budget) throw Error(ErrorCode::Divergent, "oracle iteration budget exhausted");
    const auto nodes = evaluate_nodes(gfs, sring, std::span<const BigFloat>(y), SeqMode::Direct);
    const auto h = system_map(gfs, sring, nodes, std::span<const BigFloat>(y), SeqMode::Direct);
    jac = system_jacobian(gfs, sring, nodes, std::span<const BigFloat>(y), SeqMode::Direct);
    std::vector<BigFloat> residual;
    for (std::size_t i = 0; i < n; ++i) residual.push_back(sring.sub(h[i], y[i]));
    const auto delta = solve_i_minus(sring, jac, std::move(residual));
    if (!delta) throw Error(ErrorCode::Divergent, "Jacobian lost diagonal dominance; point is outside the domain");
    double step = 0, size = 1;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = sring.add(y[i], (*delta)[i]);
      if (mpfr_sgn(y[i].get()) < 0) throw Error(ErrorCode::Divergent, "Newton step left the positive orthant");
      if (mpfr_cmp_d(y[i].get(), options.growth_threshold) > 0)
        throw Error(ErrorCode::Divergent, "class value exceeded the growth threshold");
      step = std::max(step, std::fabs((*delta)[i].to_double()));
      size = std::max(size, y[i].to_double());
    }
    if (step <= std::ldexp(size, -static_cast<int>(sring.precision()) + 4)) break;
    // Near the singularity rounding noise is amplified by (I - J)^-1 and the
    // steps stall; accept once they are far below the target precision.
    if (step <= std::ldexp(size, -static_cast<int>(precision) - 4) && step > 0.5 * previous) break;
    previous = step;
  }

  // Certification: the box Y = y +/- delta*v with v = (I - J)^-1 1 must
  // satisfy H(Y) inside Y and J(Y) v < v. The first gives a fixed point in Y
  // (Brouwer), the second makes it the one with spectral radius below 1,
  // which for these convex maps is the least fixed point.
  {
    const auto nodes = evaluate_nodes(gfs, sring, std::span<const BigFloat>(y), SeqMode::Direct);
    jac = system_jacobian(gfs, sring, nodes, std::span<const BigFloat>(y), SeqMode::Direct);
  }
  const auto v = solve_i_minus(sring, jac, ones(sring, n));
  if (!v) throw Error(ErrorCode::Divergent, "Jacobian is singular at the computed point");
  double ymax = 1;
  for (const auto& yi : y) ymax = std::max(ymax, yi.to_double());
  double vmax = 0;
  for (const auto& vi : *v) vmax = std::max(vmax, vi.to_double());

  const IntervalRing iring(precision, x);
  std::optional<std::vector<Interval>> box;
  std::optional<Error> last;
  BigFloat delta(sring.precision());
  mpfr_set_d(delta.get(), ymax / vmax, MPFR_RNDN);
  mpfr_mul_2si(delta.get(), delta.get(), -static_cast<long>(precision) + 2, MPFR_RNDN);
  for (int attempt = 0; attempt < 48 && !box; ++attempt, mpfr_mul_2ui(delta.get(), delta.get(), 2, MPFR_RNDN)) {
    auto candidate = inflate(y, *v, delta, precision, true);
    try {
      const auto nodes = evaluate_nodes(gfs, iring, std::span<const Interval>(candidate), SeqMode::Direct);
      const auto h = system_map(gfs, iring, nodes, std::span<const Interval>(candidate), SeqMode::Direct);
      if (!inside(h, candidate)) continue;
      const auto jbox = system_jacobian(gfs, iring, nodes, std::span<const Interval>(candidate), SeqMode::Direct);
      if (!contracts(iring, jbox, *v)) continue;
      box = std::move(candidate);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SeqOperandAtOne) throw;
      last = e;
    }
  }
  if (!box) {
    if (last) throw *last;
    throw Error(ErrorCode::ContractionFailed, "could not certify the enclosure at " + std::to_string(precision) + " bits");
  }

  for (std::size_t r = 0; r < options.refine_rounds; ++r) {
    const auto nodes = evaluate_nodes(gfs, iring, std::span<const Interval>(*box), SeqMode::Direct);
    const auto h = system_map(gfs, iring, nodes, std::span<const Interval>(*box), SeqMode::Direct);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (mpfr_greater_p(h[i].lo.get(), (*box)[i].lo.get())) {
        mpfr_set((*box)[i].lo.get(), h[i].lo.get(), MPFR_RNDD);
        changed = true;
      }
      if (mpfr_less_p(h[i].hi.get(), (*box)[i].hi.get())) {
        mpfr_set((*box)[i].hi.get(), h[i].hi.get(), MPFR_RNDU);
        changed = true;
      }
    }
    if (!changed) break;
  }

  NodeValues out;
  out.precision = precision;
  out.iterations = it;
  out.nodes = evaluate_nodes(gfs, iring, std::span<const Interval>(*box), SeqMode::Direct);
  out.classes = std::move(*box);
  return out;
}

Derivatives eval_derivatives(const GFSystem& gfs, const Point& point, const NodeValues& values) {
  const auto x = point.ordered(gfs.variables());
  const mpfr_prec_t p = values.precision;
  const std::size_t n = gfs.class_count();
  const std::size_t nv = gfs.variables().size();
  const IntervalRing iring(p, x);
  const ScalarRing sring(p + 32, x);

  const auto jbox = system_jacobian(gfs, iring, values.nodes, std::span<const Interval>(values.classes), SeqMode::Direct);
  ScalarMatrix jmid(n, std::vector<std::optional<BigFloat>>(n));
  auto mid = [&](const Interval& iv) {
    BigFloat m(sring.precision());
    mpfr_add(m.get(), iv.lo.get(), iv.hi.get(), MPFR_RNDN);
    mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
    return m;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (jbox[i][j]) jmid[i][j] = mid(*jbox[i][j]);
  const auto v = solve_i_minus(sring, jmid, ones(sring, n));
  if (!v) throw Error(ErrorCode::SingularJacobian, "I - dH/dY is singular at this point");

  Derivatives out;
  out.values.assign(n, std::vector<Interval>(nv, Interval(p)));
  for (std::size_t var = 0; var < nv; ++var) {
    auto leaf = [&](const GfTerm& t) -> std::optional<Interval> {
      if (t.op != GfOp::Monomial || t.exponent[var] == 0) return std::nullopt;
      SizeVector lowered = t.exponent;
      lowered[var] -= 1;
      return iring.scale(iring.monomial(lowered), t.exponent[var]);
    };
    const auto d = differentiate_nodes(gfs, iring, values.nodes, SeqMode::Direct, leaf);
    std::vector<Interval> b;
    std::vector<BigFloat> bmid;
    for (std::size_t c = 0; c < n; ++c) {
      const auto& dc = d[static_cast<std::size_t>(gfs.class_root(c))];
      b.push_back(dc ? *dc : iring.zero());
      bmid.push_back(mid(b.back()));
    }
    const auto approx = solve_i_minus(sring, jmid, bmid);
    if (!approx) throw Error(ErrorCode::SingularJacobian, "I - dH/dY is singular at this point");

    // X = approx +/- delta*v is certified once J_box X + b lies inside X.
    double amax = 1, vmax = 0;
    for (const auto& a : *approx) amax = std::max(amax, std::fabs(a.to_double()));
    for (const auto& vi : *v) vmax = std::max(vmax, vi.to_double());
    BigFloat delta(sring.precision());
    mpfr_set_d(delta.get(), amax / vmax, MPFR_RNDN);
    mpfr_mul_2si(delta.get(), delta.get(), -static_cast<long>(p) + 2, MPFR_RNDN);
    std::optional<std::vector<Interval>> box;
    // The first attempt uses the point itself, which succeeds when the
    // derivative is exactly representable.
    BigFloat none(sring.precision());
    for (int attempt = 0; attempt < 49 && !box; ++attempt) {
      if (attempt > 1) mpfr_mul_2ui(delta.get(), delta.get(), 2, MPFR_RNDN);
      auto candidate = inflate(*approx, *v, attempt == 0 ? none : delta, p, false);
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        Interval acc = b[i];
        for (std::size_t j = 0; j < n; ++j)
          if (jbox[i][j]) acc = iring.add(acc, iring.mul(*jbox[i][j], candidate[j]));
        ok = candidate[i].contains(acc);
      }
      if (ok) box = std::move(candidate);
    }
    if (!box) throw Error(ErrorCode::SingularJacobian, "could not certify derivative enclosures");
    for (std::size_t c = 0; c < n; ++c) out.values[c][var] = std::move((*box)[c]);
  }
  return out;
}

Derivatives eval_derivatives(const GFSystem& gfs, const Point& point, mpfr_prec_t precision,
                             const OracleOptions& options) {
  return eval_derivatives(gfs, point, eval_system(gfs, point, precision, options));
}

}  // namespace combkit
