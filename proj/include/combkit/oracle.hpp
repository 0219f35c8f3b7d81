#pragma once

// Certified evaluation of a generating-function system at a positive real
// point. Every value is an interval [lo, hi] whose endpoints are P-bit
// floating-point numbers obtained with directed rounding.

#include <gmpxx.h>
#include <mpfr.h>

#include <map>
#include <string>
#include <vector>

#include "combkit/gf.hpp"

namespace combkit {

/// Owning wrapper around one mpfr_t. Copies keep the source precision.
class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t precision = 53);
  BigFloat(const BigFloat& other);
  BigFloat(BigFloat&& other) noexcept;
  BigFloat& operator=(const BigFloat& other);
  BigFloat& operator=(BigFloat&& other) noexcept;
  ~BigFloat();

  mpfr_ptr get() noexcept { return value_; }
  mpfr_srcptr get() const noexcept { return value_; }
  mpfr_prec_t precision() const noexcept { return mpfr_get_prec(value_); }
  double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(value_, rnd); }

 private:
  mpfr_t value_;
  bool live_ = true;
};

struct Interval {
  BigFloat lo;
  BigFloat hi;

  explicit Interval(mpfr_prec_t precision = 53) : lo(precision), hi(precision) {}
  mpfr_prec_t precision() const noexcept { return lo.precision(); }
  bool contains(const mpq_class& q) const;
  bool contains(const Interval& inner) const;
  /// hi - lo rounded up.
  double width() const;
  double mid() const;
  std::string lo_string() const;
  std::string hi_string() const;
};

/// Parses "0.48", "-1.5e-3", "12", "1/5" exactly.
mpq_class parse_rational(const std::string& text);

/// Terminating decimal expansion of q, or "num/den" when there is none.
std::string exact_decimal(const mpq_class& q);

/// Control-point coordinates as exact rationals, keyed by variable name.
class Point {
 public:
  Point() = default;
  explicit Point(std::map<std::string, mpq_class> values) : values_(std::move(values)) {}
  /// Parses assignments such as "z=0.2".
  static Point parse(const std::vector<std::string>& assignments);

  const std::map<std::string, mpq_class>& values() const noexcept { return values_; }
  void set(const std::string& var, mpq_class v) { values_[var] = std::move(v); }
  const mpq_class& at(const std::string& var) const;
  /// Values in the given variable order. Throws InvalidPoint for a missing,
  /// unknown or non-positive coordinate.
  std::vector<mpq_class> ordered(const std::vector<std::string>& variables) const;
  std::string to_string() const;

 private:
  std::map<std::string, mpq_class> values_;
};

struct OracleOptions {
  /// Extra bits for the floating-point Newton phase.
  mpfr_prec_t guard_bits = 32;
  /// Any class value above this means the point is outside the domain.
  double growth_threshold = 1e6;
  /// 0 selects 64 * ceil(log2(P)).
  std::size_t iteration_budget = 0;
  /// Rounds of Y <- H(Y) intersected with Y after certification.
  std::size_t refine_rounds = 16;
};

struct NodeValues {
  mpfr_prec_t precision = 53;
  /// One enclosure per specification node id.
  std::vector<Interval> nodes;
  /// One enclosure per class.
  std::vector<Interval> classes;
  /// Newton iterations used before certification.
  std::size_t iterations = 0;

  const Interval& node(std::int32_t id) const { return nodes.at(static_cast<std::size_t>(id)); }
};

NodeValues eval_system(const GFSystem& gfs, const Point& point, mpfr_prec_t precision,
                       const OracleOptions& options = {});

/// Enclosures of dY_c / dx_v, indexed [class][variable].
struct Derivatives {
  std::vector<std::vector<Interval>> values;
  const Interval& at(std::size_t cls, std::size_t var) const { return values.at(cls).at(var); }
};

Derivatives eval_derivatives(const GFSystem& gfs, const Point& point, const NodeValues& values);
Derivatives eval_derivatives(const GFSystem& gfs, const Point& point, mpfr_prec_t precision,
                             const OracleOptions& options = {});

}  // namespace combkit
