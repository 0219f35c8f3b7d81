#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace combkit {

using Exponent = std::vector<std::uint32_t>;

/// Multivariate power series with exact integer coefficients, truncated to a
/// box: exponent e is kept iff e[i] <= bounds[i] for every variable.
/// Storage is sparse; absent entries are zero.
class TruncatedSeries {
 public:
  TruncatedSeries() = default;
  TruncatedSeries(std::vector<std::string> variables, std::vector<std::uint32_t> bounds);

  static TruncatedSeries constant(std::vector<std::string> variables,
                                  std::vector<std::uint32_t> bounds, const mpz_class& c);
  static TruncatedSeries monomial(std::vector<std::string> variables,
                                  std::vector<std::uint32_t> bounds, const Exponent& e,
                                  const mpz_class& c = 1);

  const std::vector<std::string>& variables() const noexcept { return variables_; }
  const std::vector<std::uint32_t>& bounds() const noexcept { return bounds_; }
  const std::map<Exponent, mpz_class>& coefficients() const noexcept { return coeffs_; }

  mpz_class coefficient(const Exponent& e) const;
  mpz_class constant_term() const;
  /// Sets a coefficient; zero erases, out-of-bounds exponents are ignored.
  void set(const Exponent& e, mpz_class value);
  void add_to(const Exponent& e, const mpz_class& value);

  bool in_bounds(const Exponent& e) const noexcept;
  bool is_zero() const noexcept { return coeffs_.empty(); }
  std::size_t term_count() const noexcept { return coeffs_.size(); }
  /// Sum of the per-variable bounds.
  std::uint64_t box_degree() const noexcept;
  bool same_shape(const TruncatedSeries& other) const noexcept;

  /// Drops every term of total degree > max_total.
  TruncatedSeries truncated_total(std::uint64_t max_total) const;

  friend bool operator==(const TruncatedSeries& a, const TruncatedSeries& b) {
    return a.variables_ == b.variables_ && a.bounds_ == b.bounds_ && a.coeffs_ == b.coeffs_;
  }

 private:
  std::vector<std::string> variables_;
  std::vector<std::uint32_t> bounds_;
  std::map<Exponent, mpz_class> coeffs_;
};

std::uint64_t total_degree(const Exponent& e) noexcept;

TruncatedSeries series_add(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries series_sub(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries series_negate(const TruncatedSeries& a);
/// Truncated product; `max_total` additionally drops terms above that total degree.
TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b,
                           std::optional<std::uint64_t> max_total = std::nullopt);
/// Multiplicative inverse; the constant term must be +1 or -1.
TruncatedSeries series_inverse(const TruncatedSeries& a,
                               std::optional<std::uint64_t> max_total = std::nullopt);
/// 1 / (1 - a) = sum over k >= 0 of a^k. Throws ConstantTermNonzero if a(0) != 0.
TruncatedSeries series_quasi_inverse(const TruncatedSeries& a);

}  // namespace combkit
