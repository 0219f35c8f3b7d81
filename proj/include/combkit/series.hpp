#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "combkit/gf.hpp"
#include "combkit/truncated_series.hpp"

namespace combkit {

/// Ring of truncated series over a fixed box, optionally also truncated at a
/// total degree. Used with the templates in gf.hpp.
class SeriesRing {
 public:
  SeriesRing(std::vector<std::string> variables, std::vector<std::uint32_t> bounds,
             std::optional<std::uint64_t> max_total = std::nullopt);

  TruncatedSeries zero() const;
  TruncatedSeries one() const;
  TruncatedSeries monomial(const SizeVector& exponent) const;
  TruncatedSeries add(const TruncatedSeries& a, const TruncatedSeries& b) const;
  TruncatedSeries sub(const TruncatedSeries& a, const TruncatedSeries& b) const;
  TruncatedSeries mul(const TruncatedSeries& a, const TruncatedSeries& b) const;
  TruncatedSeries quasi_inverse(const TruncatedSeries& a) const;
  TruncatedSeries inverse(const TruncatedSeries& a) const;
  TruncatedSeries truncate(const TruncatedSeries& a) const;

  std::uint64_t max_total() const noexcept { return max_total_; }

 private:
  std::vector<std::string> variables_;
  std::vector<std::uint32_t> bounds_;
  std::uint64_t max_total_;
};

enum class SolveMethod {
  /// Quadratically convergent Newton iteration on the polynomial form.
  Newton,
  /// Plain iteration Y <- H(Y); kept as an independent oracle.
  FixedPoint,
};

struct SolveOptions {
  SolveMethod method = SolveMethod::Newton;
  /// Called after each iteration with the current class series. For Newton,
  /// iteration i >= 1 has every coefficient of total degree < 2^i final.
  std::function<void(std::size_t iteration, const std::vector<TruncatedSeries>&)> on_iteration;
};

struct SeriesSolution {
  std::vector<std::string> class_names;
  std::vector<TruncatedSeries> series;
  std::size_t iterations = 0;

  const TruncatedSeries& at(const std::string& class_name) const;
};

/// Solves Y = H(Y) to the given per-variable bounds (one per variable, in
/// the system's variable order).
SeriesSolution newton_solve(const GFSystem& gfs, const std::vector<std::uint32_t>& bounds,
                            const SolveOptions& options = {});

/// Univariate systems: coefficients c_0..c_n of the class.
std::vector<mpz_class> counting_sequence(const ClassSystem& system, const std::string& class_name, std::uint32_t n,
                                         SolveMethod method = SolveMethod::Newton);

/// Multivariate: c_k = number of objects with `variable`-size k and every
/// other variable within `other_bounds` (which must name all other variables).
std::vector<mpz_class> counting_sequence(const ClassSystem& system, const std::string& class_name, std::uint32_t n,
                                         const std::string& variable,
                                         const std::map<std::string, std::uint32_t>& other_bounds);

/// Full coefficient table up to explicit per-variable bounds (all variables required).
TruncatedSeries counting_table(const ClassSystem& system, const std::string& class_name,
                               const std::map<std::string, std::uint32_t>& bounds);

std::vector<std::string> to_decimal_strings(const std::vector<mpz_class>& values);

}  // namespace combkit
