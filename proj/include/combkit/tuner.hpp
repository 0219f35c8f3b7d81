#pragma once

// Control-parameter tuning: find x with E_i(x) = x_i dC/dx_i / C = n_i.

#include <map>
#include <optional>
#include <string>

#include "combkit/oracle.hpp"
#include "combkit/system.hpp"

namespace combkit {

/// Enclosure of the expected size per variable at `point`.
std::map<std::string, Interval> expected_size(const ClassSystem& system, const std::string& class_name,
                                              const Point& point, mpfr_prec_t precision = 53,
                                              const OracleOptions& oracle = {});

struct TuneOptions {
  /// Stop when every |E_i - n_i| <= tolerance * n_i.
  double tolerance = 0.005;
  std::size_t max_iterations = 200;
  mpfr_prec_t precision = 53;
  /// Univariate searches stay below rho * (1 - singular_margin).
  double singular_margin = 1e-9;
  /// Values for variables without a (positive) target; default 1.
  std::map<std::string, double> pinned;
  OracleOptions oracle;
};

struct TuneResult {
  Point point;
  std::map<std::string, Interval> expected;
  std::size_t iterations = 0;
  /// Univariate: the bracketed singularity, when one was found.
  std::optional<double> rho;
};

/// Throws Infeasible when a target cannot be reached inside the domain and
/// NoConvergence when the iteration budget runs out.
TuneResult tune(const ClassSystem& system, const std::string& class_name, const std::map<std::string, double>& target,
                const TuneOptions& options = {});

/// Decimal rendering with 17 significant digits, parsed back exactly.
mpq_class round_coordinate(double x);

}  // namespace combkit
