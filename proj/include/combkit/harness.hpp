#pragma once

// Experiment harnesses: exact-size uniformity and early-rejection timing.

#include <optional>
#include <string>
#include <vector>

#include "combkit/sampler.hpp"
#include "combkit/tuner.hpp"

namespace combkit {

struct UniformityOptions {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 0;
  /// Sampling point; when empty it is tuned so that E = size.
  std::optional<Point> point;
  SamplerOptions sampler;
  TuneOptions tune;
};

struct UniformityRow {
  std::int64_t size = 0;
  /// Number of objects of this size, from the counting sequence.
  std::uint64_t count = 0;
  std::uint64_t observed_distinct = 0;
  std::uint64_t samples = 0;
  double chi2 = 0;
  double p_value = 0;
  /// Control point used.
  std::string point;
  SampleStats stats;
};

/// Pearson chi-square of `observed` against the uniform law on `categories`
/// cells; unobserved cells count with observation 0. Returns {chi2, p}.
std::pair<double, double> chi_square_uniform(const std::vector<std::uint64_t>& observed, std::uint64_t categories);

/// Draws `samples` objects of exactly `size` (univariate systems) and tests
/// them for uniformity. Throws TooFewCategories when fewer than 2 objects
/// of that size exist.
UniformityRow uniformity_at_size(const ClassSystem& system, const std::string& class_name, std::int64_t size,
                                 const UniformityOptions& options);

struct BenchOptions {
  std::uint64_t attempts = 10000;
  std::uint64_t seed = 0;
  /// Timed blocks for the bootstrap.
  std::size_t blocks = 100;
  std::size_t resamples = 2000;
  SamplerOptions sampler;
};

struct BenchReport {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  /// Attempts whose acceptance differs between the two samplers.
  std::uint64_t outcome_mismatches = 0;
  /// Accepted attempts whose traces differ.
  std::uint64_t trace_mismatches = 0;
  SampleStats early;
  SampleStats baseline;
  // Timing section.
  double early_seconds = 0;
  double baseline_seconds = 0;
  double speedup = 0;
  double ci_low = 0;
  double ci_high = 0;
};

/// Runs attempt i of both samplers on the same stream, in interleaved
/// blocks; speedup = baseline time / early time with a percentile bootstrap
/// over blocks.
BenchReport bench_rejection(const ClassSystem& system, const std::string& class_name, const Point& point,
                            const AcceptanceWindow& window, const BenchOptions& options);

}  // namespace combkit
