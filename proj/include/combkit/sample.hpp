#pragma once

// One-call sampling: tune (when no point is given), derive the acceptance
// window, draw traces and build objects.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "combkit/sampler.hpp"
#include "combkit/tuner.hpp"

namespace combkit {

struct SampleRequest {
  std::string class_name;
  std::size_t n = 1;
  /// Explicit control point; tuned from `target` when empty.
  std::optional<Point> point;
  /// Target sizes; also define the acceptance window when non-empty.
  std::map<std::string, double> target;
  double tolerance = 0;
  std::uint64_t seed = 0;
  SamplerOptions sampler;
  TuneOptions tune;
  /// 0 means unlimited.
  std::uint64_t max_attempts = 0;
};

struct SampleResult {
  Point point;
  std::optional<AcceptanceWindow> window;
  std::vector<ChoiceTrace> traces;
  SampleStats stats;
};

/// Throws WindowEmpty when no object of the class fits the window, judged
/// from the size bounds and, for univariate systems, from the counts.
void check_window(const ClassSystem& system, const std::string& class_name, const AcceptanceWindow& window);

SampleResult sample_traces(const ClassSystem& system, const SampleRequest& request);

template <class T, class U>
std::vector<U> sample(const ClassSystem& system, const SampleRequest& request, Builder<T, U>& builder) {
  const SampleResult r = sample_traces(system, request);
  std::vector<U> out;
  out.reserve(r.traces.size());
  for (const auto& t : r.traces) out.push_back(build(t, system, builder));
  return out;
}

}  // namespace combkit
