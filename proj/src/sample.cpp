#include "combkit/sample.hpp"

#include "combkit/error.hpp"
#include "combkit/series.hpp"

namespace combkit {

namespace {

// Counting-based emptiness check is skipped above this size.
constexpr std::int64_t kCountingLimit = 4096;

}  // namespace

void check_window(const ClassSystem& system, const std::string& class_name, const AcceptanceWindow& window) {
  const SizeVector lo = min_size(system, class_name), hi = max_size(system, class_name);
  for (std::size_t v = 0; v < system.variable_count(); ++v) {
    if (window.lo[v] > window.hi[v] || window.hi[v] < lo[v] || (hi[v] != kUnbounded && window.lo[v] > hi[v]))
      throw Error(ErrorCode::WindowEmpty, "no object of " + class_name + " has " + system.variables()[v] +
                                              "-size in [" + std::to_string(window.lo[v]) + ", " +
                                              std::to_string(window.hi[v]) + "]");
  }
  if (system.variable_count() != 1 || window.hi[0] == kUnbounded || window.hi[0] > kCountingLimit) return;
  const auto counts = counting_sequence(system, class_name, static_cast<std::uint32_t>(window.hi[0]));
  for (std::int64_t s = window.lo[0]; s <= window.hi[0]; ++s)
    if (counts[static_cast<std::size_t>(s)] != 0) return;
  throw Error(ErrorCode::WindowEmpty, "no object of " + class_name + " has size in [" + std::to_string(window.lo[0]) +
                                          ", " + std::to_string(window.hi[0]) + "]");
}

SampleResult sample_traces(const ClassSystem& system, const SampleRequest& request) {
  system.require_valid();
  const std::size_t c = system.class_index(request.class_name);
  SampleResult result;
  if (!request.target.empty()) {
    result.window = window_for(system, request.target, request.tolerance);
    check_window(system, request.class_name, *result.window);
  }
  result.point = request.point ? *request.point : tune(system, request.class_name, request.target, request.tune).point;
  const Sampler sampler(system, result.point, request.sampler);
  const AcceptanceWindow* window = result.window ? &*result.window : nullptr;
  AttemptWorkspace ws;
  for (std::uint64_t a = 0; result.traces.size() < request.n; ++a) {
    if (request.max_attempts != 0 && a >= request.max_attempts)
      throw Error(ErrorCode::NoConvergence, "no acceptance within " + std::to_string(request.max_attempts) +
                                                " attempts (" + std::to_string(result.traces.size()) + " of " +
                                                std::to_string(request.n) + " accepted)");
    StreamEntropy entropy(StreamEntropy::attempt_seed(request.seed, a));
    if (sampler.attempt(system.class_root(c), window, entropy, ws, result.stats) != AttemptStatus::Accepted) continue;
    ChoiceTrace t = ws.trace;
    t.class_name = request.class_name;
    t.stream = entropy.seed();
    result.traces.push_back(std::move(t));
  }
  return result;
}

}  // namespace combkit
