#include "combkit/harness.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>
#include <unordered_map>

#include "combkit/error.hpp"
#include "combkit/series.hpp"

namespace combkit {

std::pair<double, double> chi_square_uniform(const std::vector<std::uint64_t>& observed, std::uint64_t categories) {
  if (categories < 2) throw Error(ErrorCode::TooFewCategories, "chi-square needs at least 2 categories");
  if (observed.size() > categories) return {std::numeric_limits<double>::infinity(), 0.0};
  double total = 0;
  for (auto o : observed) total += static_cast<double>(o);
  const double expected = total / static_cast<double>(categories);
  double chi2 = static_cast<double>(categories - observed.size()) * expected;
  for (auto o : observed) {
    const double d = static_cast<double>(o) - expected;
    chi2 += d * d / expected;
  }
  const double p = boost::math::gamma_q(static_cast<double>(categories - 1) / 2, chi2 / 2);
  return {chi2, p};
}

UniformityRow uniformity_at_size(const ClassSystem& system, const std::string& class_name, std::int64_t size,
                                 const UniformityOptions& options) {
  system.require_valid();
  if (system.variable_count() != 1)
    throw Error(ErrorCode::BoundsMismatch, "the uniformity harness needs a univariate system");
  if (size < 0) throw std::invalid_argument("size must be non-negative");
  const auto counts = counting_sequence(system, class_name, static_cast<std::uint32_t>(size));
  const mpz_class& c = counts[static_cast<std::size_t>(size)];
  if (c < 2)
    throw Error(ErrorCode::TooFewCategories, class_name + " has " + c.get_str() + " object(s) of size " +
                                                 std::to_string(size) + "; chi-square needs at least 2");
  if (!c.fits_ulong_p()) throw Error(ErrorCode::TooFewCategories, "too many objects of this size to tabulate");

  UniformityRow row;
  row.size = size;
  row.count = c.get_ui();
  row.samples = options.samples;
  const std::string& var = system.variables().front();
  const Point point =
      options.point ? *options.point : tune(system, class_name, {{var, static_cast<double>(size)}}, options.tune).point;
  row.point = point.to_string();
  const Sampler sampler(system, point, options.sampler);
  const AcceptanceWindow window{SizeVector(1, size), SizeVector(1, size)};
  const std::int32_t root = system.class_root(system.class_index(class_name));

  std::unordered_map<std::string, std::uint64_t> tally;
  AttemptWorkspace ws;
  std::uint64_t accepted = 0;
  for (std::uint64_t a = 0; accepted < options.samples; ++a) {
    StreamEntropy entropy(StreamEntropy::attempt_seed(options.seed, a));
    if (sampler.attempt(root, &window, entropy, ws, row.stats) != AttemptStatus::Accepted) continue;
    ++tally[structure_key(ws.trace)];
    ++accepted;
  }
  std::vector<std::uint64_t> observed;
  observed.reserve(tally.size());
  for (const auto& [key, n] : tally) observed.push_back(n);
  row.observed_distinct = observed.size();
  std::tie(row.chi2, row.p_value) = chi_square_uniform(observed, row.count);
  return row;
}

BenchReport bench_rejection(const ClassSystem& system, const std::string& class_name, const Point& point,
                            const AcceptanceWindow& window, const BenchOptions& options) {
  system.require_valid();
  SamplerOptions early_opt = options.sampler, base_opt = options.sampler;
  early_opt.early_rejection = true;
  base_opt.early_rejection = false;
  const Sampler early(system, point, early_opt), baseline(system, point, base_opt);
  const std::int32_t root = system.class_root(system.class_index(class_name));
  const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(options.blocks, options.attempts));

  BenchReport report;
  report.attempts = options.attempts;
  std::vector<double> t_early(blocks), t_base(blocks);
  AttemptWorkspace ws;
  struct Outcome {
    bool accepted;
    std::vector<Decision> decisions;
  };
  std::vector<Outcome> first;

  using clock = std::chrono::steady_clock;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::uint64_t begin = options.attempts * b / blocks, end = options.attempts * (b + 1) / blocks;
    auto run = [&](const Sampler& s, SampleStats& stats, std::vector<Outcome>* record) {
      const auto start = clock::now();
      for (std::uint64_t a = begin; a < end; ++a) {
        StreamEntropy entropy(StreamEntropy::attempt_seed(options.seed, a));
        const bool ok = s.attempt(root, &window, entropy, ws, stats) == AttemptStatus::Accepted;
        if (record) {
          record->push_back({ok, ok ? ws.trace.decisions : std::vector<Decision>{}});
        } else {
          const Outcome& o = first[a - begin];
          if (o.accepted != ok) {
            ++report.outcome_mismatches;
          } else if (ok && !(o.decisions.size() == ws.trace.decisions.size() &&
                             std::equal(o.decisions.begin(), o.decisions.end(), ws.trace.decisions.begin(),
                                        [](const Decision& x, const Decision& y) {
                                          return x.node == y.node && x.outcome == y.outcome && x.real == y.real;
                                        }))) {
            ++report.trace_mismatches;
          }
        }
      }
      return std::chrono::duration<double>(clock::now() - start).count();
    };
    first.clear();
    // Alternate which variant runs first so cache effects cancel.
    if (b % 2 == 0) {
      t_early[b] = run(early, report.early, &first);
      t_base[b] = run(baseline, report.baseline, nullptr);
    } else {
      t_base[b] = run(baseline, report.baseline, &first);
      t_early[b] = run(early, report.early, nullptr);
    }
  }
  report.accepted = report.early.accepted;
  for (std::size_t b = 0; b < blocks; ++b) {
    report.early_seconds += t_early[b];
    report.baseline_seconds += t_base[b];
  }
  report.speedup = report.baseline_seconds / report.early_seconds;

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, blocks - 1);
  std::vector<double> ratios;
  ratios.reserve(options.resamples);
  for (std::size_t r = 0; r < options.resamples; ++r) {
    double e = 0, s = 0;
    for (std::size_t i = 0; i < blocks; ++i) {
      const std::size_t b = pick(rng);
      e += t_early[b];
      s += t_base[b];
    }
    ratios.push_back(s / e);
  }
  std::sort(ratios.begin(), ratios.end());
  if (!ratios.empty()) {
    report.ci_low = ratios[static_cast<std::size_t>(0.025 * static_cast<double>(ratios.size() - 1))];
    report.ci_high = ratios[static_cast<std::size_t>(0.975 * static_cast<double>(ratios.size() - 1))];
  }
  return report;
}

}  // namespace combkit
