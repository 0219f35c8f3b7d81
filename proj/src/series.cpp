#include "combkit/series.hpp"

#include <algorithm>
#include <limits>

#include "combkit/error.hpp"

namespace combkit {

SeriesRing::SeriesRing(std::vector<std::string> variables, std::vector<std::uint32_t> bounds,
                       std::optional<std::uint64_t> max_total)
    : variables_(std::move(variables)), bounds_(std::move(bounds)) {
  std::uint64_t box = 0;
  for (auto b : bounds_) box += b;
  max_total_ = std::min(box, max_total.value_or(box));
}

TruncatedSeries SeriesRing::zero() const { return TruncatedSeries(variables_, bounds_); }

TruncatedSeries SeriesRing::one() const { return TruncatedSeries::constant(variables_, bounds_, 1); }

TruncatedSeries SeriesRing::monomial(const SizeVector& exponent) const {
  Exponent e(exponent.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (exponent[i] > static_cast<std::int64_t>(bounds_[i])) return zero();
    e[i] = static_cast<std::uint32_t>(exponent[i]);
  }
  if (total_degree(e) > max_total_) return zero();
  return TruncatedSeries::monomial(variables_, bounds_, e);
}

TruncatedSeries SeriesRing::add(const TruncatedSeries& a, const TruncatedSeries& b) const {
  return series_add(a, b);
}

TruncatedSeries SeriesRing::sub(const TruncatedSeries& a, const TruncatedSeries& b) const {
  return series_sub(a, b);
}

TruncatedSeries SeriesRing::mul(const TruncatedSeries& a, const TruncatedSeries& b) const {
  return series_mul(a, b, max_total_);
}

TruncatedSeries SeriesRing::quasi_inverse(const TruncatedSeries& a) const {
  if (a.constant_term() != 0)
    throw Error(ErrorCode::ConstantTermNonzero, "quasi-inverse operand has a size-0 object");
  return series_inverse(series_sub(one(), a), max_total_);
}

TruncatedSeries SeriesRing::inverse(const TruncatedSeries& a) const { return series_inverse(a, max_total_); }

TruncatedSeries SeriesRing::truncate(const TruncatedSeries& a) const { return a.truncated_total(max_total_); }

const TruncatedSeries& SeriesSolution::at(const std::string& class_name) const {
  auto it = std::find(class_names.begin(), class_names.end(), class_name);
  if (it == class_names.end()) throw Error(ErrorCode::UnknownClass, "no class named '" + class_name + "'");
  return series[static_cast<std::size_t>(it - class_names.begin())];
}

namespace {

using Matrix = std::vector<std::vector<std::optional<TruncatedSeries>>>;

// Solves (I - J) x = rhs over the truncated series ring by Gaussian
// elimination. Every pivot has constant term 1 for well-founded systems
// (J at the origin is nilpotent), so pivots are units.
std::vector<TruncatedSeries> solve_linear(const SeriesRing& ring, Matrix jac, std::vector<TruncatedSeries> rhs) {
  const std::size_t n = rhs.size();
  Matrix& m = jac;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      auto& e = m[i][j];
      if (e) e = series_negate(*e);
      if (i == j) e = e ? ring.add(*e, ring.one()) : ring.one();
      if (e && e->is_zero()) e.reset();
    }
  }
  std::vector<TruncatedSeries> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!m[i][i] || m[i][i]->constant_term() != 1)
      throw Error(ErrorCode::NonConvergence, "Jacobian pivot is not a unit; system is not well-founded");
    inv[i] = ring.inverse(*m[i][i]);
    for (std::size_t r = i + 1; r < n; ++r) {
      if (!m[r][i]) continue;
      const TruncatedSeries f = ring.mul(*m[r][i], inv[i]);
      for (std::size_t c = i + 1; c < n; ++c) {
        if (!m[i][c]) continue;
        TruncatedSeries updated = ring.sub(m[r][c] ? *m[r][c] : ring.zero(), ring.mul(f, *m[i][c]));
        if (updated.is_zero()) {
          m[r][c].reset();
        } else {
          m[r][c] = std::move(updated);
        }
      }
      rhs[r] = ring.sub(rhs[r], ring.mul(f, rhs[i]));
      m[r][i].reset();
    }
  }
  std::vector<TruncatedSeries> x(n);
  for (std::size_t i = n; i-- > 0;) {
    TruncatedSeries acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c)
      if (m[i][c]) acc = ring.sub(acc, ring.mul(*m[i][c], x[c]));
    x[i] = ring.mul(inv[i], acc);
  }
  return x;
}

SeriesSolution make_solution(const GFSystem& gfs, std::vector<TruncatedSeries> y, std::size_t iterations) {
  SeriesSolution sol;
  sol.class_names = gfs.class_names();
  y.resize(gfs.class_count());
  sol.series = std::move(y);
  sol.iterations = iterations;
  return sol;
}

std::vector<TruncatedSeries> class_part(const std::vector<TruncatedSeries>& y, std::size_t classes) {
  return {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(classes)};
}

SeriesSolution fixed_point_solve(const GFSystem& gfs, const std::vector<std::uint32_t>& bounds,
                                 const SolveOptions& options) {
  const SeriesRing ring(gfs.variables(), bounds);
  const std::size_t budget = gfs.unknown_count() * (ring.max_total() + 1) + 2;
  std::vector<TruncatedSeries> y(gfs.class_count(), ring.zero());
  for (std::size_t it = 1; it <= budget; ++it) {
    const auto values = evaluate_nodes(gfs, ring, std::span<const TruncatedSeries>(y), SeqMode::Direct);
    auto next = system_map(gfs, ring, values, std::span<const TruncatedSeries>(y), SeqMode::Direct);
    if (next == y) return make_solution(gfs, std::move(y), it);
    y = std::move(next);
    if (options.on_iteration) options.on_iteration(it, y);
  }
  throw Error(ErrorCode::NonConvergence, "fixed-point iteration exceeded its budget");
}

SeriesSolution newton_series_solve(const GFSystem& gfs, const std::vector<std::uint32_t>& bounds,
                                   const SolveOptions& options) {
  const std::size_t m = gfs.unknown_count();
  const SeriesRing full(gfs.variables(), bounds);
  const std::uint64_t top = full.max_total();

  // Constant terms: the degree-0 system is nilpotent, so plain iteration
  // settles within m + 1 rounds.
  std::vector<TruncatedSeries> y(m, full.zero());
  {
    const SeriesRing ring(gfs.variables(), bounds, 0);
    bool settled = false;
    for (std::size_t it = 0; it <= m + 1 && !settled; ++it) {
      const auto values = evaluate_nodes(gfs, ring, std::span<const TruncatedSeries>(y), SeqMode::Auxiliary);
      auto next = system_map(gfs, ring, values, std::span<const TruncatedSeries>(y), SeqMode::Auxiliary);
      settled = next == y;
      y = std::move(next);
    }
    if (!settled) throw Error(ErrorCode::NonConvergence, "constant terms do not settle; system is not well-founded");
  }

  std::size_t iteration = 0;
  for (std::uint64_t k = 1; k <= top; k *= 2) {
    // y is exact below total degree k; one Newton step makes it exact below 2k.
    const SeriesRing ring(gfs.variables(), bounds, std::min<std::uint64_t>(top, 2 * k - 1));
    const auto values = evaluate_nodes(gfs, ring, std::span<const TruncatedSeries>(y), SeqMode::Auxiliary);
    const auto h = system_map(gfs, ring, values, std::span<const TruncatedSeries>(y), SeqMode::Auxiliary);
    std::vector<TruncatedSeries> residual(m);
    for (std::size_t i = 0; i < m; ++i) residual[i] = ring.truncate(ring.sub(h[i], y[i]));
    auto jac = system_jacobian(gfs, ring, values, std::span<const TruncatedSeries>(y), SeqMode::Auxiliary);
    const auto delta = solve_linear(ring, std::move(jac), std::move(residual));
    for (std::size_t i = 0; i < m; ++i) y[i] = ring.truncate(ring.add(y[i], delta[i]));
    ++iteration;
    if (options.on_iteration) options.on_iteration(iteration, class_part(y, gfs.class_count()));
  }

  // The converged series must be a fixed point of the full system.
  const auto values = evaluate_nodes(gfs, full, std::span<const TruncatedSeries>(y), SeqMode::Auxiliary);
  const auto h = system_map(gfs, full, values, std::span<const TruncatedSeries>(y), SeqMode::Auxiliary);
  if (h != y) throw Error(ErrorCode::NonConvergence, "Newton iteration did not reach a fixed point");
  return make_solution(gfs, std::move(y), iteration);
}

}  // namespace

SeriesSolution newton_solve(const GFSystem& gfs, const std::vector<std::uint32_t>& bounds,
                            const SolveOptions& options) {
  if (bounds.size() != gfs.variables().size())
    throw Error(ErrorCode::BoundsMismatch, "one truncation bound per variable required");
  if (options.method == SolveMethod::FixedPoint) return fixed_point_solve(gfs, bounds, options);
  return newton_series_solve(gfs, bounds, options);
}

namespace {

std::vector<std::uint32_t> bounds_for(const ClassSystem& system, const std::map<std::string, std::uint32_t>& named) {
  std::vector<std::uint32_t> bounds(system.variable_count());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    auto it = named.find(system.variables()[i]);
    if (it == named.end())
      throw Error(ErrorCode::BoundsMismatch, "missing truncation bound for variable '" + system.variables()[i] + "'");
    bounds[i] = it->second;
  }
  for (const auto& [name, b] : named)
    if (!system.variable_index(name)) throw Error(ErrorCode::UnknownVariable, "no variable named '" + name + "'");
  return bounds;
}

}  // namespace

std::vector<mpz_class> counting_sequence(const ClassSystem& system, const std::string& class_name, std::uint32_t n,
                                         SolveMethod method) {
  system.require_valid();
  if (system.variable_count() != 1)
    throw Error(ErrorCode::BoundsMismatch,
                "multivariate system: give a designated variable and bounds for the others");
  const GFSystem gfs(system);
  SolveOptions options;
  options.method = method;
  const auto sol = newton_solve(gfs, {n}, options);
  const auto& s = sol.at(class_name);
  std::vector<mpz_class> out(n + 1);
  for (std::uint32_t k = 0; k <= n; ++k) out[k] = s.coefficient({k});
  return out;
}

std::vector<mpz_class> counting_sequence(const ClassSystem& system, const std::string& class_name, std::uint32_t n,
                                         const std::string& variable,
                                         const std::map<std::string, std::uint32_t>& other_bounds) {
  system.require_valid();
  const auto var = system.variable_index(variable);
  if (!var) throw Error(ErrorCode::UnknownVariable, "no variable named '" + variable + "'");
  auto named = other_bounds;
  named[variable] = n;
  const TruncatedSeries table = counting_table(system, class_name, named);
  std::vector<mpz_class> out(n + 1);
  for (const auto& [e, c] : table.coefficients()) out[e[*var]] += c;
  return out;
}

TruncatedSeries counting_table(const ClassSystem& system, const std::string& class_name,
                               const std::map<std::string, std::uint32_t>& bounds) {
  system.require_valid();
  const GFSystem gfs(system);
  return newton_solve(gfs, bounds_for(system, bounds)).at(class_name);
}

std::vector<std::string> to_decimal_strings(const std::vector<mpz_class>& values) {
  std::vector<std::string> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(v.get_str());
  return out;
}

}  // namespace combkit
