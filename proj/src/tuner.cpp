#include "combkit/tuner.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "combkit/error.hpp"

namespace combkit {

namespace {

bool numeric_failure(ErrorCode c) {
  return c == ErrorCode::Divergent || c == ErrorCode::SeqOperandAtOne || c == ErrorCode::ContractionFailed ||
         c == ErrorCode::SingularJacobian;
}

Interval rational_interval(const mpq_class& q, mpfr_prec_t p) {
  Interval iv(p);
  mpfr_set_q(iv.lo.get(), q.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(iv.hi.get(), q.get_mpq_t(), MPFR_RNDU);
  return iv;
}

std::string describe(const Point& p) { return p.to_string(); }

// Expected sizes along the search, with oracle failures reported as empty.
class Evaluator {
 public:
  Evaluator(const ClassSystem& system, const std::string& class_name, const TuneOptions& options)
      : system_(system), class_name_(class_name), options_(options) {}

  std::optional<std::vector<double>> operator()(const Point& p) {
    ++evaluations;
    try {
      const auto e = expected_size(system_, class_name_, p, options_.precision, options_.oracle);
      std::vector<double> out;
      for (const auto& v : system_.variables()) {
        const Interval& iv = e.at(v);
        const double mid = iv.mid();
        // An enclosure too wide to compare against the tolerance is no answer.
        if (!std::isfinite(mid) || mid <= 0 || !(iv.width() <= 0.1 * options_.tolerance * mid)) return std::nullopt;
        out.push_back(mid);
      }
      return out;
    } catch (const Error& err) {
      if (numeric_failure(err.code())) return std::nullopt;
      throw;
    }
  }

  std::size_t evaluations = 0;

 private:
  const ClassSystem& system_;
  const std::string& class_name_;
  const TuneOptions& options_;
};

struct Coordinate {
  std::size_t var;
  double target;
};

bool close_enough(double e, double target, double tol) { return std::fabs(e - target) <= tol * target; }

Point with(const Point& base, const std::string& var, double x) {
  Point p = base;
  p.set(var, round_coordinate(x));
  return p;
}

// Solves E_var = target along one coordinate with the others held fixed.
// Returns the largest evaluable abscissa found (the singularity bracket).
double solve_coordinate(const ClassSystem& system, Evaluator& eval, Point& point, const Coordinate& c,
                        const TuneOptions& options, std::size_t& budget, std::optional<double>& rho) {
  const std::string& var = system.variables()[c.var];
  auto E = [&](double x) -> std::optional<double> {
    auto e = eval(with(point, var, x));
    if (!e) return std::nullopt;
    return (*e)[c.var];
  };
  auto spend = [&]() {
    if (budget == 0) throw Error(ErrorCode::NoConvergence, "tuning exceeded its iteration budget");
    --budget;
  };

  // Bracket the largest evaluable abscissa: ok evaluates, bad does not.
  double ok = 0, bad = std::numeric_limits<double>::infinity();
  double x = mpq_class(point.at(var)).get_d();
  if (E(x)) {
    ok = x;
    for (int i = 0; i < 80 && std::isinf(bad); ++i) {
      x *= 2;
      if (E(x)) {
        ok = x;
      } else {
        bad = x;
      }
    }
  } else {
    bad = x;
    for (int i = 0; i < 200 && ok == 0; ++i) {
      x /= 2;
      if (E(x)) {
        ok = x;
      } else {
        bad = x;
      }
    }
    if (ok == 0) throw Error(ErrorCode::Infeasible, "no evaluable point along '" + var + "'");
  }
  if (std::isfinite(bad)) {
    for (int i = 0; i < 200 && bad - ok > ok * 1e-15; ++i) {
      const double mid = ok + (bad - ok) / 2;
      if (mid <= ok || mid >= bad) break;
      if (E(mid)) {
        ok = mid;
      } else {
        bad = mid;
      }
    }
    rho = bad;
  }
  double hi = std::isfinite(bad) ? std::min(ok, bad * (1 - options.singular_margin)) : ok;
  std::optional<double> e_hi = E(hi);
  while (!e_hi && hi > 0) {
    hi = hi * (1 - 1e-9) - 1e-300;
    e_hi = E(hi);
  }
  if (!e_hi) throw Error(ErrorCode::Infeasible, "no evaluable point along '" + var + "'");
  if (close_enough(*e_hi, c.target, options.tolerance)) {
    point = with(point, var, hi);
    return ok;
  }
  if (*e_hi < c.target)
    throw Error(ErrorCode::Infeasible, "target " + std::to_string(c.target) + " for '" + var +
                                           "' is not reached inside the domain; best point " +
                                           describe(with(point, var, hi)) + " gives " + std::to_string(*e_hi));

  double lo = hi / 2;
  std::optional<double> e_lo = E(lo);
  for (int i = 0; i < 1000 && e_lo && *e_lo > c.target && !close_enough(*e_lo, c.target, options.tolerance); ++i) {
    lo /= 2;
    if (lo == 0) break;
    e_lo = E(lo);
  }
  if (!e_lo) throw Error(ErrorCode::Infeasible, "oracle failed below the tuned range along '" + var + "'");
  if (close_enough(*e_lo, c.target, options.tolerance)) {
    point = with(point, var, lo);
    return ok;
  }
  if (*e_lo > c.target)
    throw Error(ErrorCode::Infeasible, "target " + std::to_string(c.target) + " for '" + var +
                                           "' is below the smallest expected size " + std::to_string(*e_lo));

  // E is increasing along each coordinate (its log-derivative is a variance).
  for (;;) {
    spend();
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) throw Error(ErrorCode::NoConvergence, "bisection bracket collapsed along '" + var + "'");
    const auto e = E(mid);
    if (!e) {
      hi = mid;
      continue;
    }
    if (close_enough(*e, c.target, options.tolerance)) {
      point = with(point, var, mid);
      return ok;
    }
    if (*e < c.target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
}

double residual_norm(const std::vector<double>& e, const std::vector<Coordinate>& coords) {
  double s = 0;
  for (const auto& c : coords) {
    const double r = std::log(e[c.var] / c.target);
    s += r * r;
  }
  return std::sqrt(s);
}

bool converged(const std::vector<double>& e, const std::vector<Coordinate>& coords, double tol) {
  for (const auto& c : coords)
    if (!close_enough(e[c.var], c.target, tol)) return false;
  return true;
}

}  // namespace

mpq_class round_coordinate(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return parse_rational(buf);
}

std::map<std::string, Interval> expected_size(const ClassSystem& system, const std::string& class_name,
                                              const Point& point, mpfr_prec_t precision, const OracleOptions& oracle) {
  system.require_valid();
  const std::size_t c = system.class_index(class_name);
  const GFSystem gfs(system);
  const NodeValues values = eval_system(gfs, point, precision, oracle);
  const Derivatives d = eval_derivatives(gfs, point, values);
  const Interval& C = values.classes[c];
  if (mpfr_sgn(C.lo.get()) <= 0) throw Error(ErrorCode::ContractionFailed, "class value is not bounded away from 0");
  std::map<std::string, Interval> out;
  for (std::size_t v = 0; v < system.variable_count(); ++v) {
    const std::string& var = system.variables()[v];
    const Interval x = rational_interval(point.at(var), precision);
    const Interval& dv = d.at(c, v);
    Interval num(precision), e(precision);
    // x > 0; the derivative enclosure may dip below 0 at its lower end.
    mpfr_mul(num.lo.get(), mpfr_sgn(dv.lo.get()) >= 0 ? x.lo.get() : x.hi.get(), dv.lo.get(), MPFR_RNDD);
    mpfr_mul(num.hi.get(), mpfr_sgn(dv.hi.get()) >= 0 ? x.hi.get() : x.lo.get(), dv.hi.get(), MPFR_RNDU);
    mpfr_div(e.lo.get(), num.lo.get(), mpfr_sgn(num.lo.get()) >= 0 ? C.hi.get() : C.lo.get(), MPFR_RNDD);
    mpfr_div(e.hi.get(), num.hi.get(), mpfr_sgn(num.hi.get()) >= 0 ? C.lo.get() : C.hi.get(), MPFR_RNDU);
    out.emplace(var, std::move(e));
  }
  return out;
}

TuneResult tune(const ClassSystem& system, const std::string& class_name, const std::map<std::string, double>& target,
                const TuneOptions& options) {
  system.require_valid();
  system.class_index(class_name);
  for (const auto& [var, n] : options.pinned)
    if (!system.variable_index(var)) throw Error(ErrorCode::UnknownVariable, "no variable named '" + var + "'");

  std::vector<Coordinate> coords;
  Point point;
  for (const auto& var : system.variables()) {
    auto p = options.pinned.find(var);
    point.set(var, round_coordinate(p == options.pinned.end() ? 1.0 : p->second));
  }
  for (const auto& [var, n] : target) {
    const auto v = system.variable_index(var);
    if (!v) throw Error(ErrorCode::UnknownVariable, "no variable named '" + var + "'");
    if (!std::isfinite(n) || n < 0) throw Error(ErrorCode::Infeasible, "target sizes must be finite and non-negative");
    if (n == 0) continue;
    coords.push_back({*v, n});
    point.set(var, round_coordinate(0.5));
  }
  if (coords.empty()) throw Error(ErrorCode::Infeasible, "no positive target size given");

  TuneResult result;
  Evaluator eval(system, class_name, options);
  auto finish = [&](const Point& p) {
    result.point = p;
    result.expected = expected_size(system, class_name, p, options.precision, options.oracle);
    result.iterations = eval.evaluations;
    return result;
  };

  // Classes whose targeted sizes are fixed have constant E on the whole domain.
  const SizeVector lo = min_size(system, class_name), hi = max_size(system, class_name);
  bool fixed = true;
  for (const auto& c : coords) fixed = fixed && lo[c.var] == hi[c.var];
  if (fixed) {
    for (const auto& c : coords)
      if (!close_enough(static_cast<double>(lo[c.var]), c.target, options.tolerance))
        throw Error(ErrorCode::Infeasible, "every object has " + system.variables()[c.var] + "-size " +
                                               std::to_string(lo[c.var]));
    if (eval(point)) return finish(point);
    throw Error(ErrorCode::Infeasible, "the class cannot be evaluated at " + point.to_string());
  }

  // E lies between the smallest and largest size.
  for (const auto& c : coords) {
    const std::string& var = system.variables()[c.var];
    if (c.target * (1 + options.tolerance) < static_cast<double>(lo[c.var]))
      throw Error(ErrorCode::Infeasible, "target " + std::to_string(c.target) + " for '" + var +
                                             "' is below the smallest size " + std::to_string(lo[c.var]));
    if (hi[c.var] != kUnbounded && c.target * (1 - options.tolerance) > static_cast<double>(hi[c.var]))
      throw Error(ErrorCode::Infeasible, "target " + std::to_string(c.target) + " for '" + var +
                                             "' is above the largest size " + std::to_string(hi[c.var]));
  }

  std::size_t budget = options.max_iterations;
  if (coords.size() == 1) {
    std::optional<double> rho;
    solve_coordinate(system, eval, point, coords.front(), options, budget, rho);
    result.rho = rho;
    return finish(point);
  }

  // Start where every targeted coordinate is evaluable.
  std::optional<std::vector<double>> e = eval(point);
  for (int i = 0; i < 200 && !e; ++i) {
    for (const auto& c : coords) point.set(system.variables()[c.var], point.at(system.variables()[c.var]) / 2);
    e = eval(point);
  }
  if (!e) throw Error(ErrorCode::Infeasible, "no evaluable starting point");

  // Damped Newton on log x with a finite-difference Jacobian of log E.
  const std::size_t k = coords.size();
  auto log_x = [&](const Point& p, std::size_t j) { return std::log(p.at(system.variables()[coords[j].var]).get_d()); };
  auto moved = [&](const Point& p, const Eigen::VectorXd& dlog) {
    Point q = p;
    for (std::size_t j = 0; j < k; ++j)
      q.set(system.variables()[coords[j].var], round_coordinate(std::exp(log_x(p, j) + dlog[static_cast<Eigen::Index>(j)])));
    return q;
  };
  bool stalled = false;
  while (!converged(*e, coords, options.tolerance)) {
    if (budget == 0) throw Error(ErrorCode::NoConvergence, "tuning exceeded its iteration budget");
    --budget;
    Eigen::VectorXd F(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) F[static_cast<Eigen::Index>(i)] = std::log((*e)[coords[i].var] / coords[i].target);
    Eigen::MatrixXd J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    bool jacobian_ok = true;
    for (std::size_t j = 0; j < k && jacobian_ok; ++j) {
      for (double h : {1e-6, -1e-6}) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
        d[static_cast<Eigen::Index>(j)] = h;
        const auto ep = eval(moved(point, d));
        if (!ep) {
          if (h < 0) jacobian_ok = false;
          continue;
        }
        for (std::size_t i = 0; i < k; ++i)
          J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              (std::log((*ep)[coords[i].var] / coords[i].target) - F[static_cast<Eigen::Index>(i)]) / h;
        break;
      }
    }
    if (!jacobian_ok) {
      stalled = true;
      break;
    }
    Eigen::VectorXd step = J.colPivHouseholderQr().solve(-F);
    if (!step.allFinite()) {
      stalled = true;
      break;
    }
    const double biggest = step.cwiseAbs().maxCoeff();
    if (biggest > 2) step *= 2 / biggest;
    const double before = residual_norm(*e, coords);
    bool accepted = false;
    for (double lambda = 1; lambda > 1e-4 && !accepted; lambda /= 2) {
      const Point trial = moved(point, lambda * step);
      const auto et = eval(trial);
      if (et && residual_norm(*et, coords) < before) {
        point = trial;
        e = et;
        accepted = true;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
  }

  // Coordinate-wise bisection sweeps when Newton stagnates.
  while (stalled && !converged(*e, coords, options.tolerance)) {
    for (const auto& c : coords) {
      std::optional<double> rho;
      solve_coordinate(system, eval, point, c, options, budget, rho);
    }
    e = eval(point);
    if (!e) throw Error(ErrorCode::NoConvergence, "coordinate sweep left the domain");
    if (budget == 0) throw Error(ErrorCode::NoConvergence, "tuning exceeded its iteration budget");
    --budget;
  }
  return finish(point);
}

}  // namespace combkit
