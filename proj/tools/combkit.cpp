// combkit command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 specification error, 3 numeric
// error. Errors go to stderr as "error: <Code>: message" lines (or a JSON
// object with --format json).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "combkit/error.hpp"
#include "combkit/harness.hpp"
#include "combkit/sample.hpp"
#include "combkit/series.hpp"
#include "combkit/trace_io.hpp"

using namespace combkit;
using nlohmann::json;

namespace {

struct Config {
  std::string spec;
  std::string spec_file;
  std::string class_name;
  std::string format = "text";
  std::uint32_t terms = 20;
  std::string variable;
  std::vector<std::string> bounds;
  std::vector<std::string> point;
  std::vector<std::string> target;
  std::vector<std::string> window;
  double tolerance = 0;
  std::size_t n = 1;
  std::optional<std::uint64_t> seed;
  std::optional<long> precision;
  bool no_early_rejection = false;
  std::uint64_t samples = 0;
  std::string sizes = "3..7";
  std::size_t tune_samples = 0;
  std::string builder = "term";
  bool traces = false;
  std::string trace_file;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool as_json(const Config& c) { return c.format == "json"; }

ClassSystem load_system(const Config& c) {
  if (c.spec.empty() == c.spec_file.empty()) throw UsageError("give exactly one of --spec or --spec-file");
  if (!c.spec.empty()) {
    std::string text = c.spec;
    for (char& ch : text)
      if (ch == ';') ch = '\n';
    return parse(split_spec_text(text, "<spec>"));
  }
  std::ifstream in(c.spec_file);
  if (!in) throw UsageError("cannot read spec file '" + c.spec_file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(split_spec_text(ss.str(), c.spec_file));
}

std::string class_of(const ClassSystem& sys, const Config& c) {
  if (c.class_name.empty()) return sys.class_name(0);
  sys.class_index(c.class_name);
  return c.class_name;
}

mpfr_prec_t precision_of(const Config& c) {
  long p = 53;
  if (const char* env = std::getenv("COMBKIT_PRECISION")) {
    char* end = nullptr;
    p = std::strtol(env, &end, 10);
    if (end == env || *end != '\0') throw UsageError("COMBKIT_PRECISION must be an integer");
  }
  if (c.precision) p = *c.precision;
  if (p < 2 || p > 1 << 20) throw UsageError("precision must be between 2 and 1048576 bits");
  return static_cast<mpfr_prec_t>(p);
}

std::uint64_t seed_of(const Config& c) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::map<std::string, double> parse_targets(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("expected var=value, got '" + item + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
      out[item.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw UsageError("invalid number in '" + item + "'");
    }
  }
  return out;
}

std::pair<std::int64_t, std::int64_t> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const std::int64_t v = std::stoll(text);
      return {v, v};
    }
    const std::string hi = text.substr(dots + 2);
    return {std::stoll(text.substr(0, dots)), hi.empty() ? kUnbounded : std::stoll(hi)};
  } catch (const std::logic_error&) {
    throw UsageError("invalid range '" + text + "' (expected a..b)");
  }
}

json size_json(const ClassSystem& sys, const SizeVector& s) {
  json out = json::object();
  for (std::size_t v = 0; v < sys.variable_count(); ++v)
    out[sys.variables()[v]] = s[v] == kUnbounded ? json(nullptr) : json(s[v]);
  return out;
}

json point_json(const Point& p) {
  json out = json::object();
  for (const auto& [var, v] : p.values()) out[var] = exact_decimal(v);
  return out;
}

json interval_json(const Interval& iv) { return {{"lo", iv.lo_string()}, {"hi", iv.hi_string()}}; }

json stats_json(const SampleStats& s) {
  return {{"attempts", s.attempts},         {"accepted", s.accepted},
          {"early_aborts", s.early_aborts}, {"final_rejects", s.final_rejects},
          {"escalations", s.escalations},   {"decisions", s.decisions},
          {"replay_mismatches", s.replay_mismatches}, {"max_precision", s.max_precision}};
}

std::string stats_text(const SampleStats& s) {
  std::ostringstream o;
  o << "attempts " << s.attempts << ", accepted " << s.accepted << ", early aborts " << s.early_aborts
    << ", final rejects " << s.final_rejects << ", escalations " << s.escalations << ", max precision "
    << s.max_precision;
  return o.str();
}

std::string window_text(const ClassSystem& sys, const AcceptanceWindow& w) {
  std::string out;
  for (std::size_t v = 0; v < sys.variable_count(); ++v) {
    if (!out.empty()) out += ", ";
    out += sys.variables()[v] + " in [" + std::to_string(w.lo[v]) + ", " +
           (w.hi[v] == kUnbounded ? std::string("inf") : std::to_string(w.hi[v])) + "]";
  }
  return out;
}

json window_json(const ClassSystem& sys, const AcceptanceWindow& w) {
  json out = json::object();
  for (std::size_t v = 0; v < sys.variable_count(); ++v)
    out[sys.variables()[v]] = {w.lo[v], w.hi[v] == kUnbounded ? json(nullptr) : json(w.hi[v])};
  return out;
}

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Emits the report body, then the timing section.
void emit(const Config& c, const json& doc, const std::string& text, double seconds) {
  if (as_json(c)) {
    json out = doc;
    out["timing"] = {{"seconds", seconds}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << text;
    std::cout << "-- timing\n" << "seconds " << seconds << "\n";
  }
}

int cmd_validate(const Config& c) {
  Timer timer;
  const ClassSystem sys = load_system(c);
  json doc = {{"command", "validate"}, {"valid", sys.valid()}, {"variables", sys.variables()}};
  std::ostringstream text;
  json diags = json::array();
  for (const auto& d : sys.report().diagnostics) {
    json item = {{"code", std::string(to_string(d.code))}, {"message", d.message}};
    if (d.node) item["node"] = *d.node;
    diags.push_back(item);
    text << "error: " << to_string(d.code) << ": " << d.message << "\n";
  }
  doc["diagnostics"] = diags;
  json classes = json::array();
  if (sys.valid()) {
    const GFSystem gfs(sys);
    text << "valid system; variables:";
    for (const auto& v : sys.variables()) text << " " << v;
    text << "\n";
    for (std::size_t i = 0; i < sys.class_count(); ++i) {
      const auto& name = sys.class_name(i);
      const SizeVector lo = min_size(sys, name), hi = max_size(sys, name);
      classes.push_back({{"name", name},
                         {"equation", gfs.equation_text(i)},
                         {"min_size", size_json(sys, lo)},
                         {"max_size", size_json(sys, hi)}});
      text << gfs.equation_text(i) << "    min " << sys.size_to_string(lo) << ", max " << sys.size_to_string(hi)
           << "\n";
    }
  }
  doc["classes"] = classes;
  emit(c, doc, text.str(), timer.seconds());
  return sys.valid() ? 0 : 2;
}

int cmd_count(const Config& c) {
  Timer timer;
  const ClassSystem sys = load_system(c);
  sys.require_valid();
  const std::string cls = class_of(sys, c);
  const std::string var = c.variable.empty() ? sys.variables().front() : c.variable;
  std::map<std::string, std::uint32_t> others;
  for (const auto& [name, v] : parse_targets(c.bounds)) {
    if (v < 0 || v != static_cast<double>(static_cast<std::uint32_t>(v))) throw UsageError("bounds must be integers");
    others[name] = static_cast<std::uint32_t>(v);
  }
  std::vector<mpz_class> counts;
  if (sys.variable_count() == 1 && others.empty() && var == sys.variables().front()) {
    counts = counting_sequence(sys, cls, c.terms);
  } else {
    counts = counting_sequence(sys, cls, c.terms, var, others);
  }
  const auto strings = to_decimal_strings(counts);
  std::string text = "[";
  for (std::size_t i = 0; i < strings.size(); ++i) text += (i ? ", " : "") + strings[i];
  text += "]\n";
  json doc = {{"command", "count"}, {"class", cls}, {"variable", var}, {"terms", c.terms}, {"counts", strings}};
  emit(c, doc, text, timer.seconds());
  return 0;
}

int cmd_oracle(const Config& c) {
  Timer timer;
  const ClassSystem sys = load_system(c);
  sys.require_valid();
  const GFSystem gfs(sys);
  const Point point = Point::parse(c.point);
  const mpfr_prec_t p = precision_of(c);
  const NodeValues values = eval_system(gfs, point, p);
  json doc = {{"command", "oracle"}, {"precision", p}, {"point", point_json(point)}, {"iterations", values.iterations}};
  std::ostringstream text;
  text << "point " << point.to_string() << ", precision " << p << "\n";
  json classes = json::array();
  for (std::size_t i = 0; i < sys.class_count(); ++i) {
    const Interval& iv = values.classes[i];
    classes.push_back({{"name", sys.class_name(i)}, {"value", interval_json(iv)}});
    text << sys.class_name(i) << " in [" << iv.lo_string() << ", " << iv.hi_string() << "]\n";
  }
  json nodes = json::array();
  for (const Node& n : sys.nodes()) {
    const Interval& iv = values.node(n.id);
    nodes.push_back({{"id", n.id}, {"kind", std::string(to_string(n.kind))}, {"text", gfs.node_text(n.id)},
                     {"value", interval_json(iv)}});
    text << "  node " << n.id << " " << gfs.node_text(n.id) << " in [" << iv.lo_string() << ", " << iv.hi_string()
         << "]\n";
  }
  doc["classes"] = classes;
  doc["nodes"] = nodes;
  emit(c, doc, text.str(), timer.seconds());
  return 0;
}

SamplerOptions sampler_options(const Config& c) {
  SamplerOptions o;
  o.precision = precision_of(c);
  o.early_rejection = !c.no_early_rejection;
  return o;
}

struct Drawn {
  json objects = json::array();
  std::string text;
};

Drawn render(const ClassSystem& sys, const Config& c, const std::vector<ChoiceTrace>& traces) {
  if (c.builder != "term" && c.builder != "json") throw UsageError("--builder must be term or json");
  Drawn d;
  for (const auto& t : traces) {
    json item = {{"size", size_json(sys, t.size)}};
    if (c.builder == "term") {
      const std::string term = build_term(t, sys);
      item["object"] = term;
      d.text += term + "    size " + sys.size_to_string(t.size) + "\n";
    } else {
      const json obj = build_json(t, sys);
      item["object"] = obj;
      d.text += obj.dump() + "    size " + sys.size_to_string(t.size) + "\n";
    }
    if (c.traces) {
      item["trace"] = trace_to_json(t, sys);
      d.text += "  trace " + format_trace(t, sys) + "\n";
    }
    d.objects.push_back(item);
  }
  return d;
}

int cmd_sample_like(const Config& c, bool tune_only) {
  Timer timer;
  const ClassSystem sys = load_system(c);
  sys.require_valid();
  const std::string cls = class_of(sys, c);
  const std::uint64_t seed = seed_of(c);
  SampleRequest req;
  req.class_name = cls;
  req.n = tune_only ? c.tune_samples : c.n;
  req.target = parse_targets(c.target);
  req.tolerance = c.tolerance;
  req.seed = seed;
  req.sampler = sampler_options(c);
  req.tune.precision = req.sampler.precision;
  if (!c.point.empty()) req.point = Point::parse(c.point);
  if (tune_only && req.target.empty()) throw UsageError("tune needs at least one --target");
  if (!req.point && req.target.empty()) throw UsageError("give --point or --target");

  std::ostringstream text;
  json doc = {{"command", tune_only ? "tune" : "sample"}, {"class", cls}, {"seed", seed}};
  text << "seed " << seed << "\n";
  if (tune_only) {
    const TuneResult tr = tune(sys, cls, req.target, req.tune);
    req.point = tr.point;
    json expected = json::object();
    text << "point " << tr.point.to_string() << "\n";
    for (const auto& [var, iv] : tr.expected) {
      expected[var] = interval_json(iv);
      text << "E[" << var << "] in [" << iv.lo_string() << ", " << iv.hi_string() << "]\n";
    }
    doc["point"] = point_json(tr.point);
    doc["expected"] = expected;
    doc["evaluations"] = tr.iterations;
    if (tr.rho) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", *tr.rho);
      doc["rho"] = buf;
      text << "singularity near " << buf << "\n";
    }
    if (req.n == 0) {
      emit(c, doc, text.str(), timer.seconds());
      return 0;
    }
  }
  const SampleResult r = sample_traces(sys, req);
  if (!tune_only) {
    doc["point"] = point_json(r.point);
    text << "point " << r.point.to_string() << "\n";
  }
  if (r.window) {
    doc["window"] = window_json(sys, *r.window);
    text << "window " << window_text(sys, *r.window) << "\n";
  }
  const Drawn d = render(sys, c, r.traces);
  doc["objects"] = d.objects;
  doc["counters"] = stats_json(r.stats);
  text << d.text << "counters: " << stats_text(r.stats) << "\n";
  emit(c, doc, text.str(), timer.seconds());
  return 0;
}

int cmd_uniformity(const Config& c) {
  Timer timer;
  const ClassSystem sys = load_system(c);
  sys.require_valid();
  const std::string cls = class_of(sys, c);
  const auto [lo, hi] = parse_range(c.sizes);
  if (hi == kUnbounded || lo > hi || lo < 0) throw UsageError("--sizes needs a finite range a..b");
  const std::uint64_t seed = seed_of(c);
  UniformityOptions opt;
  opt.samples = c.samples ? c.samples : 1000000;
  opt.seed = seed;
  opt.sampler = sampler_options(c);
  json rows = json::array();
  std::ostringstream text;
  text << "seed " << seed << "\n" << "class " << cls << ", " << opt.samples << " samples per size\n";
  text << "size        #        chi2         p\n";
  SampleStats total;
  for (std::int64_t s = lo; s <= hi; ++s) {
    const UniformityRow row = uniformity_at_size(sys, cls, s, opt);
    total += row.stats;
    rows.push_back({{"size", row.size},
                    {"count", row.count},
                    {"observed_distinct", row.observed_distinct},
                    {"samples", row.samples},
                    {"chi2", row.chi2},
                    {"p_value", row.p_value},
                    {"point", row.point},
                    {"counters", stats_json(row.stats)}});
    char line[128];
    std::snprintf(line, sizeof line, "%4lld %8llu %11.4f %9.4f\n", static_cast<long long>(row.size),
                  static_cast<unsigned long long>(row.count), row.chi2, row.p_value);
    text << line;
  }
  text << "counters: " << stats_text(total) << "\n";
  json doc = {{"command", "uniformity"}, {"class", cls}, {"seed", seed}, {"samples", opt.samples}, {"rows", rows},
              {"counters", stats_json(total)}};
  emit(c, doc, text.str(), timer.seconds());
  return 0;
}

int cmd_bench(const Config& c) {
  Timer timer;
  const ClassSystem sys = load_system(c);
  sys.require_valid();
  const std::string cls = class_of(sys, c);
  const Point point = Point::parse(c.point);
  const std::uint64_t seed = seed_of(c);
  AcceptanceWindow w;
  if (!c.window.empty()) {
    w = AcceptanceWindow{SizeVector(sys.variable_count(), 0), SizeVector(sys.variable_count(), kUnbounded)};
    for (const auto& item : c.window) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("--window expects var=a..b");
      const auto v = sys.variable_index(item.substr(0, eq));
      if (!v) throw Error(ErrorCode::UnknownVariable, "no variable named '" + item.substr(0, eq) + "'");
      std::tie(w.lo[*v], w.hi[*v]) = parse_range(item.substr(eq + 1));
    }
  } else if (!c.target.empty()) {
    w = window_for(sys, parse_targets(c.target), c.tolerance);
  } else {
    throw UsageError("give --window or --target");
  }
  BenchOptions opt;
  opt.attempts = c.samples ? c.samples : 10000;
  opt.seed = seed;
  opt.sampler = sampler_options(c);
  const BenchReport r = bench_rejection(sys, cls, point, w, opt);
  std::ostringstream text;
  text << "seed " << seed << "\n"
       << "window " << window_text(sys, w) << "\n"
       << "attempts " << r.attempts << ", accepted " << r.accepted << ", outcome mismatches " << r.outcome_mismatches
       << ", trace mismatches " << r.trace_mismatches << "\n"
       << "early: " << stats_text(r.early) << "\n"
       << "baseline: " << stats_text(r.baseline) << "\n";
  json doc = {{"command", "bench-rejection"},
              {"class", cls},
              {"seed", seed},
              {"point", point_json(point)},
              {"window", window_json(sys, w)},
              {"attempts", r.attempts},
              {"accepted", r.accepted},
              {"outcome_mismatches", r.outcome_mismatches},
              {"trace_mismatches", r.trace_mismatches},
              {"early", stats_json(r.early)},
              {"baseline", stats_json(r.baseline)}};
  const double seconds = timer.seconds();
  if (as_json(c)) {
    doc["timing"] = {{"seconds", seconds},
                     {"early_seconds", r.early_seconds},
                     {"baseline_seconds", r.baseline_seconds},
                     {"speedup", r.speedup},
                     {"ci95", {r.ci_low, r.ci_high}}};
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << text.str() << "-- timing\n"
              << "early " << r.early_seconds << " s, baseline " << r.baseline_seconds << " s\n"
              << "speedup " << r.speedup << " (95% CI " << r.ci_low << " - " << r.ci_high << ")\n"
              << "seconds " << seconds << "\n";
  }
  return r.outcome_mismatches == 0 && r.trace_mismatches == 0 ? 0 : 3;
}

int cmd_replay(const Config& c) {
  Timer timer;
  const ClassSystem sys = load_system(c);
  sys.require_valid();
  std::ifstream in(c.trace_file);
  if (!in) throw UsageError("cannot read trace file '" + c.trace_file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const ChoiceTrace t = parse_trace(ss.str(), sys);
  const Drawn d = render(sys, c, {t});
  json doc = {{"command", "replay"}, {"class", t.class_name}, {"objects", d.objects}};
  emit(c, doc, d.text, timer.seconds());
  return 0;
}

void report_error(const Config& c, const std::string& code, const std::string& message,
                  const std::optional<SourcePosition>& pos = std::nullopt) {
  if (as_json(c)) {
    json e = {{"code", code}, {"message", message}};
    if (pos) e["position"] = {{"origin", pos->origin}, {"line", pos->line}, {"column", pos->column}};
    std::cerr << json{{"error", e}}.dump() << "\n";
  } else {
    std::cerr << "error: " << code << ": " << message;
    if (pos) std::cerr << " (" << pos->origin << ":" << pos->line << ":" << pos->column << ")";
    std::cerr << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  Config c;
  CLI::App app{"Combinatorial specifications: counting, certified evaluation and exact Boltzmann sampling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "combkit 0.1.0");

  auto spec_opts = [&](CLI::App* sub) {
    sub->add_option("-s,--spec", c.spec, "Inline specification (equations separated by ';' or newlines)");
    sub->add_option("-f,--spec-file", c.spec_file, "Specification file, one equation per line");
    sub->add_option("-c,--class", c.class_name, "Class to use (default: first equation)");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  };
  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "64-bit master seed (default: random, always echoed)");
  };
  auto precision_opt = [&](CLI::App* sub) {
    sub->add_option("--precision", c.precision, "Working precision in bits (default $COMBKIT_PRECISION or 53)");
  };

  auto* validate = app.add_subcommand("validate", "Check a specification and print size bounds");
  spec_opts(validate);

  auto* count = app.add_subcommand("count", "Print the counting sequence up to size --terms");
  spec_opts(count);
  count->add_option("--terms", c.terms, "Largest size");
  count->add_option("--var", c.variable, "Counted variable of a multivariate system");
  count->add_option("--bound", c.bounds, "Truncation bound var=n for the other variables");

  auto* oracle = app.add_subcommand("oracle", "Certified enclosures of all class and node values");
  spec_opts(oracle);
  oracle->add_option("--point", c.point, "Control point var=value (repeatable)")->required();
  precision_opt(oracle);

  auto* tune_cmd = app.add_subcommand("tune", "Tune the control point to target expected sizes");
  spec_opts(tune_cmd);
  tune_cmd->add_option("--target", c.target, "Target size var=value (repeatable)")->required();
  tune_cmd->add_option("--tolerance", c.tolerance, "Relative window half-width for --sample");
  tune_cmd->add_option("--sample", c.tune_samples, "Also draw this many objects in the window");
  tune_cmd->add_option("--builder", c.builder, "Object rendering: term or json");
  tune_cmd->add_flag("--traces", c.traces, "Include choice traces");
  tune_cmd->add_flag("--no-early-rejection", c.no_early_rejection, "Reject only on final size");
  seed_opt(tune_cmd);
  precision_opt(tune_cmd);

  auto* sample_cmd = app.add_subcommand("sample", "Draw objects");
  spec_opts(sample_cmd);
  sample_cmd->add_option("--point", c.point, "Control point var=value (repeatable)");
  sample_cmd->add_option("--target", c.target, "Target size var=value (repeatable); sets the window");
  sample_cmd->add_option("--tolerance", c.tolerance, "Relative window half-width");
  sample_cmd->add_option("-n", c.n, "Number of objects");
  sample_cmd->add_option("--builder", c.builder, "Object rendering: term or json");
  sample_cmd->add_flag("--traces", c.traces, "Include choice traces");
  sample_cmd->add_flag("--no-early-rejection", c.no_early_rejection, "Reject only on final size");
  seed_opt(sample_cmd);
  precision_opt(sample_cmd);

  auto* uniformity = app.add_subcommand("uniformity", "Chi-square uniformity test at exact sizes");
  spec_opts(uniformity);
  uniformity->add_option("--sizes", c.sizes, "Size range a..b");
  uniformity->add_option("--samples", c.samples, "Accepted samples per size (default 1000000)");
  uniformity->add_flag("--no-early-rejection", c.no_early_rejection, "Reject only on final size");
  seed_opt(uniformity);
  precision_opt(uniformity);

  auto* bench = app.add_subcommand("bench-rejection", "Time early rejection against final-size rejection");
  spec_opts(bench);
  bench->add_option("--point", c.point, "Control point var=value (repeatable)")->required();
  bench->add_option("--window", c.window, "Window var=a..b (repeatable)");
  bench->add_option("--target", c.target, "Alternatively a target size var=value");
  bench->add_option("--tolerance", c.tolerance, "Relative window half-width for --target");
  bench->add_option("--samples", c.samples, "Paired attempts (default 10000)");
  seed_opt(bench);
  precision_opt(bench);

  auto* replay = app.add_subcommand("replay", "Build the object recorded in a trace file");
  spec_opts(replay);
  replay->add_option("--trace", c.trace_file, "Trace JSON file")->required();
  replay->add_option("--builder", c.builder, "Object rendering: term or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (validate->parsed()) return cmd_validate(c);
    if (count->parsed()) return cmd_count(c);
    if (oracle->parsed()) return cmd_oracle(c);
    if (tune_cmd->parsed()) return cmd_sample_like(c, true);
    if (sample_cmd->parsed()) return cmd_sample_like(c, false);
    if (uniformity->parsed()) return cmd_uniformity(c);
    if (bench->parsed()) return cmd_bench(c);
    if (replay->parsed()) return cmd_replay(c);
  } catch (const UsageError& e) {
    report_error(c, "UsageError", e.what());
    return 1;
  } catch (const Error& e) {
    const std::string code(to_string(e.code()));
    std::string message = e.what();
    std::string prefix = code + ": ";
    if (const auto& p = e.position())
      prefix = code + " at " + p->origin + ":" + std::to_string(p->line) + ":" + std::to_string(p->column) + ": ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    report_error(c, code, message, e.position());
    switch (category_of(e.code())) {
      case ErrorCategory::Usage: return 1;
      case ErrorCategory::Spec: return 2;
      case ErrorCategory::Numeric: return 3;
    }
  } catch (const std::invalid_argument& e) {
    report_error(c, "UsageError", e.what());
    return 1;
  }
  return 1;
}
