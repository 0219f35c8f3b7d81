#include "combkit/system.hpp"

#include <algorithm>
#include <set>

#include "combkit/series.hpp"

namespace combkit {

std::int64_t SizeVector::total() const noexcept {
  std::int64_t t = 0;
  for (auto x : v_) t += x;
  return t;
}

bool SizeVector::is_zero() const noexcept {
  return std::all_of(v_.begin(), v_.end(), [](std::int64_t x) { return x == 0; });
}

SizeVector& SizeVector::operator+=(const SizeVector& o) {
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

bool SizeVector::dominated_by(const SizeVector& o) const noexcept {
  for (std::size_t i = 0; i < v_.size(); ++i)
    if (v_[i] > o.v_[i]) return false;
  return true;
}

namespace {

void collect_variables(const SpecNode& n, std::vector<std::string>& vars) {
  if (n.kind == NodeKind::Atom) {
    for (const auto& [v, k] : n.atom_size)
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  }
  for (const auto& c : n.children) collect_variables(c, vars);
}

std::int64_t sat_add(std::int64_t a, std::int64_t b) {
  if (a == kUnbounded || b == kUnbounded) return kUnbounded;
  if (a > kUnbounded - b) return kUnbounded;
  return a + b;
}

}  // namespace

ClassSystem::ClassSystem(Specification spec) : spec_(std::move(spec)) {
  for (const auto& eq : spec_.equations) {
    class_names_.push_back(eq.name);
    collect_variables(eq.rhs, variables_);
  }
  for (std::size_t c = 0; c < spec_.equations.size(); ++c) {
    class_roots_.push_back(static_cast<std::int32_t>(nodes_.size()));
    flatten(spec_.equations[c].rhs, static_cast<std::int32_t>(c));
  }
  analyse();
}

void ClassSystem::flatten(const SpecNode& n, std::int32_t owner) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  {
    Node& node = nodes_.back();
    node.id = id;
    node.kind = n.kind;
    node.owner_class = owner;
    node.name = n.name;
    node.implicit_atom = n.implicit_atom;
    node.atom_size = SizeVector(variables_.size());
    if (n.kind == NodeKind::Atom) {
      for (const auto& [v, k] : n.atom_size) node.atom_size[*variable_index(v)] = k;
    }
    if (n.kind == NodeKind::ClassRef) {
      if (auto c = find_class(n.name)) node.target_class = static_cast<std::int32_t>(*c);
    }
  }
  std::vector<std::int32_t> children;
  for (const auto& c : n.children) {
    children.push_back(static_cast<std::int32_t>(nodes_.size()));
    flatten(c, owner);
  }
  nodes_[static_cast<std::size_t>(id)].children = std::move(children);
}

std::optional<std::size_t> ClassSystem::variable_index(const std::string& name) const {
  auto it = std::find(variables_.begin(), variables_.end(), name);
  if (it == variables_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - variables_.begin());
}

std::optional<std::size_t> ClassSystem::find_class(const std::string& name) const {
  auto it = std::find(class_names_.begin(), class_names_.end(), name);
  if (it == class_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - class_names_.begin());
}

std::size_t ClassSystem::class_index(const std::string& name) const {
  auto c = find_class(name);
  if (!c) throw Error(ErrorCode::UnknownClass, "no class named '" + name + "'");
  return *c;
}

std::int32_t ClassSystem::resolve(std::int32_t id) const {
  std::size_t hops = 0;
  while (nodes_[static_cast<std::size_t>(id)].kind == NodeKind::ClassRef) {
    const auto target = nodes_[static_cast<std::size_t>(id)].target_class;
    if (target < 0 || ++hops > nodes_.size()) return id;
    id = class_roots_[static_cast<std::size_t>(target)];
  }
  return id;
}

void ClassSystem::require_valid() const {
  if (report_.ok()) return;
  const Diagnostic& d = report_.diagnostics.front();
  Error e(d.code, d.message);
  if (d.node) e.with_node(*d.node);
  throw e;
}

std::string ClassSystem::size_to_string(const SizeVector& s) const {
  std::string out = "{";
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (i) out += ", ";
    out += variables_[i] + ": " + (s[i] == kUnbounded ? std::string("inf") : std::to_string(s[i]));
  }
  return out + "}";
}

namespace {

// Kleene iteration Y <- H(Y) on series truncated at `order` in every
// variable and in total degree. Well-founded systems stabilize within the
// budget; systems with infinitely many objects of some size never do.
bool stabilizes(const ClassSystem& system, const ValidationOptions& options) {
  const GFSystem gfs(system);
  const std::vector<std::uint32_t> bounds(system.variable_count(), options.order);
  const SeriesRing ring(system.variables(), bounds, options.order);
  const std::size_t unknowns = gfs.unknown_count();
  const std::size_t budget =
      options.iteration_budget ? options.iteration_budget : unknowns * (options.order + 1) + 1;
  std::vector<TruncatedSeries> y(gfs.class_count(), ring.zero());
  for (std::size_t it = 0; it <= budget; ++it) {
    const auto values = evaluate_nodes(gfs, ring, std::span<const TruncatedSeries>(y), SeqMode::Direct);
    auto next = system_map(gfs, ring, values, std::span<const TruncatedSeries>(y), SeqMode::Direct);
    if (next == y) return true;
    y = std::move(next);
  }
  return false;
}

}  // namespace

void ClassSystem::analyse() {
  const std::size_t n = nodes_.size();
  const std::size_t nv = variables_.size();
  auto& diags = report_.diagnostics;

  for (const auto& node : nodes_) {
    if (node.kind == NodeKind::ClassRef && node.target_class < 0)
      diags.push_back({ErrorCode::UnresolvedReference, "undefined class '" + node.name + "'", node.id});
  }

  auto class_value = [&](const Node& node) -> std::size_t {
    return static_cast<std::size_t>(class_roots_[static_cast<std::size_t>(node.target_class)]);
  };

  // Least fixed point of the per-variable minimum size; empty optional = no
  // object derivable yet.
  std::vector<std::optional<SizeVector>> mins(n);
  nullable_.assign(n, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = n; i-- > 0;) {
      const Node& node = nodes_[i];
      std::optional<SizeVector> v;
      bool null = false;
      switch (node.kind) {
        case NodeKind::Atom:
          v = node.atom_size;
          break;
        case NodeKind::ClassRef:
          if (node.target_class >= 0) {
            v = mins[class_value(node)];
            null = nullable_[class_value(node)];
          }
          break;
        case NodeKind::Seq:
          v = SizeVector(nv);
          null = true;
          break;
        case NodeKind::Union:
          for (auto c : node.children) {
            const auto& cv = mins[static_cast<std::size_t>(c)];
            null = null || nullable_[static_cast<std::size_t>(c)];
            if (!cv) continue;
            if (!v) {
              v = *cv;
            } else {
              for (std::size_t k = 0; k < nv; ++k) (*v)[k] = std::min((*v)[k], (*cv)[k]);
            }
          }
          break;
        case NodeKind::Product: {
          SizeVector acc(nv);
          bool all = true;
          null = true;
          for (auto c : node.children) {
            const auto& cv = mins[static_cast<std::size_t>(c)];
            null = null && nullable_[static_cast<std::size_t>(c)];
            if (!cv) {
              all = false;
              continue;
            }
            acc += *cv;
          }
          if (all) v = acc;
          break;
        }
      }
      if (v != mins[i] || null != nullable_[i]) {
        mins[i] = std::move(v);
        nullable_[i] = null;
        changed = true;
      }
    }
  }

  empty_.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) empty_[i] = !mins[i].has_value();
  for (std::size_t c = 0; c < class_names_.size(); ++c) {
    if (empty_[static_cast<std::size_t>(class_roots_[c])])
      diags.push_back({ErrorCode::EmptyClass, "class '" + class_names_[c] + "' has no finite object",
                       class_roots_[c]});
  }
  for (const auto& node : nodes_) {
    if (node.kind == NodeKind::Seq && nullable_[static_cast<std::size_t>(node.children[0])])
      diags.push_back({ErrorCode::IllFoundedSequence,
                       "Seq operand contains a size-0 object in class '" +
                           class_names_[static_cast<std::size_t>(node.owner_class)] + "'",
                       node.id});
  }

  // Maximum size: iterate upward; anything still growing after enough
  // rounds lies on a size-increasing cycle and is unbounded.
  std::vector<SizeVector> maxs(n, SizeVector(nv));
  const std::size_t rounds = n + 2;
  for (;;) {
    std::vector<bool> changed_last(n * nv, false);
    bool stable = false;
    for (std::size_t r = 0; r < rounds && !stable; ++r) {
      stable = true;
      std::fill(changed_last.begin(), changed_last.end(), false);
      for (std::size_t i = n; i-- > 0;) {
        if (empty_[i]) continue;
        const Node& node = nodes_[i];
        SizeVector v(nv);
        switch (node.kind) {
          case NodeKind::Atom:
            v = node.atom_size;
            break;
          case NodeKind::ClassRef:
            if (node.target_class >= 0) v = maxs[class_value(node)];
            break;
          case NodeKind::Seq: {
            const auto& cv = maxs[static_cast<std::size_t>(node.children[0])];
            for (std::size_t k = 0; k < nv; ++k) v[k] = cv[k] > 0 ? kUnbounded : 0;
            break;
          }
          case NodeKind::Union:
            for (auto c : node.children) {
              if (empty_[static_cast<std::size_t>(c)]) continue;
              for (std::size_t k = 0; k < nv; ++k) v[k] = std::max(v[k], maxs[static_cast<std::size_t>(c)][k]);
            }
            break;
          case NodeKind::Product:
            for (auto c : node.children)
              for (std::size_t k = 0; k < nv; ++k) v[k] = sat_add(v[k], maxs[static_cast<std::size_t>(c)][k]);
            break;
        }
        for (std::size_t k = 0; k < nv; ++k) {
          if (v[k] > maxs[i][k]) {
            maxs[i][k] = v[k];
            changed_last[i * nv + k] = true;
            stable = false;
          }
        }
      }
    }
    if (stable) break;
    // Entries that changed in the final round grow without bound.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < nv; ++k)
        if (changed_last[i * nv + k]) maxs[i][k] = kUnbounded;
  }

  bounds_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    bounds_[i].min = mins[i].value_or(SizeVector(nv));
    bounds_[i].max = maxs[i];
  }

  if (diags.empty() && !stabilizes(*this, ValidationOptions{})) {
    diags.push_back({ErrorCode::NonStabilizing,
                     "truncated series iteration does not stabilize; some size has infinitely many objects",
                     std::nullopt});
  }
}

ValidationReport validate(const ClassSystem& system, const ValidationOptions& options) {
  if (options.order == ValidationOptions{}.order && options.iteration_budget == 0) return system.report();
  ValidationReport report = system.report();
  auto& d = report.diagnostics;
  d.erase(std::remove_if(d.begin(), d.end(), [](const Diagnostic& x) { return x.code == ErrorCode::NonStabilizing; }),
          d.end());
  if (d.empty() && !stabilizes(system, options))
    d.push_back({ErrorCode::NonStabilizing, "truncated series iteration does not stabilize", std::nullopt});
  return report;
}

ClassSystem parse(const std::vector<EquationSource>& sources) {
  return ClassSystem(parse_specification(sources));
}

ClassSystem parse(const std::vector<std::string>& equations) {
  std::vector<EquationSource> sources;
  for (std::size_t i = 0; i < equations.size(); ++i)
    sources.push_back({equations[i], {"<equation " + std::to_string(i + 1) + ">", 1, 1}});
  return parse(sources);
}

SizeVector min_size(const ClassSystem& system, const std::string& class_name) {
  system.require_valid();
  return system.node_bounds(system.class_root(system.class_index(class_name))).min;
}

SizeVector max_size(const ClassSystem& system, const std::string& class_name) {
  system.require_valid();
  return system.node_bounds(system.class_root(system.class_index(class_name))).max;
}

}  // namespace combkit
