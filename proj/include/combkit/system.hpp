#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "combkit/error.hpp"
#include "combkit/grammar.hpp"

namespace combkit {

/// Component-wise size of an object, one entry per system variable.
class SizeVector {
 public:
  SizeVector() = default;
  explicit SizeVector(std::size_t n, std::int64_t fill = 0) : v_(n, fill) {}
  explicit SizeVector(std::vector<std::int64_t> v) : v_(std::move(v)) {}

  std::size_t size() const noexcept { return v_.size(); }
  std::int64_t operator[](std::size_t i) const noexcept { return v_[i]; }
  std::int64_t& operator[](std::size_t i) noexcept { return v_[i]; }
  const std::vector<std::int64_t>& values() const noexcept { return v_; }
  std::int64_t total() const noexcept;
  bool is_zero() const noexcept;

  SizeVector& operator+=(const SizeVector& o);
  friend SizeVector operator+(SizeVector a, const SizeVector& b) { return a += b; }
  friend bool operator==(const SizeVector&, const SizeVector&) = default;
  /// Component-wise <=.
  bool dominated_by(const SizeVector& o) const noexcept;

 private:
  std::vector<std::int64_t> v_;
};

inline constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

/// Per-variable size range; `max[i] == kUnbounded` means no finite bound.
struct SizeBounds {
  SizeVector min;
  SizeVector max;
  bool bounded(std::size_t var) const noexcept { return max[var] != kUnbounded; }
};

/// Flattened specification node. Ids are assigned in equation order,
/// preorder within each tree.
struct Node {
  std::int32_t id = -1;
  NodeKind kind = NodeKind::Atom;
  std::int32_t owner_class = -1;
  std::vector<std::int32_t> children;
  /// ClassRef target; -1 when the name is not defined.
  std::int32_t target_class = -1;
  /// Atom key or referenced class name.
  std::string name;
  SizeVector atom_size;
  bool implicit_atom = false;
};

struct Diagnostic {
  ErrorCode code;
  std::string message;
  std::optional<std::int32_t> node;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  bool ok() const noexcept { return diagnostics.empty(); }
};

struct ValidationOptions {
  /// Truncation order of the stabilization check.
  std::uint32_t order = 8;
  /// Iteration budget; 0 selects unknowns * (order + 1) + 1.
  std::size_t iteration_budget = 0;
};

/// Named equations over flattened specification trees. Immutable; the
/// analysis (validation, size bounds) is computed on construction.
class ClassSystem {
 public:
  explicit ClassSystem(Specification spec);

  const Specification& specification() const noexcept { return spec_; }
  const std::vector<std::string>& variables() const noexcept { return variables_; }
  std::optional<std::size_t> variable_index(const std::string& name) const;
  std::size_t variable_count() const noexcept { return variables_.size(); }

  std::size_t class_count() const noexcept { return class_names_.size(); }
  const std::string& class_name(std::size_t c) const { return class_names_.at(c); }
  std::int32_t class_root(std::size_t c) const { return class_roots_.at(c); }
  std::optional<std::size_t> find_class(const std::string& name) const;
  /// Throws UnknownClass.
  std::size_t class_index(const std::string& name) const;

  std::size_t node_count() const noexcept { return nodes_.size(); }
  const Node& node(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  /// Follows ClassRef chains to a structural node.
  std::int32_t resolve(std::int32_t id) const;

  const ValidationReport& report() const noexcept { return report_; }
  bool valid() const noexcept { return report_.ok(); }
  /// Throws the first diagnostic as an Error.
  void require_valid() const;

  /// Bounds per node; only meaningful for valid systems.
  const SizeBounds& node_bounds(std::int32_t id) const { return bounds_.at(static_cast<std::size_t>(id)); }
  bool nullable(std::int32_t id) const { return nullable_.at(static_cast<std::size_t>(id)); }

  std::string size_to_string(const SizeVector& s) const;

 private:
  friend ValidationReport validate(const ClassSystem&, const ValidationOptions&);
  void flatten(const SpecNode& n, std::int32_t owner);
  void analyse();

  Specification spec_;
  std::vector<std::string> variables_;
  std::vector<std::string> class_names_;
  std::vector<std::int32_t> class_roots_;
  std::vector<Node> nodes_;
  std::vector<SizeBounds> bounds_;
  std::vector<bool> nullable_;
  std::vector<bool> empty_;
  ValidationReport report_;
};

/// Parses equation sources into a class system (validation runs on construction;
/// inspect `report()` or call `require_valid()`).
ClassSystem parse(const std::vector<EquationSource>& sources);
ClassSystem parse(const std::vector<std::string>& equations);

ValidationReport validate(const ClassSystem& system, const ValidationOptions& options = {});

SizeVector min_size(const ClassSystem& system, const std::string& class_name);
/// Entries equal kUnbounded where no finite bound exists.
SizeVector max_size(const ClassSystem& system, const std::string& class_name);

}  // namespace combkit
