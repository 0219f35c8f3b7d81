#pragma once

// Exact Boltzmann sampling with lazily extended random reals.
//
// A CompiledSampler holds, for every union and sequence node, rounded
// cumulative probability bounds L_k <= P_k <= U_k at one working precision P.
// A decision looks at the interval [t, t + 2^-P) spanned by the first P bits
// of its random real r: outcome k is returned when the whole interval lies
// below L_k, the scan moves past k when it lies above U_k, and anything else
// is ambiguous. Ambiguity recompiles at 2P, replays the decisions taken so
// far and continues. Outcomes are 0-based: the index of the chosen union
// child, or the number of sequence elements.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "combkit/oracle.hpp"
#include "combkit/system.hpp"

namespace combkit {

/// SplitMix64 output function.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Source of the bits of every random real of one attempt.
class EntropySource {
 public:
  virtual ~EntropySource() = default;
  /// Word `index` (0 = most significant) of the real drawn for `decision`.
  virtual std::uint64_t word(std::uint64_t decision, std::uint32_t index) = 0;
};

/// Counter-based stream: every word is a SplitMix64 hash of (seed, decision,
/// index), so words can be requested in any order.
class StreamEntropy final : public EntropySource {
 public:
  explicit StreamEntropy(std::uint64_t seed) noexcept : seed_(seed) {}
  /// Seed of the stream for attempt `attempt` under `master`.
  static std::uint64_t attempt_seed(std::uint64_t master, std::uint64_t attempt) noexcept;
  std::uint64_t word(std::uint64_t decision, std::uint32_t index) override;
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Fixed bits, for tests and trace replay; throws EntropyExhausted past the end.
class FixedEntropy final : public EntropySource {
 public:
  /// One bit string ("0101...") per decision.
  explicit FixedEntropy(std::vector<std::string> bits) : bits_(std::move(bits)) {}
  std::uint64_t word(std::uint64_t decision, std::uint32_t index) override;

 private:
  std::vector<std::string> bits_;
};

/// The drawn prefix of a real r in [0, 1). `head` holds bits 1..64 and
/// `tail` the following words; `bits` counts the leading bits inspected.
struct RandomReal {
  std::uint64_t head = 0;
  std::vector<std::uint64_t> tail;
  std::uint32_t bits = 0;

  static RandomReal from_bits(const std::string& bits);
  std::size_t word_count() const noexcept { return 1 + tail.size(); }
  std::uint64_t word(std::size_t i) const noexcept { return i == 0 ? head : tail[i - 1]; }
  /// Makes at least `count` bits available, drawing whole words.
  void extend(std::uint32_t count, EntropySource& source, std::uint64_t decision);
  /// The first `bits` bits as hex digits (last digit zero-padded).
  std::string hex() const;
  /// Inverse of hex(); throws InvalidTrace.
  static RandomReal from_hex(const std::string& hex, std::uint32_t bits);
  bool operator==(const RandomReal&) const = default;
};

/// Cumulative bounds for one choice node. For unions L/U have one entry per
/// child; for sequences entry k is the bound for "k elements or fewer" and
/// the table stops at the first K with U_K >= L_{K+1}.
struct ChoiceTable {
  NodeKind kind = NodeKind::Union;
  std::int32_t node = -1;
  mpfr_prec_t precision = 53;
  std::vector<BigFloat> lower;  // L_k, rounded down
  std::vector<BigFloat> upper;  // U_k, rounded up
  /// Exact copies of lower/upper as doubles when precision <= 53.
  std::vector<double> lower_d;
  std::vector<double> upper_d;
  /// Per-outcome probability bounds l_k <= p_k <= u_k.
  std::vector<BigFloat> prob_lower;
  std::vector<BigFloat> prob_upper;
  /// Sequence tables: true when cut by the U_K >= L_{K+1} rule.
  bool truncated = false;

  std::size_t size() const noexcept { return lower.size(); }
  /// Table from explicit bound strings (parsed with directed rounding).
  static ChoiceTable from_bounds(mpfr_prec_t precision, const std::vector<std::string>& lower,
                                 const std::vector<std::string>& upper);
};

/// Decides with the first `bits` bits of r. Empty means ambiguous.
std::optional<std::uint32_t> decide(const ChoiceTable& table, const RandomReal& r, std::uint32_t bits);

/// Union tables over interval values of the children.
ChoiceTable union_table(std::int32_t node, const std::vector<const Interval*>& children, mpfr_prec_t precision);
/// Sequence table over the interval value of the operand.
ChoiceTable sequence_table(std::int32_t node, const Interval& operand, mpfr_prec_t precision,
                           std::size_t max_entries = std::size_t{1} << 22);

/// Samplers for one system at one point and precision. Immutable.
class CompiledSampler {
 public:
  CompiledSampler(const ClassSystem& system, const GFSystem& gfs, const Point& point, mpfr_prec_t precision,
                  const OracleOptions& oracle = {});

  mpfr_prec_t precision() const noexcept { return precision_; }
  const NodeValues& values() const noexcept { return values_; }
  /// Table of a union or sequence node; throws for other kinds.
  const ChoiceTable& table(std::int32_t node) const;
  bool has_table(std::int32_t node) const;

 private:
  mpfr_prec_t precision_;
  NodeValues values_;
  std::vector<std::optional<ChoiceTable>> tables_;
};

/// Per-variable inclusive bounds; hi may be kUnbounded.
struct AcceptanceWindow {
  SizeVector lo;
  SizeVector hi;
  bool contains(const SizeVector& s) const noexcept;
};

/// Window [ceil(n(1 - eps)), floor(n(1 + eps))] per variable. When that is
/// empty because the target is fractional it widens to [floor, ceil].
/// Variables missing from `target` are unconstrained.
AcceptanceWindow window_for(const ClassSystem& system, const std::map<std::string, double>& target, double tolerance);

struct Decision {
  std::int32_t node = -1;
  std::uint32_t outcome = 0;
  RandomReal real;
};

struct ChoiceTrace {
  std::string class_name;
  std::int32_t root = -1;
  /// Seed of the attempt's entropy stream.
  std::uint64_t stream = 0;
  std::vector<Decision> decisions;
  SizeVector size;
};

enum class AttemptStatus { Accepted, Oversize, Undersize, RejectedFinal };

std::string_view to_string(AttemptStatus s) noexcept;

struct SampleStats {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  /// Attempts aborted before the stack emptied.
  std::uint64_t early_aborts = 0;
  /// Attempts rejected on their final size.
  std::uint64_t final_rejects = 0;
  std::uint64_t escalations = 0;
  std::uint64_t decisions = 0;
  /// Replayed decisions whose outcome changed at higher precision (must stay 0).
  std::uint64_t replay_mismatches = 0;
  mpfr_prec_t max_precision = 0;

  SampleStats& operator+=(const SampleStats& o);
};

struct SamplerOptions {
  mpfr_prec_t precision = 53;
  mpfr_prec_t precision_ceiling = 16384;
  bool early_rejection = true;
  OracleOptions oracle;
};

/// Scratch state reused across attempts.
struct AttemptWorkspace {
  std::vector<std::int32_t> stack;
  std::vector<std::int64_t> committed;
  std::vector<std::int64_t> pending_min;
  std::vector<std::int64_t> pending_max;
  std::vector<std::int64_t> unbounded;
  ChoiceTrace trace;
};

/// Compiled samplers at P, 2P, 4P, ... for one system and point. The base
/// level is compiled on construction; higher levels on first use.
class Sampler {
 public:
  Sampler(const ClassSystem& system, Point point, SamplerOptions options = {});

  const ClassSystem& system() const noexcept { return *system_; }
  const GFSystem& gfs() const noexcept { return *gfs_; }
  const Point& point() const noexcept { return point_; }
  const SamplerOptions& options() const noexcept { return options_; }
  /// Level i has precision P * 2^i. Throws PrecisionCeiling past the cap.
  const CompiledSampler& level(std::size_t i) const;
  std::size_t compiled_levels() const;

  /// One attempt. On return ws.trace holds the decisions made (complete
  /// when Accepted).
  AttemptStatus attempt(std::int32_t root, const AcceptanceWindow* window, EntropySource& entropy,
                        AttemptWorkspace& ws, SampleStats& stats) const;

  /// Convenience wrapper: Accepted trace or empty with the status.
  std::pair<AttemptStatus, ChoiceTrace> sample_trace(const std::string& class_name, const AcceptanceWindow* window,
                                                     EntropySource& entropy) const;

  /// Re-decides every decision of a trace at the given level, extending the
  /// reals from `entropy`. Returns the number of changed outcomes.
  std::size_t verify_trace(const ChoiceTrace& trace, std::size_t level, EntropySource& entropy) const;

  /// Draws until `n` attempts are accepted. Attempt i uses
  /// StreamEntropy(attempt_seed(seed, first_attempt + i)).
  std::vector<ChoiceTrace> sample(const std::string& class_name, std::size_t n, const AcceptanceWindow* window,
                                  std::uint64_t seed, SampleStats& stats, std::uint64_t first_attempt = 0) const;

 private:
  struct NodeInfo {
    NodeKind kind;
    std::int32_t first_child;
    std::int32_t child_count;
    std::int32_t target;  // ClassRef: root node of the target class
  };

  std::shared_ptr<const ClassSystem> system_;
  std::shared_ptr<const GFSystem> gfs_;
  Point point_;
  SamplerOptions options_;
  std::size_t nv_ = 0;
  std::vector<NodeInfo> info_;
  std::vector<std::int32_t> children_;
  std::vector<std::int64_t> atom_size_;  // [node * nv + var]
  std::vector<std::int64_t> min_;        // [node * nv + var]
  std::vector<std::int64_t> max_;        // [node * nv + var], kUnbounded allowed
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<CompiledSampler>> levels_;
  const CompiledSampler* base_ = nullptr;
};

/// Builder callbacks, invoked in postorder while replaying an accepted
/// trace. Union and class-reference nodes are transparent.
struct AtomDescriptor {
  std::string key;
  SizeVector size;
  std::int32_t node = -1;
};

struct ConstructorDescriptor {
  NodeKind kind = NodeKind::Product;
  std::int32_t node = -1;
  /// Class whose equation contains the node.
  std::string class_name;
};

template <class T, class U = T>
class Builder {
 public:
  using value_type = T;
  using result_type = U;
  virtual ~Builder() = default;
  virtual T atom(const AtomDescriptor& atom) = 0;
  virtual T product(const ConstructorDescriptor& ctor, std::vector<T> children) = 0;
  virtual T sequence(const ConstructorDescriptor& ctor, std::vector<T> children) = 0;
  virtual U finalize(T value) {
    if constexpr (std::is_convertible_v<T, U>) {
      return U(std::move(value));
    } else {
      throw Error(ErrorCode::BuilderFailure, "builder does not implement finalize");
    }
  }
};

/// Walks the grammar tree along a trace; `visit` receives events in
/// postorder. Throws InvalidTrace when the trace does not fit the system.
struct BuildEvent {
  enum Kind { Atom, Product, Sequence } kind;
  std::int32_t node;
  std::size_t arity;          // children for Product/Sequence
  std::size_t decision_index;  // decisions consumed so far
};
void walk_trace(const ClassSystem& system, const ChoiceTrace& trace, const std::function<void(const BuildEvent&)>& visit);

template <class T, class U>
U build(const ChoiceTrace& trace, const ClassSystem& system, Builder<T, U>& builder) {
  std::vector<T> values;
  walk_trace(system, trace, [&](const BuildEvent& ev) {
    const Node& node = system.node(ev.node);
    try {
      if (ev.kind == BuildEvent::Atom) {
        values.push_back(builder.atom({node.name, node.atom_size, node.id}));
        return;
      }
      std::vector<T> children(std::make_move_iterator(values.end() - static_cast<std::ptrdiff_t>(ev.arity)),
                              std::make_move_iterator(values.end()));
      values.resize(values.size() - ev.arity);
      ConstructorDescriptor ctor{node.kind, node.id, system.class_name(static_cast<std::size_t>(node.owner_class))};
      values.push_back(ev.kind == BuildEvent::Product ? builder.product(ctor, std::move(children))
                                                      : builder.sequence(ctor, std::move(children)));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BuilderFailure) throw;
      throw Error(ErrorCode::BuilderFailure, std::string(e.what()) + " (node " + std::to_string(ev.node) +
                                                 ", trace position " + std::to_string(ev.decision_index) + ")")
          .with_node(ev.node);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::BuilderFailure, std::string(e.what()) + " (node " + std::to_string(ev.node) +
                                                 ", trace position " + std::to_string(ev.decision_index) + ")")
          .with_node(ev.node);
    }
  });
  if (values.size() != 1) throw Error(ErrorCode::InvalidTrace, "trace did not produce exactly one object");
  return builder.finalize(std::move(values.back()));
}

/// Nested term strings: "z", "Prod(z, z)", "Seq()", "Seq(z, z)".
class TermBuilder final : public Builder<std::string> {
 public:
  std::string atom(const AtomDescriptor& atom) override { return atom.key; }
  std::string product(const ConstructorDescriptor&, std::vector<std::string> children) override;
  std::string sequence(const ConstructorDescriptor&, std::vector<std::string> children) override;
};

std::string build_term(const ChoiceTrace& trace, const ClassSystem& system);

/// Canonical bytes of the outcome sequence; equal keys mean equal objects.
std::string structure_key(const ChoiceTrace& trace);

}  // namespace combkit
