#pragma once

// Generating-function view of a class system. `transfer` maps every
// specification node to one equation:
//
//   Atom(s)       ->  monomial  x1^s1 * ... * xn^sn
//   Union         ->  sum of children
//   Product       ->  product of children
//   Seq(A)        ->  quasi-inverse 1 / (1 - A)
//   ClassRef(C)   ->  the unknown C
//
// The evaluation templates below work over any ring type providing
// zero(), one(), monomial(SizeVector), add, mul and quasi_inverse.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "combkit/system.hpp"

namespace combkit {

enum class GfOp { Monomial, Sum, Product, QuasiInverse, Unknown };

struct GfTerm {
  std::int32_t node = -1;
  GfOp op = GfOp::Monomial;
  std::vector<std::int32_t> operands;
  /// Class index for GfOp::Unknown.
  std::int32_t unknown = -1;
  SizeVector exponent;
};

/// Self-contained transfer result (does not reference the ClassSystem).
///
/// Polynomial form: the unknowns are the classes followed by one auxiliary
/// unknown S per Seq node, with equation S = 1 + A * S. In that form every
/// equation is a polynomial in the unknowns.
class GFSystem {
 public:
  explicit GFSystem(const ClassSystem& system);

  const std::vector<GfTerm>& terms() const noexcept { return terms_; }
  const GfTerm& term(std::int32_t node) const { return terms_.at(static_cast<std::size_t>(node)); }
  const std::vector<std::string>& variables() const noexcept { return variables_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::size_t class_count() const noexcept { return class_roots_.size(); }
  std::int32_t class_root(std::size_t c) const { return class_roots_.at(c); }

  std::size_t unknown_count() const noexcept { return class_roots_.size() + seq_nodes_.size(); }
  const std::vector<std::int32_t>& seq_nodes() const noexcept { return seq_nodes_; }
  /// Auxiliary unknown index of a Seq node.
  std::size_t seq_unknown(std::int32_t node) const { return seq_unknown_.at(static_cast<std::size_t>(node)); }

  /// Human-readable equation of a class, e.g. "B = z + z*B*B".
  std::string equation_text(std::size_t c) const;
  std::string node_text(std::int32_t node) const;

 private:
  std::vector<GfTerm> terms_;
  std::vector<std::string> variables_;
  std::vector<std::string> class_names_;
  std::vector<std::int32_t> class_roots_;
  std::vector<std::int32_t> seq_nodes_;
  std::vector<std::size_t> seq_unknown_;
};

GFSystem transfer(const ClassSystem& system);

enum class SeqMode {
  /// Seq nodes evaluate as ring.quasi_inverse(operand).
  Direct,
  /// Seq nodes read their auxiliary unknown (polynomial form).
  Auxiliary,
};

/// Values of every node given the unknowns (classes, plus auxiliaries in
/// SeqMode::Auxiliary). Children have larger ids than parents, so one
/// reverse sweep suffices.
template <class Ring, class V = decltype(std::declval<const Ring&>().zero())>
std::vector<V> evaluate_nodes(const GFSystem& gfs, const Ring& ring, std::span<const V> unknowns, SeqMode mode) {
  const auto& terms = gfs.terms();
  std::vector<V> out(terms.size());
  for (std::size_t i = terms.size(); i-- > 0;) {
    const GfTerm& t = terms[i];
    switch (t.op) {
      case GfOp::Monomial:
        out[i] = ring.monomial(t.exponent);
        break;
      case GfOp::Unknown:
        out[i] = unknowns[static_cast<std::size_t>(t.unknown)];
        break;
      case GfOp::Sum: {
        V acc = out[static_cast<std::size_t>(t.operands[0])];
        for (std::size_t k = 1; k < t.operands.size(); ++k)
          acc = ring.add(acc, out[static_cast<std::size_t>(t.operands[k])]);
        out[i] = std::move(acc);
        break;
      }
      case GfOp::Product: {
        V acc = out[static_cast<std::size_t>(t.operands[0])];
        for (std::size_t k = 1; k < t.operands.size(); ++k)
          acc = ring.mul(acc, out[static_cast<std::size_t>(t.operands[k])]);
        out[i] = std::move(acc);
        break;
      }
      case GfOp::QuasiInverse:
        if (mode == SeqMode::Auxiliary)
          out[i] = unknowns[gfs.seq_unknown(static_cast<std::int32_t>(i))];
        else
          out[i] = ring.quasi_inverse(out[static_cast<std::size_t>(t.operands[0])]);
        break;
    }
  }
  return out;
}

/// Right-hand sides H(Y) of the fixed-point system Y = H(Y). In Direct mode
/// only the class equations exist; in Auxiliary mode the Seq equations
/// S = 1 + A * S follow.
template <class Ring, class V>
std::vector<V> system_map(const GFSystem& gfs, const Ring& ring, const std::vector<V>& node_values,
                          std::span<const V> unknowns, SeqMode mode) {
  std::vector<V> h;
  h.reserve(mode == SeqMode::Auxiliary ? gfs.unknown_count() : gfs.class_count());
  for (std::size_t c = 0; c < gfs.class_count(); ++c)
    h.push_back(node_values[static_cast<std::size_t>(gfs.class_root(c))]);
  if (mode == SeqMode::Auxiliary) {
    for (auto s : gfs.seq_nodes()) {
      const auto& operand = node_values[static_cast<std::size_t>(gfs.term(s).operands[0])];
      h.push_back(ring.add(ring.one(), ring.mul(operand, unknowns[gfs.seq_unknown(s)])));
    }
  }
  return h;
}

/// Forward-mode derivative of every node along one direction. `leaf(term)`
/// returns the derivative of Monomial and Unknown terms (and of Seq terms in
/// Auxiliary mode); an empty optional means zero.
template <class Ring, class V, class Leaf>
std::vector<std::optional<V>> differentiate_nodes(const GFSystem& gfs, const Ring& ring,
                                                  const std::vector<V>& values, SeqMode mode, Leaf&& leaf) {
  const auto& terms = gfs.terms();
  std::vector<std::optional<V>> d(terms.size());
  for (std::size_t i = terms.size(); i-- > 0;) {
    const GfTerm& t = terms[i];
    switch (t.op) {
      case GfOp::Monomial:
      case GfOp::Unknown:
        d[i] = leaf(t);
        break;
      case GfOp::Sum: {
        std::optional<V> acc;
        for (auto c : t.operands) {
          const auto& dc = d[static_cast<std::size_t>(c)];
          if (!dc) continue;
          acc = acc ? ring.add(*acc, *dc) : *dc;
        }
        d[i] = std::move(acc);
        break;
      }
      case GfOp::Product: {
        std::optional<V> acc;
        for (std::size_t k = 0; k < t.operands.size(); ++k) {
          const auto& dk = d[static_cast<std::size_t>(t.operands[k])];
          if (!dk) continue;
          V term = *dk;
          for (std::size_t j = 0; j < t.operands.size(); ++j)
            if (j != k) term = ring.mul(term, values[static_cast<std::size_t>(t.operands[j])]);
          acc = acc ? ring.add(*acc, term) : term;
        }
        d[i] = std::move(acc);
        break;
      }
      case GfOp::QuasiInverse:
        if (mode == SeqMode::Auxiliary) {
          d[i] = leaf(t);
        } else {
          // d/dx 1/(1-A) = A' / (1-A)^2 = A' * Q * Q
          const auto& da = d[static_cast<std::size_t>(t.operands[0])];
          if (da) d[i] = ring.mul(ring.mul(*da, values[i]), values[i]);
        }
        break;
    }
  }
  return d;
}

/// Jacobian dH/dY of the fixed-point system, rows = equations, columns =
/// unknowns. Zero entries are empty optionals.
template <class Ring, class V>
std::vector<std::vector<std::optional<V>>> system_jacobian(const GFSystem& gfs, const Ring& ring,
                                                           const std::vector<V>& node_values,
                                                           std::span<const V> unknowns, SeqMode mode) {
  const std::size_t n = mode == SeqMode::Auxiliary ? gfs.unknown_count() : gfs.class_count();
  std::vector<std::vector<std::optional<V>>> jac(n, std::vector<std::optional<V>>(n));
  for (std::size_t j = 0; j < n; ++j) {
    auto leaf = [&](const GfTerm& t) -> std::optional<V> {
      if (t.op == GfOp::Unknown && static_cast<std::size_t>(t.unknown) == j) return ring.one();
      if (t.op == GfOp::QuasiInverse && gfs.seq_unknown(t.node) == j) return ring.one();
      return std::nullopt;
    };
    const auto d = differentiate_nodes(gfs, ring, node_values, mode, leaf);
    for (std::size_t c = 0; c < gfs.class_count(); ++c)
      jac[c][j] = d[static_cast<std::size_t>(gfs.class_root(c))];
    if (mode == SeqMode::Auxiliary) {
      for (auto s : gfs.seq_nodes()) {
        const std::size_t row = gfs.seq_unknown(s);
        const auto a = static_cast<std::size_t>(gfs.term(s).operands[0]);
        std::optional<V> entry;
        if (d[a]) entry = ring.mul(*d[a], unknowns[row]);
        if (row == j) entry = entry ? ring.add(*entry, node_values[a]) : node_values[a];
        jac[row][j] = std::move(entry);
      }
    }
  }
  return jac;
}

}  // namespace combkit
