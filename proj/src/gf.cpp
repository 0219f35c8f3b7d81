#include "combkit/gf.hpp"

namespace combkit {

GFSystem::GFSystem(const ClassSystem& system)
    : variables_(system.variables()), seq_unknown_(system.node_count(), 0) {
  for (std::size_t c = 0; c < system.class_count(); ++c) {
    class_names_.push_back(system.class_name(c));
    class_roots_.push_back(system.class_root(c));
  }
  terms_.reserve(system.node_count());
  for (const Node& node : system.nodes()) {
    GfTerm t;
    t.node = node.id;
    t.operands = node.children;
    switch (node.kind) {
      case NodeKind::Atom:
        t.op = GfOp::Monomial;
        t.exponent = node.atom_size;
        break;
      case NodeKind::ClassRef:
        t.op = GfOp::Unknown;
        t.unknown = node.target_class;
        break;
      case NodeKind::Union:
        t.op = GfOp::Sum;
        break;
      case NodeKind::Product:
        t.op = GfOp::Product;
        break;
      case NodeKind::Seq:
        t.op = GfOp::QuasiInverse;
        seq_unknown_[static_cast<std::size_t>(node.id)] = class_roots_.size() + seq_nodes_.size();
        seq_nodes_.push_back(node.id);
        break;
    }
    terms_.push_back(std::move(t));
  }
}

std::string GFSystem::node_text(std::int32_t node) const {
  const GfTerm& t = term(node);
  switch (t.op) {
    case GfOp::Monomial: {
      std::string out;
      for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (t.exponent[i] == 0) continue;
        if (!out.empty()) out += "*";
        out += variables_[i];
        if (t.exponent[i] > 1) out += "^" + std::to_string(t.exponent[i]);
      }
      return out.empty() ? "1" : out;
    }
    case GfOp::Unknown:
      return t.unknown >= 0 ? class_names_[static_cast<std::size_t>(t.unknown)] : "?";
    case GfOp::QuasiInverse:
      return "1/(1 - " + node_text(t.operands[0]) + ")";
    case GfOp::Sum:
    case GfOp::Product: {
      std::string out;
      const bool sum = t.op == GfOp::Sum;
      for (std::size_t k = 0; k < t.operands.size(); ++k) {
        if (k) out += sum ? " + " : "*";
        const auto child = term(t.operands[k]).op;
        const bool wrap = (sum && child == GfOp::Sum) || (!sum && child == GfOp::Sum) ||
                          (!sum && child == GfOp::Product);
        out += wrap ? "(" + node_text(t.operands[k]) + ")" : node_text(t.operands[k]);
      }
      return out;
    }
  }
  return {};
}

std::string GFSystem::equation_text(std::size_t c) const {
  return class_names_.at(c) + " = " + node_text(class_roots_.at(c));
}

GFSystem transfer(const ClassSystem& system) {
  system.require_valid();
  return GFSystem(system);
}

}  // namespace combkit
