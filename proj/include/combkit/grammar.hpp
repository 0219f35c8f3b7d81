#pragma once

// Specification language:
//
//   system   := equation+
//   equation := IDENT '=' expr
//   expr     := term ('+' term)*
//   term     := factor ('*' factor)*
//   factor   := IDENT | atomdecl | seqcall | '(' expr ')'
//   atomdecl := 'atom' '(' IDENT ':' INT (',' IDENT ':' INT)* ')'
//   seqcall  := 'seq' '(' expr ')'
//
// Keywords are case-insensitive. Identifiers are ASCII letters, digits and
// underscores, starting with a letter. A name defined by an equation is a
// class reference; an undefined single lowercase letter is an atom of size 1
// in the variable of that name. Spec files carry one equation per line and
// `#` comments.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "combkit/error.hpp"

namespace combkit {

struct EquationSource {
  std::string text;
  SourcePosition origin{"<input>", 1, 1};
};

enum class NodeKind { Atom, ClassRef, Union, Product, Seq };

std::string_view to_string(NodeKind kind) noexcept;

/// (variable, exponent) pairs in declaration order.
using AtomSize = std::vector<std::pair<std::string, std::int64_t>>;

struct SpecNode {
  NodeKind kind = NodeKind::Atom;
  /// Atom key or referenced class name.
  std::string name;
  AtomSize atom_size;
  /// True for atoms written as a bare variable letter.
  bool implicit_atom = false;
  std::vector<SpecNode> children;
  SourcePosition position;

  static SpecNode atom(std::string key, AtomSize size, bool implicit);
  static SpecNode class_ref(std::string name);
  static SpecNode make_union(std::vector<SpecNode> children);
  static SpecNode product(std::vector<SpecNode> children);
  static SpecNode seq(SpecNode child);
};

/// Structural equality; positions are ignored.
bool structurally_equal(const SpecNode& a, const SpecNode& b);

struct Equation {
  std::string name;
  SpecNode rhs;
  SourcePosition position;
};

struct Specification {
  std::vector<Equation> equations;
};

bool structurally_equal(const Specification& a, const Specification& b);

/// Parses and resolves identifiers. Undefined multi-letter or uppercase names
/// stay as class references; `validate` reports them.
Specification parse_specification(const std::vector<EquationSource>& sources);

/// Splits spec-file text into one source per non-blank, non-comment line.
std::vector<EquationSource> split_spec_text(std::string_view text, std::string_view origin);

/// Canonical text form; re-parsing it yields a structurally equal tree.
std::string to_text(const SpecNode& node);
std::string to_text(const Specification& spec);

bool is_reserved_word(std::string_view word) noexcept;

}  // namespace combkit
