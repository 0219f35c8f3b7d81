#include "combkit/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>

namespace combkit {

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Atom: return "Atom";
    case NodeKind::ClassRef: return "ClassRef";
    case NodeKind::Union: return "Union";
    case NodeKind::Product: return "Product";
    case NodeKind::Seq: return "Seq";
  }
  return "?";
}

SpecNode SpecNode::atom(std::string key, AtomSize size, bool implicit) {
  SpecNode n;
  n.kind = NodeKind::Atom;
  n.name = std::move(key);
  n.atom_size = std::move(size);
  n.implicit_atom = implicit;
  return n;
}

SpecNode SpecNode::class_ref(std::string name) {
  SpecNode n;
  n.kind = NodeKind::ClassRef;
  n.name = std::move(name);
  return n;
}

SpecNode SpecNode::make_union(std::vector<SpecNode> children) {
  SpecNode n;
  n.kind = NodeKind::Union;
  n.children = std::move(children);
  return n;
}

SpecNode SpecNode::product(std::vector<SpecNode> children) {
  SpecNode n;
  n.kind = NodeKind::Product;
  n.children = std::move(children);
  return n;
}

SpecNode SpecNode::seq(SpecNode child) {
  SpecNode n;
  n.kind = NodeKind::Seq;
  n.children.push_back(std::move(child));
  return n;
}

bool structurally_equal(const SpecNode& a, const SpecNode& b) {
  if (a.kind != b.kind || a.name != b.name || a.atom_size != b.atom_size ||
      a.implicit_atom != b.implicit_atom || a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  return true;
}

bool structurally_equal(const Specification& a, const Specification& b) {
  if (a.equations.size() != b.equations.size()) return false;
  for (std::size_t i = 0; i < a.equations.size(); ++i) {
    if (a.equations[i].name != b.equations[i].name) return false;
    if (!structurally_equal(a.equations[i].rhs, b.equations[i].rhs)) return false;
  }
  return true;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

enum class Tok { Ident, Number, Equals, Plus, Star, LParen, RParen, Comma, Colon, End };

struct Token {
  Tok type;
  std::string text;
  std::size_t column;
};

class Parser {
 public:
  explicit Parser(const EquationSource& src) : src_(src) { lex(); }

  Equation equation() {
    const Token& name = peek();
    if (name.type != Tok::Ident) fail(name, ErrorCode::SyntaxError, "expected class name");
    if (is_reserved_word(name.text))
      fail(name, ErrorCode::ReservedName, "'" + name.text + "' is a reserved word");
    Equation eq;
    eq.name = name.text;
    eq.position = pos(name);
    advance();
    expect(Tok::Equals, "expected '='");
    eq.rhs = expr();
    if (peek().type != Tok::End) {
      if (peek().type == Tok::RParen) fail(peek(), ErrorCode::SyntaxError, "unbalanced ')'");
      fail(peek(), ErrorCode::SyntaxError, "unexpected '" + peek().text + "'");
    }
    // An explicit atom forming the whole right-hand side is keyed by the class.
    if (eq.rhs.kind == NodeKind::Atom && !eq.rhs.implicit_atom) eq.rhs.name = eq.name;
    return eq;
  }

 private:
  const Token& peek() const { return toks_[at_]; }
  void advance() {
    if (at_ + 1 < toks_.size()) ++at_;
  }

  SourcePosition pos(const Token& t) const {
    return {src_.origin.origin, src_.origin.line, src_.origin.column + t.column - 1};
  }

  [[noreturn]] void fail(const Token& t, ErrorCode code, const std::string& msg) const {
    throw Error(code, msg, pos(t));
  }

  void expect(Tok type, const char* msg) {
    if (peek().type != type) fail(peek(), ErrorCode::SyntaxError, msg);
    advance();
  }

  void lex() {
    const std::string& s = src_.text;
    std::size_t i = 0;
    while (i < s.size()) {
      const auto c = static_cast<unsigned char>(s[i]);
      const std::size_t col = i + 1;
      if (c >= 0x80) {
        throw Error(ErrorCode::SyntaxError, "non-ASCII character",
                    {src_.origin.origin, src_.origin.line, src_.origin.column + col - 1});
      }
      if (c == '#') break;
      if (std::isspace(c)) {
        ++i;
        continue;
      }
      if (std::isalpha(c)) {
        std::size_t j = i;
        while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
        toks_.push_back({Tok::Ident, s.substr(i, j - i), col});
        i = j;
        continue;
      }
      if (std::isdigit(c)) {
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        toks_.push_back({Tok::Number, s.substr(i, j - i), col});
        i = j;
        continue;
      }
      Tok t;
      switch (c) {
        case '=': t = Tok::Equals; break;
        case '+': t = Tok::Plus; break;
        case '*': t = Tok::Star; break;
        case '(': t = Tok::LParen; break;
        case ')': t = Tok::RParen; break;
        case ',': t = Tok::Comma; break;
        case ':': t = Tok::Colon; break;
        default:
          throw Error(ErrorCode::SyntaxError, std::string("unexpected character '") + s[i] + "'",
                      {src_.origin.origin, src_.origin.line, src_.origin.column + col - 1});
      }
      toks_.push_back({t, std::string(1, s[i]), col});
      ++i;
    }
    toks_.push_back({Tok::End, "end of input", s.size() + 1});
  }

  SpecNode expr() {
    std::vector<SpecNode> terms;
    const SourcePosition start = pos(peek());
    terms.push_back(term());
    while (peek().type == Tok::Plus) {
      advance();
      terms.push_back(term());
    }
    if (terms.size() == 1) return std::move(terms.front());
    SpecNode n = SpecNode::make_union(std::move(terms));
    n.position = start;
    return n;
  }

  SpecNode term() {
    const Token& t = peek();
    if (t.type == Tok::Plus || t.type == Tok::RParen || t.type == Tok::End)
      fail(t, ErrorCode::EmptyAlternative, "empty alternative");
    std::vector<SpecNode> factors;
    const SourcePosition start = pos(t);
    factors.push_back(factor());
    while (peek().type == Tok::Star) {
      advance();
      factors.push_back(factor());
    }
    if (factors.size() == 1) return std::move(factors.front());
    SpecNode n = SpecNode::product(std::move(factors));
    n.position = start;
    return n;
  }

  SpecNode factor() {
    const Token t = peek();
    switch (t.type) {
      case Tok::LParen: {
        advance();
        SpecNode inner = expr();
        expect(Tok::RParen, "expected ')'");
        return inner;
      }
      case Tok::Ident: {
        const std::string kw = lower(t.text);
        advance();
        if (kw == "atom") return atom_decl(t);
        if (kw == "seq") {
          expect(Tok::LParen, "expected '(' after seq");
          SpecNode inner = expr();
          expect(Tok::RParen, "expected ')'");
          SpecNode n = SpecNode::seq(std::move(inner));
          n.position = pos(t);
          return n;
        }
        SpecNode n = SpecNode::class_ref(t.text);
        n.position = pos(t);
        return n;
      }
      default:
        fail(t, ErrorCode::SyntaxError, "expected a factor, found '" + t.text + "'");
    }
  }

  SpecNode atom_decl(const Token& kw) {
    expect(Tok::LParen, "expected '(' after atom");
    AtomSize size;
    std::set<std::string> seen;
    bool positive = false;
    for (;;) {
      const Token var = peek();
      if (var.type != Tok::Ident) fail(var, ErrorCode::SyntaxError, "expected variable name");
      if (is_reserved_word(var.text))
        fail(var, ErrorCode::ReservedName, "'" + var.text + "' is a reserved word");
      if (!seen.insert(var.text).second)
        fail(var, ErrorCode::SyntaxError, "variable '" + var.text + "' repeated in atom");
      advance();
      expect(Tok::Colon, "expected ':'");
      const Token num = peek();
      if (num.type != Tok::Number) fail(num, ErrorCode::SyntaxError, "expected nonnegative integer");
      if (num.text.size() > 15) fail(num, ErrorCode::SyntaxError, "atom size too large");
      const std::int64_t value = std::stoll(num.text);
      positive = positive || value > 0;
      size.emplace_back(var.text, value);
      advance();
      if (peek().type == Tok::Comma) {
        advance();
        continue;
      }
      expect(Tok::RParen, "expected ',' or ')'");
      break;
    }
    if (!positive) fail(kw, ErrorCode::SyntaxError, "atom size must not be all zero");
    SpecNode n = SpecNode::atom("", std::move(size), false);
    n.name = to_text(n);
    n.position = pos(kw);
    return n;
  }

  const EquationSource& src_;
  std::vector<Token> toks_;
  std::size_t at_ = 0;
};

bool is_implicit_atom_name(std::string_view name) {
  return name.size() == 1 && std::islower(static_cast<unsigned char>(name[0]));
}

void resolve(SpecNode& node, const std::set<std::string>& defined) {
  if (node.kind == NodeKind::ClassRef && !defined.count(node.name) && is_implicit_atom_name(node.name)) {
    SourcePosition p = node.position;
    node = SpecNode::atom(node.name, {{node.name, 1}}, true);
    node.position = std::move(p);
    return;
  }
  for (auto& c : node.children) resolve(c, defined);
}

}  // namespace

bool is_reserved_word(std::string_view word) noexcept {
  const std::string w = lower(word);
  return w == "atom" || w == "seq";
}

Specification parse_specification(const std::vector<EquationSource>& sources) {
  Specification spec;
  std::set<std::string> defined;
  for (const auto& src : sources) {
    Parser parser(src);
    Equation eq = parser.equation();
    if (!defined.insert(eq.name).second)
      throw Error(ErrorCode::DuplicateDefinition, "class '" + eq.name + "' defined twice", eq.position);
    spec.equations.push_back(std::move(eq));
  }
  if (spec.equations.empty())
    throw Error(ErrorCode::SyntaxError, "specification contains no equations");
  for (auto& eq : spec.equations) resolve(eq.rhs, defined);
  return spec;
}

std::vector<EquationSource> split_spec_text(std::string_view text, std::string_view origin) {
  std::vector<EquationSource> out;
  std::size_t line = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const auto hash = raw.find('#');
    std::string_view body = raw.substr(0, hash);
    if (body.find_first_not_of(" \t") != std::string_view::npos)
      out.push_back({std::string(raw), {std::string(origin), line, 1}});
    ++line;
    start = end + 1;
  }
  return out;
}

namespace {

void print(const SpecNode& node, std::string& out, bool wrap_compound) {
  switch (node.kind) {
    case NodeKind::Atom:
      if (node.implicit_atom) {
        out += node.name;
      } else {
        out += "atom(";
        for (std::size_t i = 0; i < node.atom_size.size(); ++i) {
          if (i) out += ", ";
          out += node.atom_size[i].first + ": " + std::to_string(node.atom_size[i].second);
        }
        out += ")";
      }
      return;
    case NodeKind::ClassRef:
      out += node.name;
      return;
    case NodeKind::Seq:
      out += "Seq(";
      print(node.children[0], out, false);
      out += ")";
      return;
    case NodeKind::Union:
    case NodeKind::Product: {
      const bool is_union = node.kind == NodeKind::Union;
      if (wrap_compound) out += "(";
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += is_union ? " + " : " * ";
        const auto& c = node.children[i];
        // Nested compounds of the same kind, and unions inside products,
        // need parentheses to keep their tree shape.
        const bool wrap = c.kind == node.kind || (!is_union && c.kind == NodeKind::Union);
        print(c, out, wrap);
      }
      if (wrap_compound) out += ")";
      return;
    }
  }
}

}  // namespace

std::string to_text(const SpecNode& node) {
  std::string out;
  print(node, out, false);
  return out;
}

std::string to_text(const Specification& spec) {
  std::string out;
  for (const auto& eq : spec.equations) {
    out += eq.name + " = " + to_text(eq.rhs) + "\n";
  }
  return out;
}

}  // namespace combkit
