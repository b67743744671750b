#pragma once

// The group-definition language (.grp files).
//
//   file    := "tree" "degree" INT stmt*
//   stmt    := "gen" ID "=" elem | "sub" ID "=" subexpr
//   elem    := term ("*" term)*
//   term    := atom ("^" (["-"] INT | atom))?
//   atom    := "1" | ID | "[" elem "," elem "]"
//            | "(" elem ("," elem)* ")" ("@" cycles)? | "@" cycles | "(" elem ")"
//   cycles  := ("(" INT+ ")")+
//   subexpr := "ncl" "(" elems ")" | "gens" "(" elems ")" | "derived" "(" subexpr ")"
//            | "gamma" "(" subexpr "," INT ")" | "join" "(" subexpr "," subexpr ")"
//            | "G" | "stab" "(" INT ")" | "rist" "(" [INT ("," INT)*] ")"
//            | "ristlevel" "(" INT ")" | ID
//   elems   := [elem ("," elem)*]
//
// '#' starts a comment. A bare ID in a subgroup expression names an earlier
// `sub`. Generators may refer to each other (and themselves) inside tuple
// entries; that is how infinite-order automorphisms are defined.

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "wreath/error.hpp"
#include "wreath/mealy.hpp"
#include "wreath/permutation.hpp"
#include "wreath/vertex.hpp"

namespace wreath {

struct SourcePos {
  std::size_t line = 0;
  std::size_t column = 0;
};

struct ElemExpr;
using ElemPtr = std::shared_ptr<const ElemExpr>;

struct ElemExpr {
  enum class Kind { one, id, product, power, commutator, conjugate, tuple, rooted };
  Kind kind = Kind::one;
  std::string name;            ///< id
  std::vector<ElemPtr> items;  ///< product factors; power base; [x,y]; x^g as {x,g}; tuple entries
  long long exponent = 0;      ///< power
  Permutation root;            ///< tuple and rooted (identity when absent)
  SourcePos pos;
};

struct SubExpr;
using SubPtr = std::shared_ptr<const SubExpr>;

struct SubExpr {
  enum class Kind { gens, ncl, derived, gamma, join, whole, stab, rist, rist_level, ref };
  Kind kind = Kind::whole;
  std::vector<ElemPtr> elems;  ///< gens, ncl
  std::vector<SubPtr> subs;    ///< derived, gamma, join
  std::size_t n = 0;           ///< gamma index, stab / ristlevel level
  Vertex vertex;               ///< rist
  std::string name;            ///< ref
  SourcePos pos;
};

struct GenDecl {
  std::string name;
  ElemPtr body;
  SourcePos pos;
};

struct SubDecl {
  std::string name;
  SubPtr body;
  SourcePos pos;
};

struct GroupDefinition {
  std::size_t degree = 2;
  std::vector<GenDecl> generators;
  std::vector<SubDecl> subgroups;
  std::string source_hash;  ///< SHA-256 of the parsed text

  const GenDecl* find_generator(std::string_view name) const {
    for (const GenDecl& g : generators) {
      if (g.name == name) {
        return &g;
      }
    }
    return nullptr;
  }
  const SubDecl* find_subgroup(std::string_view name) const {
    for (const SubDecl& s : subgroups) {
      if (s.name == name) {
        return &s;
      }
    }
    return nullptr;
  }
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural equality (positions ignored)

inline bool same(const ElemExpr& a, const ElemExpr& b) {
  if (a.kind != b.kind || a.name != b.name || a.exponent != b.exponent || a.root != b.root ||
      a.items.size() != b.items.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (!same(*a.items[i], *b.items[i])) {
      return false;
    }
  }
  return true;
}

inline bool same(const SubExpr& a, const SubExpr& b) {
  if (a.kind != b.kind || a.n != b.n || a.vertex != b.vertex || a.name != b.name ||
      a.elems.size() != b.elems.size() || a.subs.size() != b.subs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.elems.size(); ++i) {
    if (!same(*a.elems[i], *b.elems[i])) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.subs.size(); ++i) {
    if (!same(*a.subs[i], *b.subs[i])) {
      return false;
    }
  }
  return true;
}

inline bool same(const GroupDefinition& a, const GroupDefinition& b) {
  if (a.degree != b.degree || a.generators.size() != b.generators.size() ||
      a.subgroups.size() != b.subgroups.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.generators.size(); ++i) {
    if (a.generators[i].name != b.generators[i].name ||
        !same(*a.generators[i].body, *b.generators[i].body)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.subgroups.size(); ++i) {
    if (a.subgroups[i].name != b.subgroups[i].name ||
        !same(*a.subgroups[i].body, *b.subgroups[i].body)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline void print_elem(const ElemExpr& e, std::string& out);

inline bool needs_parens_as_base(const ElemExpr& e) {
  return e.kind == ElemExpr::Kind::product || e.kind == ElemExpr::Kind::power ||
         e.kind == ElemExpr::Kind::conjugate || e.kind == ElemExpr::Kind::rooted ||
         (e.kind == ElemExpr::Kind::tuple && !e.root.is_identity());
}

inline void print_operand(const ElemExpr& e, std::string& out, bool wrap) {
  if (wrap) {
    out += '(';
    print_elem(e, out);
    out += ')';
  } else {
    print_elem(e, out);
  }
}

inline void print_elem(const ElemExpr& e, std::string& out) {
  using K = ElemExpr::Kind;
  switch (e.kind) {
    case K::one:
      out += '1';
      break;
    case K::id:
      out += e.name;
      break;
    case K::product:
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i > 0) {
          out += " * ";
        }
        // Nested products keep their grouping so the tree round-trips.
        print_operand(*e.items[i], out, e.items[i]->kind == K::product);
      }
      break;
    case K::power:
      print_operand(*e.items[0], out, needs_parens_as_base(*e.items[0]));
      out += '^';
      out += std::to_string(e.exponent);
      break;
    case K::conjugate:
      print_operand(*e.items[0], out, needs_parens_as_base(*e.items[0]));
      out += '^';
      // A bare "1" after '^' would read back as an exponent.
      print_operand(*e.items[1], out, needs_parens_as_base(*e.items[1]) || e.items[1]->kind == K::one);
      break;
    case K::commutator:
      out += '[';
      print_elem(*e.items[0], out);
      out += ", ";
      print_elem(*e.items[1], out);
      out += ']';
      break;
    case K::tuple:
      out += '(';
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i > 0) {
          out += ", ";
        }
        print_elem(*e.items[i], out);
      }
      out += ')';
      if (!e.root.is_identity()) {
        out += " @ " + e.root.cycles();
      }
      break;
    case K::rooted:
      out += "@ " + e.root.cycles();
      break;
  }
}

inline void print_sub(const SubExpr& s, std::string& out) {
  using K = SubExpr::Kind;
  auto elems = [&](const char* head) {
    out += head;
    out += '(';
    for (std::size_t i = 0; i < s.elems.size(); ++i) {
      if (i > 0) {
        out += ", ";
      }
      print_elem(*s.elems[i], out);
    }
    out += ')';
  };
  switch (s.kind) {
    case K::gens:
      elems("gens");
      break;
    case K::ncl:
      elems("ncl");
      break;
    case K::derived:
      out += "derived(";
      print_sub(*s.subs[0], out);
      out += ')';
      break;
    case K::gamma:
      out += "gamma(";
      print_sub(*s.subs[0], out);
      out += ", " + std::to_string(s.n) + ")";
      break;
    case K::join:
      out += "join(";
      print_sub(*s.subs[0], out);
      out += ", ";
      print_sub(*s.subs[1], out);
      out += ')';
      break;
    case K::whole:
      out += 'G';
      break;
    case K::stab:
      out += "stab(" + std::to_string(s.n) + ")";
      break;
    case K::rist: {
      out += "rist(";
      for (std::size_t i = 0; i < s.vertex.path.size(); ++i) {
        if (i > 0) {
          out += ", ";
        }
        out += std::to_string(s.vertex.path[i]);
      }
      out += ')';
      break;
    }
    case K::rist_level:
      out += "ristlevel(" + std::to_string(s.n) + ")";
      break;
    case K::ref:
      out += s.name;
      break;
  }
}

}  // namespace detail

inline std::string to_string(const ElemExpr& e) {
  std::string out;
  detail::print_elem(e, out);
  return out;
}

inline std::string to_string(const SubExpr& s) {
  std::string out;
  detail::print_sub(s, out);
  return out;
}

/// Canonical text; parse(pretty_print(d)) is structurally equal to d.
inline std::string pretty_print(const GroupDefinition& d) {
  std::string out = "tree degree " + std::to_string(d.degree) + "\n";
  for (const GenDecl& g : d.generators) {
    out += "gen " + g.name + " = " + to_string(*g.body) + "\n";
  }
  for (const SubDecl& s : d.subgroups) {
    out += "sub " + s.name + " = " + to_string(*s.body) + "\n";
  }
  return out;
}

/// Hash of the canonical text: equal for definitions that differ only in
/// layout or comments, different as soon as a generator or subgroup changes.
inline std::string content_hash(const GroupDefinition& d) { return sha256_hex(pretty_print(d)); }

// ---------------------------------------------------------------------------
// Lexer and parser

namespace detail {

struct Token {
  enum class Kind { ident, integer, symbol, end };
  Kind kind = Kind::end;
  std::string text;
  SourcePos pos;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1;
  std::size_t col = 1;
  std::size_t i = 0;
  auto advance = [&] {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') {
        advance();
      }
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance();
      continue;
    }
    Token t;
    t.pos = {line, col};
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalpha(uc) || c == '_') {
      t.kind = Token::Kind::ident;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        t.text += src[i];
        advance();
      }
    } else if (std::isdigit(uc)) {
      t.kind = Token::Kind::integer;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        t.text += src[i];
        advance();
      }
      if (t.text.size() > 18) {
        throw ParseError(t.pos.line, t.pos.column, "integer '" + t.text + "' out of range");
      }
    } else if (std::string_view("=*^[](),@-").find(c) != std::string_view::npos) {
      t.kind = Token::Kind::symbol;
      t.text = std::string(1, c);
      advance();
    } else {
      static const char* hex = "0123456789abcdef";
      std::string shown = std::isprint(uc) ? "'" + std::string(1, c) + "'"
                                           : std::string("byte 0x") + hex[uc >> 4] + hex[uc & 15];
      throw ParseError(line, col, "unexpected character " + shown);
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::string_view src, std::size_t degree) : tokens_(lex(src)), degree_(degree) {}

  GroupDefinition parse_file() {
    expect_word("tree");
    expect_word("degree");
    const Token& dt = peek();
    std::size_t d = parse_uint("tree degree");
    if (d < 2 || d > 64) {
      fail(dt, "tree degree must be between 2 and 64");
    }
    degree_ = d;
    GroupDefinition def;
    def.degree = d;
    std::set<std::string> gen_names;
    std::set<std::string> sub_names;
    while (peek().kind != Token::Kind::end) {
      const Token& kw = peek();
      if (is_word("gen")) {
        next();
        const Token& name = expect_ident();
        check_declarable(name);
        if (!gen_names.insert(name.text).second) {
          fail(name, "generator '" + name.text + "' declared twice");
        }
        expect_symbol("=");
        ElemPtr body = parse_elem();
        def.generators.push_back(GenDecl{name.text, body, name.pos});
      } else if (is_word("sub")) {
        next();
        const Token& name = expect_ident();
        check_declarable(name);
        if (sub_keywords().count(name.text) != 0) {
          fail(name, "'" + name.text + "' is reserved in subgroup expressions");
        }
        if (!sub_names.insert(name.text).second) {
          fail(name, "subgroup '" + name.text + "' declared twice");
        }
        expect_symbol("=");
        SubPtr body = parse_sub(&sub_names, name.text);
        def.subgroups.push_back(SubDecl{name.text, body, name.pos});
      } else {
        fail(kw, "expected 'gen' or 'sub', found " + describe(kw));
      }
    }
    return def;
  }

  ElemPtr parse_standalone_elem() {
    ElemPtr e = parse_elem();
    if (peek().kind != Token::Kind::end) {
      fail(peek(), "unexpected " + describe(peek()) + " after expression");
    }
    return e;
  }

  SubPtr parse_standalone_sub(const std::set<std::string>* known) {
    SubPtr s = parse_sub(known, "");
    if (peek().kind != Token::Kind::end) {
      fail(peek(), "unexpected " + describe(peek()) + " after expression");
    }
    return s;
  }

 private:
  static const std::set<std::string>& sub_keywords() {
    static const std::set<std::string> k{"ncl",  "gens", "derived", "gamma",    "join",
                                         "G",    "stab", "rist",    "ristlevel"};
    return k;
  }

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw ParseError(t.pos.line, t.pos.column, msg);
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Token::Kind::end:
        return "end of input";
      case Token::Kind::integer:
        return "integer " + t.text;
      case Token::Kind::ident:
        return "identifier '" + t.text + "'";
      case Token::Kind::symbol:
        return "'" + t.text + "'";
    }
    return "token";
  }

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = std::min(pos_ + k, tokens_.size() - 1);
    return tokens_[i];
  }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) {
      ++pos_;
    }
    return t;
  }
  bool is_symbol(const char* s, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::symbol && peek(k).text == s;
  }
  bool is_word(const char* s) const { return peek().kind == Token::Kind::ident && peek().text == s; }

  void expect_symbol(const char* s) {
    if (!is_symbol(s)) {
      fail(peek(), std::string("expected '") + s + "', found " + describe(peek()));
    }
    next();
  }
  void expect_word(const char* s) {
    if (!is_word(s)) {
      fail(peek(), std::string("expected '") + s + "', found " + describe(peek()));
    }
    next();
  }
  const Token& expect_ident() {
    if (peek().kind != Token::Kind::ident) {
      fail(peek(), "expected an identifier, found " + describe(peek()));
    }
    return next();
  }
  std::size_t parse_uint(const char* what) {
    if (peek().kind != Token::Kind::integer) {
      fail(peek(), std::string("expected an integer for ") + what + ", found " + describe(peek()));
    }
    return static_cast<std::size_t>(std::stoull(next().text));
  }

  void check_declarable(const Token& name) {
    static const std::set<std::string> reserved{"tree", "degree", "gen", "sub"};
    if (reserved.count(name.text) != 0) {
      fail(name, "'" + name.text + "' is a reserved word");
    }
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > 200) {
        fail(p_.peek(), "expression nested too deeply");
      }
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  ElemPtr parse_elem() {
    DepthGuard guard(*this);
    const SourcePos start = peek().pos;
    std::vector<ElemPtr> terms{parse_term()};
    while (is_symbol("*")) {
      next();
      terms.push_back(parse_term());
    }
    if (terms.size() == 1) {
      return terms.front();
    }
    auto e = std::make_shared<ElemExpr>();
    e->kind = ElemExpr::Kind::product;
    e->items = std::move(terms);
    e->pos = start;
    return e;
  }

  ElemPtr parse_term() {
    const SourcePos start = peek().pos;
    ElemPtr base = parse_atom();
    if (!is_symbol("^")) {
      return base;
    }
    next();
    auto e = std::make_shared<ElemExpr>();
    e->pos = start;
    if (is_symbol("-") || peek().kind == Token::Kind::integer) {
      bool negative = false;
      if (is_symbol("-")) {
        next();
        negative = true;
      }
      if (peek().kind != Token::Kind::integer) {
        fail(peek(), "expected an integer exponent, found " + describe(peek()));
      }
      long long v = std::stoll(next().text);
      e->kind = ElemExpr::Kind::power;
      e->exponent = negative ? -v : v;
      e->items = {base};
      return e;
    }
    e->kind = ElemExpr::Kind::conjugate;
    e->items = {base, parse_atom()};
    return e;
  }

  Permutation parse_cycles() {
    const Token& first = peek();
    if (!is_symbol("(") || peek(1).kind != Token::Kind::integer) {
      fail(first, "expected a cycle such as (1 2) after '@', found " + describe(first));
    }
    std::vector<Point> images(degree_);
    for (std::size_t i = 0; i < degree_; ++i) {
      images[i] = static_cast<Point>(i);
    }
    std::vector<bool> used(degree_, false);
    while (is_symbol("(") && peek(1).kind == Token::Kind::integer) {
      next();
      std::vector<Point> cycle;
      while (peek().kind == Token::Kind::integer) {
        const Token& t = next();
        std::size_t v = std::stoull(t.text);
        if (v < 1 || v > degree_) {
          fail(t, "cycle point " + t.text + " outside 1.." + std::to_string(degree_));
        }
        if (used[v - 1]) {
          fail(t, "cycle point " + t.text + " repeated");
        }
        used[v - 1] = true;
        cycle.push_back(static_cast<Point>(v - 1));
      }
      expect_symbol(")");
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        images[cycle[k]] = cycle[(k + 1) % cycle.size()];
      }
    }
    return Permutation(std::move(images));
  }

  ElemPtr parse_atom() {
    DepthGuard guard(*this);
    const Token& t = peek();
    auto e = std::make_shared<ElemExpr>();
    e->pos = t.pos;
    e->root = Permutation::identity(degree_);
    if (t.kind == Token::Kind::integer) {
      if (t.text != "1") {
        fail(t, "only the integer 1 (the identity) can be used as an element");
      }
      next();
      e->kind = ElemExpr::Kind::one;
      return e;
    }
    if (t.kind == Token::Kind::ident) {
      if (t.text == "tree" || t.text == "degree" || t.text == "gen" || t.text == "sub") {
        fail(t, "expected an element, found reserved word '" + t.text + "'");
      }
      next();
      e->kind = ElemExpr::Kind::id;
      e->name = t.text;
      return e;
    }
    if (is_symbol("[")) {
      next();
      ElemPtr x = parse_elem();
      expect_symbol(",");
      ElemPtr y = parse_elem();
      expect_symbol("]");
      e->kind = ElemExpr::Kind::commutator;
      e->items = {x, y};
      return e;
    }
    if (is_symbol("@")) {
      next();
      e->kind = ElemExpr::Kind::rooted;
      e->root = parse_cycles();
      return e;
    }
    if (is_symbol("(")) {
      next();
      std::vector<ElemPtr> items{parse_elem()};
      while (is_symbol(",")) {
        next();
        items.push_back(parse_elem());
      }
      expect_symbol(")");
      if (items.size() == 1 && !is_symbol("@")) {
        return items.front();
      }
      if (items.size() != degree_) {
        fail(t, "tuple has " + std::to_string(items.size()) + " entries but the tree degree is " +
                    std::to_string(degree_));
      }
      e->kind = ElemExpr::Kind::tuple;
      e->items = std::move(items);
      if (is_symbol("@")) {
        next();
        e->root = parse_cycles();
      }
      return e;
    }
    fail(t, "expected an element, found " + describe(t));
  }

  std::vector<ElemPtr> parse_elem_list() {
    std::vector<ElemPtr> out;
    expect_symbol("(");
    if (is_symbol(")")) {
      next();
      return out;
    }
    out.push_back(parse_elem());
    while (is_symbol(",")) {
      next();
      out.push_back(parse_elem());
    }
    expect_symbol(")");
    return out;
  }

  SubPtr parse_sub(const std::set<std::string>* known, const std::string& self) {
    DepthGuard guard(*this);
    const Token& t = peek();
    auto s = std::make_shared<SubExpr>();
    s->pos = t.pos;
    if (t.kind != Token::Kind::ident) {
      fail(t, "expected a subgroup expression, found " + describe(t));
    }
    next();
    const std::string& w = t.text;
    if (w == "G") {
      s->kind = SubExpr::Kind::whole;
    } else if (w == "gens" || w == "ncl") {
      s->kind = w == "gens" ? SubExpr::Kind::gens : SubExpr::Kind::ncl;
      s->elems = parse_elem_list();
    } else if (w == "derived") {
      s->kind = SubExpr::Kind::derived;
      expect_symbol("(");
      s->subs = {parse_sub(known, self)};
      expect_symbol(")");
    } else if (w == "gamma") {
      s->kind = SubExpr::Kind::gamma;
      expect_symbol("(");
      s->subs = {parse_sub(known, self)};
      expect_symbol(",");
      const Token& it = peek();
      s->n = parse_uint("gamma index");
      if (s->n < 1) {
        fail(it, "gamma index must be at least 1");
      }
      expect_symbol(")");
    } else if (w == "join") {
      s->kind = SubExpr::Kind::join;
      expect_symbol("(");
      SubPtr a = parse_sub(known, self);
      expect_symbol(",");
      SubPtr b = parse_sub(known, self);
      expect_symbol(")");
      s->subs = {a, b};
    } else if (w == "stab" || w == "ristlevel") {
      s->kind = w == "stab" ? SubExpr::Kind::stab : SubExpr::Kind::rist_level;
      expect_symbol("(");
      s->n = parse_uint("level");
      expect_symbol(")");
    } else if (w == "rist") {
      s->kind = SubExpr::Kind::rist;
      expect_symbol("(");
      if (!is_symbol(")")) {
        for (;;) {
          const Token& it = peek();
          std::size_t x = parse_uint("vertex entry");
          if (x < 1 || x > degree_) {
            fail(it, "vertex entry " + it.text + " outside 1.." + std::to_string(degree_));
          }
          s->vertex.path.push_back(x);
          if (!is_symbol(",")) {
            break;
          }
          next();
        }
      }
      expect_symbol(")");
    } else {
      if (w == self) {
        fail(t, "subgroup '" + w + "' refers to itself");
      }
      if (known != nullptr && known->count(w) == 0) {
        fail(t, "unknown subgroup '" + w + "'");
      }
      s->kind = SubExpr::Kind::ref;
      s->name = w;
    }
    return s;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t degree_;
  int depth_ = 0;
};

inline void check_elem_names(const ElemExpr& e, const GroupDefinition& def) {
  if (e.kind == ElemExpr::Kind::id && def.find_generator(e.name) == nullptr) {
    throw ParseError(e.pos.line, e.pos.column, "unknown identifier '" + e.name + "'");
  }
  for (const ElemPtr& x : e.items) {
    check_elem_names(*x, def);
  }
}

inline void check_sub_names(const SubExpr& s, const GroupDefinition& def) {
  for (const ElemPtr& e : s.elems) {
    check_elem_names(*e, def);
  }
  for (const SubPtr& x : s.subs) {
    check_sub_names(*x, def);
  }
}

/// Names a generator body uses outside tuple entries; a cycle among these is
/// an unfounded definition.
inline void direct_refs(const ElemExpr& e, std::set<std::string>& out) {
  if (e.kind == ElemExpr::Kind::tuple) {
    return;
  }
  if (e.kind == ElemExpr::Kind::id) {
    out.insert(e.name);
  }
  for (const ElemPtr& x : e.items) {
    direct_refs(*x, out);
  }
}

inline void check_founded(const GroupDefinition& def) {
  std::map<std::string, std::set<std::string>> refs;
  for (const GenDecl& g : def.generators) {
    direct_refs(*g.body, refs[g.name]);
  }
  std::map<std::string, int> state;  // 0 new, 1 active, 2 done
  std::function<void(const GenDecl&)> visit = [&](const GenDecl& g) {
    state[g.name] = 1;
    for (const std::string& r : refs[g.name]) {
      if (state[r] == 1) {
        throw ParseError(g.pos.line, g.pos.column,
                         "generator '" + g.name +
                             "' is defined in terms of itself outside a tuple (recursion must go "
                             "through sections)");
      }
      if (state[r] == 0) {
        visit(*def.find_generator(r));
      }
    }
    state[g.name] = 2;
  };
  for (const GenDecl& g : def.generators) {
    if (state[g.name] == 0) {
      visit(g);
    }
  }
}

}  // namespace detail

/// Parses a .grp document; errors carry line:column.
inline GroupDefinition parse(std::string_view text) {
  detail::Parser p(text, 2);
  GroupDefinition def = p.parse_file();
  for (const GenDecl& g : def.generators) {
    detail::check_elem_names(*g.body, def);
  }
  for (const SubDecl& s : def.subgroups) {
    detail::check_sub_names(*s.body, def);
  }
  detail::check_founded(def);
  def.source_hash = sha256_hex(text);
  return def;
}

/// Parses one element expression against a definition's generators.
inline ElemPtr parse_element(std::string_view text, const GroupDefinition& def) {
  detail::Parser p(text, def.degree);
  ElemPtr e = p.parse_standalone_elem();
  detail::check_elem_names(*e, def);
  return e;
}

/// Parses one subgroup expression; bare names refer to the definition's subs.
inline SubPtr parse_subgroup(std::string_view text, const GroupDefinition& def) {
  std::set<std::string> known;
  for (const SubDecl& s : def.subgroups) {
    known.insert(s.name);
  }
  detail::Parser p(text, def.degree);
  SubPtr s = p.parse_standalone_sub(&known);
  detail::check_sub_names(*s, def);
  return s;
}

// ---------------------------------------------------------------------------
// Resolution into one Mealy machine

/// Machine built from a definition. Before minimization its states are the
/// reduced words in the generators (and their inverses) reached as sections;
/// `raw_state_count` records that size.
struct Resolution {
  std::size_t degree = 2;
  std::size_t raw_state_count = 0;
  std::shared_ptr<const MealyMachine> raw;
  std::map<std::string, Element> elements;  ///< generator name -> minimized element

  const Element& at(const std::string& name) const {
    auto it = elements.find(name);
    if (it == elements.end()) {
      throw Error("unknown generator '" + name + "'");
    }
    return it->second;
  }
};

namespace detail {

class WordResolver {
 public:
  WordResolver(const GroupDefinition& def, const Limits& limits) : def_(def), limits_(limits) {}

  Resolution run() {
    const std::size_t d = def_.degree;
    for (const GenDecl& g : def_.generators) {
      if (g.body->kind == ElemExpr::Kind::tuple || g.body->kind == ElemExpr::Kind::rooted) {
        letter_of_[g.name] = new_letter();
      }
    }
    for (const GenDecl& g : def_.generators) {
      auto it = letter_of_.find(g.name);
      if (it != letter_of_.end()) {
        fill_letter(it->second, *g.body);
      }
    }
    // Words for every generator, then close under sections.
    std::map<std::string, Word> gen_words;
    for (const GenDecl& g : def_.generators) {
      gen_words[g.name] = word_of_name(g.name);
    }
    MealyMachine m(d);
    std::map<Word, StateId> ids;
    std::vector<Word> pending;
    ids[Word{}] = 0;
    auto intern = [&](const Word& w) {
      auto [it, inserted] = ids.emplace(w, static_cast<StateId>(ids.size()));
      if (inserted) {
        if (ids.size() > limits_.state_cap) {
          throw StateCapExceeded("resolving generators needs more than " +
                                 std::to_string(limits_.state_cap) + " states");
        }
        pending.push_back(w);
      }
      return it->second;
    };
    for (const GenDecl& g : def_.generators) {
      intern(gen_words[g.name]);
      intern(invert(gen_words[g.name]));
    }
    std::vector<std::pair<StateId, MealyState>> built;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const Word w = pending[i];
      MealyState s{Permutation::identity(d), std::vector<StateId>(d, 0)};
      std::vector<Word> sections(d);
      for (int code : w) {
        const Letter& l = letters_[static_cast<std::size_t>(code >> 1)];
        const bool inv = (code & 1) != 0;
        const Permutation& sigma = inv ? l.root_inverse : l.root;
        // section of (word so far) * letter at child x: old section at x, then
        // the letter's section at the image of x.
        for (std::size_t x = 0; x < d; ++x) {
          Point at = s.root[static_cast<Point>(x)];
          const Word& piece = inv ? l.inverse_sections[at] : l.sections[at];
          append(sections[x], piece);
        }
        s.root = s.root * sigma;
      }
      for (std::size_t x = 0; x < d; ++x) {
        s.transitions[x] = intern(sections[x]);
      }
      built.emplace_back(ids[w], std::move(s));
    }
    std::vector<MealyState> states(ids.size(), MealyState{Permutation::identity(d), std::vector<StateId>(d, 0)});
    for (auto& [id, s] : built) {
      states[id] = std::move(s);
    }
    Resolution r;
    r.degree = d;
    r.raw_state_count = states.size();
    auto raw = std::make_shared<const MealyMachine>(d, std::move(states));
    r.raw = raw;
    for (const GenDecl& g : def_.generators) {
      r.elements.emplace(g.name, canonicalize(*raw, ids.at(gen_words[g.name])));
    }
    return r;
  }

 private:
  using Word = std::vector<int>;  ///< letter codes: 2*i for letter i, 2*i+1 for its inverse

  struct Letter {
    Permutation root;
    Permutation root_inverse;
    std::vector<Word> sections;          ///< indexed by child
    std::vector<Word> inverse_sections;  ///< sections of the inverse, indexed by child
  };

  static constexpr std::size_t max_word = 512;

  std::size_t new_letter() {
    letters_.emplace_back();
    return letters_.size() - 1;
  }

  void fill_letter(std::size_t idx, const ElemExpr& body) {
    const std::size_t d = def_.degree;
    std::vector<Word> sections(d);
    Permutation root = body.root;
    if (body.kind == ElemExpr::Kind::tuple) {
      for (std::size_t x = 0; x < d; ++x) {
        sections[x] = compile(*body.items[x]);
      }
    }
    Letter& l = letters_[idx];
    l.root = root;
    l.root_inverse = root.inverse();
    l.sections = sections;
    l.inverse_sections.assign(d, Word{});
    for (std::size_t x = 0; x < d; ++x) {
      // (g^-1) at child root(x) has section (g_x)^-1
      l.inverse_sections[root[static_cast<Point>(x)]] = invert(sections[x]);
    }
  }

  Word word_of_name(const std::string& name) {
    auto it = letter_of_.find(name);
    if (it != letter_of_.end()) {
      return Word{static_cast<int>(it->second << 1)};
    }
    auto memo = alias_words_.find(name);
    if (memo != alias_words_.end()) {
      return memo->second;
    }
    Word w = compile(*def_.find_generator(name)->body);
    alias_words_[name] = w;
    return w;
  }

  static Word invert(const Word& w) {
    Word out(w.rbegin(), w.rend());
    for (int& c : out) {
      c ^= 1;
    }
    return out;
  }

  void append(Word& w, const Word& tail) const {
    for (int c : tail) {
      if (!w.empty() && w.back() == (c ^ 1)) {
        w.pop_back();
      } else {
        w.push_back(c);
      }
    }
    if (w.size() > max_word) {
      throw StateCapExceeded("generator sections grow beyond " + std::to_string(max_word) +
                             " letters; the recursion may not be finite-state");
    }
  }

  Word compile(const ElemExpr& e) {
    using K = ElemExpr::Kind;
    Word out;
    switch (e.kind) {
      case K::one:
        break;
      case K::id:
        out = word_of_name(e.name);
        break;
      case K::product:
        for (const ElemPtr& x : e.items) {
          append(out, compile(*x));
        }
        break;
      case K::power: {
        Word base = compile(*e.items[0]);
        if (e.exponent < 0) {
          base = invert(base);
        }
        const unsigned long long n = e.exponent < 0 ? 0ULL - static_cast<unsigned long long>(e.exponent)
                                                    : static_cast<unsigned long long>(e.exponent);
        for (unsigned long long k = 0; k < n; ++k) {
          append(out, base);
        }
        break;
      }
      case K::commutator: {
        Word x = compile(*e.items[0]);
        Word y = compile(*e.items[1]);
        append(out, invert(x));
        append(out, invert(y));
        append(out, x);
        append(out, y);
        break;
      }
      case K::conjugate: {
        Word x = compile(*e.items[0]);
        Word g = compile(*e.items[1]);
        append(out, invert(g));
        append(out, x);
        append(out, g);
        break;
      }
      case K::tuple:
      case K::rooted: {
        std::size_t idx = new_letter();
        fill_letter(idx, e);
        out.push_back(static_cast<int>(idx << 1));
        break;
      }
    }
    return out;
  }

  const GroupDefinition& def_;
  Limits limits_;
  std::vector<Letter> letters_;
  std::map<std::string, std::size_t> letter_of_;
  std::map<std::string, Word> alias_words_;
};

}  // namespace detail

inline Resolution resolve(const GroupDefinition& def, const Limits& limits = {}) {
  return detail::WordResolver(def, limits).run();
}

/// Evaluates an element expression with wreath-core arithmetic.
inline Element compile_element(const ElemExpr& e, const Resolution& r, const Limits& limits = {}) {
  using K = ElemExpr::Kind;
  switch (e.kind) {
    case K::one:
      return Element::identity(r.degree);
    case K::id:
      return r.at(e.name);
    case K::product: {
      Element acc = compile_element(*e.items[0], r, limits);
      for (std::size_t i = 1; i < e.items.size(); ++i) {
        acc = compose(acc, compile_element(*e.items[i], r, limits), limits);
      }
      return acc;
    }
    case K::power:
      return power(compile_element(*e.items[0], r, limits), e.exponent, limits);
    case K::commutator:
      return commutator(compile_element(*e.items[0], r, limits),
                        compile_element(*e.items[1], r, limits), limits);
    case K::conjugate:
      return conjugate(compile_element(*e.items[0], r, limits),
                       compile_element(*e.items[1], r, limits), limits);
    case K::tuple: {
      std::vector<Element> sections;
      for (const ElemPtr& x : e.items) {
        sections.push_back(compile_element(*x, r, limits));
      }
      return from_sections(sections, e.root);
    }
    case K::rooted:
      return Element::rooted(e.root);
  }
  throw Error("unhandled element expression");
}

}  // namespace wreath
