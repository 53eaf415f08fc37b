#pragma once

// Intermediate language for contracts: abstract syntax, line-oriented text
// parser, canonical pretty-printer, ABI description parser, and structural
// validation. The surface format is documented in docs/formats.md.

#include "sym.hpp"
#include "word.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace casynth::ir {

// Parameter sorts. Arrays are (length, base-key) pairs whose elements live
// in memory; bool and address are words with a restricted value space.
enum class psort : std::uint8_t { boolean, word, address, word_array };

inline const char* to_string(psort s) {
  switch (s) {
    case psort::boolean: return "bool";
    case psort::word: return "word";
    case psort::address: return "address";
    case psort::word_array: return "word[]";
  }
  return "?";
}

enum class slot_sort : std::uint8_t { word, boolean, map };

inline const char* to_string(slot_sort s) {
  switch (s) {
    case slot_sort::word: return "word";
    case slot_sort::boolean: return "bool";
    case slot_sort::map: return "map";
  }
  return "?";
}

struct parse_error : std::runtime_error {
  parse_error(std::size_t line, std::size_t col, const std::string& what_arg)
      : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(col) +
                           ": " + what_arg),
        line(line), col(col) {}
  std::size_t line, col;
};

// Expression tree of the surface language. Untyped at this level; the
// evaluators coerce between word and boolean views as needed.
template <unsigned B>
struct iexpr {
  enum class kind : std::uint8_t { constant, ident, msg_sender, binop, unop };
  kind k = kind::constant;
  word<B> c;
  std::string name;            // ident
  op o = op::add;              // binop / unop (log_not)
  std::vector<iexpr<B>> kids;  // 2 for binop, 1 for unop

  static iexpr constant_of(word<B> v) { iexpr e; e.k = kind::constant; e.c = v; return e; }
  static iexpr ident_of(std::string n) { iexpr e; e.k = kind::ident; e.name = std::move(n); return e; }
  static iexpr sender() { iexpr e; e.k = kind::msg_sender; return e; }
};

// Storage access: a declared plain slot (`owner`), a map cell (`bal[x]`),
// or a register holding an already-computed location.
template <unsigned B>
struct storage_key {
  std::string base;
  std::optional<iexpr<B>> index;  // set for map access
};

// Target index of a jump to the dedicated REVERT label.
inline constexpr std::uint32_t revert_target = 0xffffffffu;

template <unsigned B>
struct stmt {
  enum class kind : std::uint8_t {
    assign, mload, mstore, sload, sstore, sha3, jump, jumpi, call, selfdestruct,
    read_balance, read_gas, read_address, read_timestamp, nop,
  };
  kind k = kind::nop;
  std::string dst;                // assign/mload/sload/sha3/call/read_*
  std::vector<iexpr<B>> ops;      // operands, see parser for layout per kind
  storage_key<B> skey;            // sload/sstore
  std::string target_label;       // jump/jumpi
  std::uint32_t target = 0;       // resolved index (revert_target for REVERT)
  std::string label;              // label attached to this statement, if any
  std::size_t line = 0;           // 1-based source line
};

template <unsigned B>
struct function_def {
  std::string name;
  bool is_public = true;
  std::vector<std::pair<std::string, psort>> params;
  std::vector<stmt<B>> body;
  std::map<std::string, std::uint32_t> labels;

  std::optional<psort> param_sort(std::string_view n) const {
    for (const auto& [pn, ps] : params)
      if (pn == n) return ps;
    return std::nullopt;
  }
};

template <unsigned B>
struct slot_decl {
  std::string name;
  slot_sort srt = slot_sort::word;
  word<B> init;
};

template <unsigned B>
struct contract {
  std::string name;
  std::vector<slot_decl<B>> slots;
  std::vector<function_def<B>> functions;

  const slot_decl<B>* find_slot(std::string_view n) const {
    for (const auto& s : slots)
      if (s.name == n) return &s;
    return nullptr;
  }
  const function_def<B>* find_function(std::string_view n) const {
    for (const auto& f : functions)
      if (f.name == n) return &f;
    return nullptr;
  }
};

struct abi_component {
  std::string fn;
  std::vector<psort> sorts;
};

struct abi_spec {
  std::vector<abi_component> components;
};

// ---------------------------------------------------------------------------
// Tokenizer. Identifiers may contain dots (msg.sender, vesting.amount) and
// the pseudo-registers name.len / name.ptr of array parameters.

namespace detail {

struct token {
  enum class kind : std::uint8_t { ident, number, symbol, end };
  kind k = kind::end;
  std::string text;
  std::size_t line = 0, col = 0;
};

class lexer {
 public:
  explicit lexer(std::string_view text) : text_(text) { advance(); }

  const token& peek() const { return cur_; }

  token next() {
    token t = cur_;
    advance();
    return t;
  }

  bool at_end() const { return cur_.k == token::kind::end; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error(cur_.line ? cur_.line : line_, cur_.col ? cur_.col : col_, msg);
  }

 private:
  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) {
    return ident_start(c) || (c >= '0' && c <= '9') || c == '.';
  }

  void advance() {
    // skip whitespace and comments
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++pos_; ++line_; col_ = 1;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_; ++col_;
      } else {
        break;
      }
    }
    cur_ = token{};
    cur_.line = line_;
    cur_.col = col_;
    if (pos_ >= text_.size()) { cur_.k = token::kind::end; return; }

    char c = text_[pos_];
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) { ++pos_; ++col_; }
      cur_.k = token::kind::ident;
      cur_.text = std::string(text_.substr(start, pos_ - start));
      return;
    }
    if (c >= '0' && c <= '9') {
      std::size_t start = pos_;
      bool hex = pos_ + 1 < text_.size() && c == '0' &&
                 (text_[pos_ + 1] == 'x' || text_[pos_ + 1] == 'X');
      if (hex) { pos_ += 2; col_ += 2; }
      auto digit = [&](char d) {
        if (d >= '0' && d <= '9') return true;
        if (!hex) return false;
        return (d >= 'a' && d <= 'f') || (d >= 'A' && d <= 'F');
      };
      while (pos_ < text_.size() && digit(text_[pos_])) { ++pos_; ++col_; }
      cur_.k = token::kind::number;
      cur_.text = std::string(text_.substr(start, pos_ - start));
      return;
    }
    // multi-char operators first
    static const char* two[] = {":=", "==", "!=", "<=", ">=", "&&", "||"};
    for (const char* t : two) {
      if (text_.substr(pos_, 2) == t) {
        cur_.k = token::kind::symbol;
        cur_.text = t;
        pos_ += 2; col_ += 2;
        return;
      }
    }
    static const std::string one = "{}()[]:;,=<>+-*/%&|!";
    if (one.find(c) != std::string::npos) {
      cur_.k = token::kind::symbol;
      cur_.text = std::string(1, c);
      ++pos_; ++col_;
      return;
    }
    throw parse_error(line_, col_, std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0, line_ = 1, col_ = 1;
  token cur_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser.

namespace detail {

template <unsigned B>
class parser {
 public:
  explicit parser(std::string_view text) : lx_(text) {}

  contract<B> parse() {
    expect_ident("contract");
    contract<B> c;
    c.name = expect_kind(token::kind::ident, "contract name").text;
    expect_sym("{");
    while (!is_sym("}")) {
      if (lx_.at_end()) lx_.fail("unexpected end of input, missing '}'");
      const token& t = lx_.peek();
      if (t.k != token::kind::ident) lx_.fail("expected declaration");
      if (t.text == "storage") parse_storage(c);
      else if (t.text == "public" || t.text == "private" || t.text == "fn")
        c.functions.push_back(parse_function(c));
      else lx_.fail("expected 'storage' or a function declaration, got '" + t.text + "'");
    }
    expect_sym("}");
    if (!lx_.at_end()) lx_.fail("trailing input after contract");
    return c;
  }

 private:
  void parse_storage(contract<B>& c) {
    lx_.next();  // storage
    token name = expect_kind(token::kind::ident, "slot name");
    if (c.find_slot(name.text))
      throw parse_error(name.line, name.col, "duplicate storage slot '" + name.text + "'");
    expect_sym(":");
    token srt = expect_kind(token::kind::ident, "slot sort");
    slot_decl<B> d;
    d.name = name.text;
    if (srt.text == "word") d.srt = slot_sort::word;
    else if (srt.text == "bool") d.srt = slot_sort::boolean;
    else if (srt.text == "map") d.srt = slot_sort::map;
    else throw parse_error(srt.line, srt.col, "unknown slot sort '" + srt.text + "'");
    if (is_sym("=")) {
      lx_.next();
      if (d.srt == slot_sort::map) lx_.fail("map slots take no initializer");
      d.init = parse_literal();
    }
    if (is_sym(";")) lx_.next();
    c.slots.push_back(std::move(d));
  }

  function_def<B> parse_function(const contract<B>& c) {
    function_def<B> f;
    if (lx_.peek().text == "public" || lx_.peek().text == "private") {
      f.is_public = lx_.next().text == "public";
    }
    expect_ident("fn");
    f.name = expect_kind(token::kind::ident, "function name").text;
    expect_sym("(");
    while (!is_sym(")")) {
      token pn = expect_kind(token::kind::ident, "parameter name");
      expect_sym(":");
      f.params.emplace_back(pn.text, parse_psort());
      for (const auto& [other, _] : f.params)
        if (&other != &f.params.back().first && other == pn.text)
          throw parse_error(pn.line, pn.col, "duplicate parameter '" + pn.text + "'");
      if (is_sym(",")) lx_.next();
      else break;
    }
    expect_sym(")");
    expect_sym("{");
    while (!is_sym("}")) {
      if (lx_.at_end()) lx_.fail("unexpected end of input in function body");
      parse_stmt_line(c, f);
    }
    expect_sym("}");
    if (f.body.empty()) lx_.fail("function '" + f.name + "' has an empty body");
    resolve_labels(f);
    return f;
  }

  psort parse_psort() {
    token t = expect_kind(token::kind::ident, "parameter sort");
    psort base;
    if (t.text == "bool") base = psort::boolean;
    else if (t.text == "word") base = psort::word;
    else if (t.text == "address") base = psort::address;
    else throw parse_error(t.line, t.col, "unknown parameter sort '" + t.text + "'");
    if (is_sym("[")) {
      lx_.next();
      expect_sym("]");
      if (base == psort::boolean)
        throw parse_error(t.line, t.col, "bool arrays are not supported");
      return psort::word_array;
    }
    return base;
  }

  void parse_stmt_line(const contract<B>& c, function_def<B>& f) {
    stmt<B> s;
    s.line = lx_.peek().line;

    // optional `Label:` prefix (an identifier followed by ':' that is not
    // the start of a statement keyword form)
    if (lx_.peek().k == token::kind::ident) {
      token maybe = lx_.peek();
      if (peek2_is_sym(":")) {
        lx_.next();
        lx_.next();  // ':'
        if (maybe.text == "REVERT")
          throw parse_error(maybe.line, maybe.col, "REVERT is a reserved label");
        if (f.labels.count(maybe.text))
          throw parse_error(maybe.line, maybe.col, "duplicate label '" + maybe.text + "'");
        f.labels[maybe.text] = static_cast<std::uint32_t>(f.body.size());
        s.label = maybe.text;
        s.line = lx_.peek().line;
      }
    }

    using K = typename stmt<B>::kind;
    token head = expect_kind(token::kind::ident, "statement");

    if (head.text == "jump") {
      s.k = K::jump;
      s.target_label = expect_kind(token::kind::ident, "jump target label").text;
    } else if (head.text == "jumpi") {
      s.k = K::jumpi;
      s.target_label = expect_kind(token::kind::ident, "jump target label").text;
      s.ops.push_back(parse_expr());
    } else if (head.text == "mstore") {
      s.k = K::mstore;
      s.ops.push_back(parse_atom());
      s.ops.push_back(parse_atom());
    } else if (head.text == "sstore") {
      s.k = K::sstore;
      s.skey = parse_storage_key(c, head);
      s.ops.push_back(parse_atom());
    } else if (head.text == "selfdestruct") {
      s.k = K::selfdestruct;
      s.ops.push_back(parse_atom());
    } else if (head.text == "no" || head.text == "no-op" || head.text == "nop") {
      // 'no-op' lexes as ident("no") '-' ident("op") since '-' is an operator
      if (head.text == "no") { expect_sym("-"); expect_ident("op"); }
      s.k = K::nop;
    } else {
      // assignment forms: `r := ...`
      s.dst = head.text;
      expect_sym(":=");
      const token& rhs = lx_.peek();
      if (rhs.k == token::kind::ident && rhs.text == "mload") {
        lx_.next();
        s.k = K::mload;
        s.ops.push_back(parse_atom());
      } else if (rhs.k == token::kind::ident && rhs.text == "sload") {
        lx_.next();
        s.k = K::sload;
        token keyhead = lx_.peek();
        s.skey = parse_storage_key(c, keyhead);
      } else if (rhs.k == token::kind::ident && rhs.text == "sha3") {
        lx_.next();
        s.k = K::sha3;
        s.ops.push_back(parse_atom());
        s.ops.push_back(parse_atom());
      } else if (rhs.k == token::kind::ident && rhs.text == "call") {
        lx_.next();
        s.k = K::call;
        s.ops.push_back(parse_atom());
        s.ops.push_back(parse_atom());
        s.ops.push_back(parse_atom());
      } else if (rhs.k == token::kind::ident && rhs.text == "balance") {
        lx_.next(); s.k = K::read_balance;
      } else if (rhs.k == token::kind::ident && rhs.text == "gas") {
        lx_.next(); s.k = K::read_gas;
      } else if (rhs.k == token::kind::ident && rhs.text == "address") {
        lx_.next(); s.k = K::read_address;
      } else if (rhs.k == token::kind::ident && rhs.text == "timestamp") {
        lx_.next(); s.k = K::read_timestamp;
      } else {
        s.k = K::assign;
        s.ops.push_back(parse_expr());
      }
    }
    f.body.push_back(std::move(s));
  }

  storage_key<B> parse_storage_key(const contract<B>& c, const token& ctx) {
    token base = expect_kind(token::kind::ident, "storage key");
    storage_key<B> key;
    key.base = base.text;
    if (is_sym("[")) {
      lx_.next();
      key.index = parse_atom();
      expect_sym("]");
      const slot_decl<B>* d = c.find_slot(key.base);
      if (!d || d->srt != slot_sort::map)
        throw parse_error(base.line, base.col,
                          "undeclared storage slot (map) '" + key.base + "'");
    } else {
      const slot_decl<B>* d = c.find_slot(key.base);
      if (d && d->srt == slot_sort::map)
        throw parse_error(base.line, base.col,
                          "map slot '" + key.base + "' requires an index");
      // a bare non-slot identifier is a register holding a computed location
    }
    (void)ctx;
    return key;
  }

  // Expression grammar, loosest to tightest:
  //   or: and ('||' and)*
  //   and: cmp ('&&' cmp)*
  //   cmp: sum (('=='|'!='|'<'|'<='|'>'|'>=') sum)?
  //   sum: prod (('+'|'-') prod)*
  //   prod: unary (('*'|'/'|'%'|'&'|'|') unary)*
  //   unary: '!' unary | atom | '(' or ')'
  iexpr<B> parse_expr() { return parse_or(); }

  iexpr<B> parse_or() {
    iexpr<B> e = parse_and();
    while (is_sym("||")) {
      lx_.next();
      e = binop(op::log_or, std::move(e), parse_and());
    }
    return e;
  }

  iexpr<B> parse_and() {
    iexpr<B> e = parse_cmp();
    while (is_sym("&&")) {
      lx_.next();
      e = binop(op::log_and, std::move(e), parse_cmp());
    }
    return e;
  }

  iexpr<B> parse_cmp() {
    iexpr<B> e = parse_sum();
    op o;
    if (is_sym("==")) o = op::eq;
    else if (is_sym("!=")) o = op::ne;
    else if (is_sym("<")) o = op::ult;
    else if (is_sym("<=")) o = op::ule;
    else if (is_sym(">")) o = op::ugt;
    else if (is_sym(">=")) o = op::uge;
    else return e;
    lx_.next();
    return binop(o, std::move(e), parse_sum());
  }

  iexpr<B> parse_sum() {
    iexpr<B> e = parse_prod();
    while (is_sym("+") || is_sym("-")) {
      op o = lx_.next().text == "+" ? op::add : op::sub;
      e = binop(o, std::move(e), parse_prod());
    }
    return e;
  }

  iexpr<B> parse_prod() {
    iexpr<B> e = parse_unary();
    while (is_sym("*") || is_sym("/") || is_sym("%") || is_sym("&") || is_sym("|")) {
      std::string t = lx_.next().text;
      op o = t == "*"   ? op::mul
             : t == "/" ? op::udiv
             : t == "%" ? op::umod
             : t == "&" ? op::bit_and
                        : op::bit_or;
      e = binop(o, std::move(e), parse_unary());
    }
    return e;
  }

  iexpr<B> parse_unary() {
    if (is_sym("!")) {
      lx_.next();
      iexpr<B> e;
      e.k = iexpr<B>::kind::unop;
      e.o = op::log_not;
      e.kids.push_back(parse_unary());
      return e;
    }
    if (is_sym("(")) {
      lx_.next();
      iexpr<B> e = parse_or();
      expect_sym(")");
      return e;
    }
    return parse_atom();
  }

  iexpr<B> parse_atom() {
    const token& t = lx_.peek();
    if (t.k == token::kind::number) return iexpr<B>::constant_of(parse_literal());
    if (t.k == token::kind::ident) {
      token id = lx_.next();
      if (id.text == "msg.sender") return iexpr<B>::sender();
      if (id.text == "true") return iexpr<B>::constant_of(word<B>(1));
      if (id.text == "false") return iexpr<B>::constant_of(word<B>(0));
      return iexpr<B>::ident_of(id.text);
    }
    lx_.fail("expected an operand, got '" + t.text + "'");
  }

  word<B> parse_literal() {
    token t = expect_kind(token::kind::number, "numeric literal");
    try {
      return word<B>::parse(t.text);
    } catch (const std::invalid_argument& e) {
      throw parse_error(t.line, t.col, e.what());
    }
  }

  static iexpr<B> binop(op o, iexpr<B> a, iexpr<B> b) {
    iexpr<B> e;
    e.k = iexpr<B>::kind::binop;
    e.o = o;
    e.kids.push_back(std::move(a));
    e.kids.push_back(std::move(b));
    return e;
  }

  void resolve_labels(function_def<B>& f) {
    using K = typename stmt<B>::kind;
    for (auto& s : f.body) {
      if (s.k != K::jump && s.k != K::jumpi) continue;
      if (s.target_label == "REVERT") {
        s.target = revert_target;
        continue;
      }
      auto it = f.labels.find(s.target_label);
      if (it == f.labels.end())
        throw parse_error(s.line, 1, "unresolved label '" + s.target_label +
                                         "' in function '" + f.name + "'");
      s.target = it->second;
    }
  }

  // token utilities
  bool is_sym(std::string_view s) const {
    return lx_.peek().k == token::kind::symbol && lx_.peek().text == s;
  }
  bool peek2_is_sym(std::string_view s) {
    lexer save = lx_;
    lx_.next();
    bool r = is_sym(s);
    lx_ = save;
    return r;
  }
  token expect_kind(token::kind k, const std::string& what) {
    if (lx_.peek().k != k) lx_.fail("expected " + what + ", got '" + lx_.peek().text + "'");
    return lx_.next();
  }
  void expect_sym(std::string_view s) {
    if (!is_sym(s)) lx_.fail("expected '" + std::string(s) + "', got '" + lx_.peek().text + "'");
    lx_.next();
  }
  void expect_ident(std::string_view s) {
    if (lx_.peek().k != token::kind::ident || lx_.peek().text != s)
      lx_.fail("expected '" + std::string(s) + "', got '" + lx_.peek().text + "'");
    lx_.next();
  }

  lexer lx_;
};

}  // namespace detail

template <unsigned B>
contract<B> parse_contract(std::string_view text) {
  return detail::parser<B>(text).parse();
}

// ---------------------------------------------------------------------------
// Canonical pretty-printer. print(parse(print(x))) == print(x).

namespace detail {

template <unsigned B>
std::string print_literal(const word<B>& w) {
  // small values in decimal, large in hex
  if (w < word<B>(65536)) return w.to_dec();
  return w.to_hex();
}

template <unsigned B>
void print_iexpr(const iexpr<B>& e, std::string& out) {
  using kind = typename iexpr<B>::kind;
  switch (e.k) {
    case kind::constant: out += print_literal(e.c); return;
    case kind::ident: out += e.name; return;
    case kind::msg_sender: out += "msg.sender"; return;
    case kind::unop:
      out += "!(";
      print_iexpr(e.kids[0], out);
      out += ')';
      return;
    case kind::binop:
      out += '(';
      print_iexpr(e.kids[0], out);
      out += ' ';
      out += casynth::detail::op_token(e.o);
      out += ' ';
      print_iexpr(e.kids[1], out);
      out += ')';
      return;
  }
}

template <unsigned B>
std::string print_iexpr(const iexpr<B>& e) {
  std::string out;
  print_iexpr(e, out);
  return out;
}

template <unsigned B>
void print_stmt(const stmt<B>& s, std::string& out) {
  using K = typename stmt<B>::kind;
  switch (s.k) {
    case K::assign:
      out += s.dst + " := " + print_iexpr(s.ops[0]);
      break;
    case K::mload:
      out += s.dst + " := mload " + print_iexpr(s.ops[0]);
      break;
    case K::mstore:
      out += "mstore " + print_iexpr(s.ops[0]) + " " + print_iexpr(s.ops[1]);
      break;
    case K::sload:
      out += s.dst + " := sload " + s.skey.base;
      if (s.skey.index) out += "[" + print_iexpr(*s.skey.index) + "]";
      break;
    case K::sstore:
      out += "sstore " + s.skey.base;
      if (s.skey.index) out += "[" + print_iexpr(*s.skey.index) + "]";
      out += " " + print_iexpr(s.ops[0]);
      break;
    case K::sha3:
      out += s.dst + " := sha3 " + print_iexpr(s.ops[0]) + " " + print_iexpr(s.ops[1]);
      break;
    case K::jump:
      out += "jump " + s.target_label;
      break;
    case K::jumpi:
      out += "jumpi " + s.target_label + " " + print_iexpr(s.ops[0]);
      break;
    case K::call:
      out += s.dst + " := call " + print_iexpr(s.ops[0]) + " " + print_iexpr(s.ops[1]) +
             " " + print_iexpr(s.ops[2]);
      break;
    case K::selfdestruct:
      out += "selfdestruct " + print_iexpr(s.ops[0]);
      break;
    case K::read_balance: out += s.dst + " := balance"; break;
    case K::read_gas: out += s.dst + " := gas"; break;
    case K::read_address: out += s.dst + " := address"; break;
    case K::read_timestamp: out += s.dst + " := timestamp"; break;
    case K::nop: out += "no-op"; break;
  }
}

}  // namespace detail

template <unsigned B>
std::string print_contract(const contract<B>& c) {
  std::string out = "contract " + c.name + " {\n";
  for (const auto& d : c.slots) {
    out += "  storage " + d.name + ": " + to_string(d.srt);
    if (d.srt != slot_sort::map) out += " = " + detail::print_literal(d.init);
    out += ";\n";
  }
  for (const auto& f : c.functions) {
    out += "\n  ";
    out += f.is_public ? "public" : "private";
    out += " fn " + f.name + "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i) out += ", ";
      out += f.params[i].first + ": " + to_string(f.params[i].second);
    }
    out += ") {\n";
    for (const auto& s : f.body) {
      out += "    ";
      if (!s.label.empty()) out += s.label + ": ";
      detail::print_stmt(s, out);
      out += "\n";
    }
    out += "  }\n";
  }
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// ABI parsing (JSON array of function descriptions).

inline abi_spec parse_abi(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("abi: ") + e.what());
  }
  if (!j.is_array()) throw std::runtime_error("abi: expected a JSON array");
  abi_spec spec;
  for (const auto& entry : j) {
    if (!entry.is_object()) throw std::runtime_error("abi: entry is not an object");
    if (entry.value("type", "function") != "function") continue;
    abi_component comp;
    comp.fn = entry.value("name", "");
    if (comp.fn.empty()) throw std::runtime_error("abi: function entry without a name");
    for (const auto& input : entry.value("inputs", nlohmann::json::array())) {
      std::string ty = input.value("type", "");
      if (ty == "bool") comp.sorts.push_back(psort::boolean);
      else if (ty == "uint256") comp.sorts.push_back(psort::word);
      else if (ty == "address") comp.sorts.push_back(psort::address);
      else if (ty == "address[]" || ty == "uint256[]") comp.sorts.push_back(psort::word_array);
      else throw std::runtime_error("abi: unknown type '" + ty + "' in '" + comp.fn + "'");
    }
    spec.components.push_back(std::move(comp));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Structural validation. Returns diagnostics; empty result means ok.

namespace detail {

// Identifiers read by an expression (registers and parameters alike;
// classification happens at the use site).
template <unsigned B>
void idents_of(const iexpr<B>& e, std::vector<std::string>& out) {
  using kind = typename iexpr<B>::kind;
  if (e.k == kind::ident) out.push_back(e.name);
  for (const auto& k : e.kids) idents_of(k, out);
}

template <unsigned B>
std::vector<std::string> stmt_reads(const stmt<B>& s) {
  std::vector<std::string> out;
  for (const auto& e : s.ops) idents_of(e, out);
  if ((s.k == stmt<B>::kind::sload || s.k == stmt<B>::kind::sstore)) {
    if (s.skey.index) idents_of(*s.skey.index, out);
  }
  return out;
}

}  // namespace detail

template <unsigned B>
std::vector<std::string> validate(const contract<B>& c, const abi_spec& abi) {
  std::vector<std::string> diags;
  using K = typename stmt<B>::kind;

  for (const auto& comp : abi.components) {
    const function_def<B>* f = c.find_function(comp.fn);
    if (!f) {
      diags.push_back("abi component '" + comp.fn + "' names no function of the contract");
      continue;
    }
    if (!f->is_public) {
      diags.push_back("abi component '" + comp.fn + "' is not public");
      continue;
    }
    bool match = f->params.size() == comp.sorts.size();
    for (std::size_t i = 0; match && i < comp.sorts.size(); ++i)
      match = f->params[i].second == comp.sorts[i];
    if (!match)
      diags.push_back("abi component '" + comp.fn + "' parameter sorts disagree with the function");
  }

  for (const auto& f : c.functions) {
    if (f.body.empty()) {
      diags.push_back("function '" + f.name + "' has an empty body");
      continue;
    }
    // jump targets must resolve within the body (REVERT excepted)
    for (const auto& s : f.body) {
      if ((s.k == K::jump || s.k == K::jumpi) && s.target != revert_target &&
          s.target >= f.body.size())
        diags.push_back("function '" + f.name + "': jump target out of range");
    }

    // Defined-before-use along every forward path: a must-analysis over
    // forward edges only (back edges are loop repeats of already-checked
    // paths). IN[i] is the register set defined on all forward paths
    // reaching i; unreachable statements are skipped.
    auto always_defined = [&](const std::string& n) {
      if (n == "msg.sender") return true;
      for (const auto& [pn, ps] : f.params) {
        if (pn == n) return true;
        if (ps == psort::word_array && (n == pn + ".len" || n == pn + ".ptr")) return true;
      }
      return false;
    };

    std::size_t n = f.body.size();
    std::vector<bool> reachable(n, false);
    std::vector<std::vector<std::uint32_t>> preds(n);
    reachable[0] = true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = f.body[i];
      auto add_edge = [&](std::size_t to) {
        if (to >= n) return;
        preds[to].push_back(static_cast<std::uint32_t>(i));
        if (reachable[i]) reachable[to] = true;
      };
      if (s.k == K::jump) {
        if (s.target != revert_target && s.target > i) add_edge(s.target);
      } else if (s.k == K::jumpi) {
        if (s.target != revert_target && s.target > i) add_edge(s.target);
        add_edge(i + 1);
      } else {
        add_edge(i + 1);
      }
    }

    std::vector<std::set<std::string>> out_defs(n);
    std::vector<bool> have(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (!reachable[i]) continue;
      std::set<std::string> in;
      bool first = true;
      for (std::uint32_t p : preds[i]) {
        if (!reachable[p] || !have[p]) continue;
        if (first) { in = out_defs[p]; first = false; }
        else {
          std::set<std::string> meet;
          for (const auto& r : in)
            if (out_defs[p].count(r)) meet.insert(r);
          in = std::move(meet);
        }
      }
      const auto& s = f.body[i];
      for (const auto& r : detail::stmt_reads(s)) {
        if (always_defined(r) || in.count(r)) continue;
        diags.push_back("function '" + f.name + "': register '" + r +
                        "' used before definition (line " + std::to_string(s.line) + ")");
      }
      if ((s.k == K::sload || s.k == K::sstore) && !s.skey.index &&
          !c.find_slot(s.skey.base) && !always_defined(s.skey.base) &&
          !in.count(s.skey.base)) {
        diags.push_back("function '" + f.name + "': storage key register '" + s.skey.base +
                        "' used before definition (line " + std::to_string(s.line) + ")");
      }
      if (!s.dst.empty()) in.insert(s.dst);
      out_defs[i] = std::move(in);
      have[i] = true;
    }
  }

  return diags;
}

}  // namespace casynth::ir
