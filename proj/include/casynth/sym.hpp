#pragma once

// Symbolic expression DAG over fixed-width words plus booleans. Nodes are
// immutable and shared; every expression is built through the mk_* helpers,
// which fold literal operands and apply a small set of identity rewrites, so
// a constructed expression is always in that normal form. Uninterpreted
// applications model hashing (one global function, so locations computed in
// different methods can alias) and per-call-site return values.

#include "word.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace casynth {

enum class sort : std::uint8_t { word, boolean };

// Where a symbolic variable came from. Queries use this to tell attacker
// controlled inputs apart from snapshot state; fresh_read marks the value of
// a memory read with no matching prior write.
enum class var_origin : std::uint8_t {
  attack_arg,
  storage_snapshot,
  global_snapshot,
  choice_flag,
  fresh_read,
  entry_flag,
  probe,  // throwaway solver-side witness, never reachable from a formula
};

inline const char* to_string(var_origin o) {
  switch (o) {
    case var_origin::attack_arg: return "attack_arg";
    case var_origin::storage_snapshot: return "storage_snapshot";
    case var_origin::global_snapshot: return "global_snapshot";
    case var_origin::choice_flag: return "choice_flag";
    case var_origin::fresh_read: return "fresh_read";
    case var_origin::entry_flag: return "entry_flag";
    case var_origin::probe: return "probe";
  }
  return "?";
}

struct var_info {
  std::string name;
  sort srt;
  var_origin origin;
};

// Append-only registry of symbolic variables. fresh() is serialized; lookups
// are lock-free and rely on all variable creation happening before any
// concurrent read phase (the deque keeps references stable either way).
class var_pool {
 public:
  var_pool() = default;

  // Cloning gives a worker a private id space that starts out identical to
  // the shared pool (ids below the shared size agree), so per-task fresh
  // variables stay deterministic regardless of worker interleaving.
  var_pool(const var_pool& o) {
    std::lock_guard<std::mutex> g(o.mu_);
    vars_ = o.vars_;
  }
  var_pool& operator=(const var_pool&) = delete;

  std::uint32_t fresh(std::string name, sort s, var_origin o) {
    std::lock_guard<std::mutex> g(mu_);
    vars_.push_back(var_info{std::move(name), s, o});
    return static_cast<std::uint32_t>(vars_.size() - 1);
  }

  const var_info& operator[](std::uint32_t id) const { return vars_[id]; }

  std::size_t size() const {
    std::lock_guard<std::mutex> g(mu_);
    return vars_.size();
  }

 private:
  mutable std::mutex mu_;
  std::deque<var_info> vars_;
};

enum class op : std::uint8_t {
  lit, var, app,
  add, sub, mul, udiv, umod,
  bit_and, bit_or,
  log_and, log_or, log_not,
  eq, ne, ult, ule, ugt, uge,
  ite,
};

// Uninterpreted function family of an app node.
enum class ufn : std::uint8_t { sha3, call_ret };

template <unsigned Bits>
struct enode;

template <unsigned Bits>
using expr = std::shared_ptr<const enode<Bits>>;

template <unsigned Bits>
struct enode {
  op o;
  sort srt;
  ufn fn = ufn::sha3;        // app nodes only
  std::uint32_t site = 0;    // app nodes only; distinguishes call_ret sites
  std::uint32_t var_id = 0;  // var nodes only
  word<Bits> val;            // lit nodes only (booleans encode as 0/1)
  std::vector<expr<Bits>> kids;
  std::size_t hash = 0;
  std::uint32_t node_count = 1;

  bool is_lit() const { return o == op::lit; }
  bool is_true() const { return o == op::lit && srt == sort::boolean && !val.is_zero(); }
  bool is_false() const { return o == op::lit && srt == sort::boolean && val.is_zero(); }
};

namespace detail {

inline void hash_mix(std::size_t& h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
}

template <unsigned B>
std::size_t node_hash(const enode<B>& n) {
  std::size_t h = static_cast<std::size_t>(n.o) * 31 + static_cast<std::size_t>(n.srt);
  switch (n.o) {
    case op::lit: hash_mix(h, n.val.hash()); break;
    case op::var: hash_mix(h, n.var_id); break;
    case op::app:
      hash_mix(h, static_cast<std::size_t>(n.fn));
      hash_mix(h, n.site);
      break;
    default: break;
  }
  for (const auto& k : n.kids) hash_mix(h, k->hash);
  return h;
}

}  // namespace detail

// Structural equality (pointer fast path, then hash, then recursion).
template <unsigned B>
bool equal(const expr<B>& a, const expr<B>& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->o != b->o || a->srt != b->srt) return false;
  switch (a->o) {
    case op::lit: if (!(a->val == b->val)) return false; break;
    case op::var: if (a->var_id != b->var_id) return false; break;
    case op::app: if (a->fn != b->fn || a->site != b->site) return false; break;
    default: break;
  }
  if (a->kids.size() != b->kids.size()) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!equal(a->kids[i], b->kids[i])) return false;
  return true;
}

namespace detail {

template <unsigned B>
expr<B> finish(enode<B> n) {
  n.hash = node_hash(n);
  std::uint64_t count = 1;
  for (const auto& k : n.kids) count += k->node_count;
  n.node_count = count > 0xffffffffull ? 0xffffffffu : static_cast<std::uint32_t>(count);
  return std::make_shared<const enode<B>>(std::move(n));
}

}  // namespace detail

template <unsigned B>
expr<B> mk_lit(word<B> v) {
  enode<B> n;
  n.o = op::lit;
  n.srt = sort::word;
  n.val = v;
  return detail::finish(std::move(n));
}

template <unsigned B>
expr<B> mk_lit_u64(std::uint64_t v) { return mk_lit<B>(word<B>(v)); }

template <unsigned B>
expr<B> mk_bool(bool v) {
  enode<B> n;
  n.o = op::lit;
  n.srt = sort::boolean;
  n.val = word<B>(v ? 1 : 0);
  return detail::finish(std::move(n));
}

template <unsigned B>
expr<B> mk_true() { return mk_bool<B>(true); }

template <unsigned B>
expr<B> mk_false() { return mk_bool<B>(false); }

template <unsigned B>
expr<B> mk_var(std::uint32_t id, sort s) {
  enode<B> n;
  n.o = op::var;
  n.srt = s;
  n.var_id = id;
  return detail::finish(std::move(n));
}

template <unsigned B>
expr<B> mk_app(ufn fn, std::uint32_t site, std::vector<expr<B>> args) {
  enode<B> n;
  n.o = op::app;
  n.srt = sort::word;
  n.fn = fn;
  n.site = site;
  n.kids = std::move(args);
  return detail::finish(std::move(n));
}

namespace detail {

template <unsigned B>
expr<B> fold_word_bin(op o, const word<B>& a, const word<B>& b) {
  switch (o) {
    case op::add: return mk_lit<B>(a + b);
    case op::sub: return mk_lit<B>(a - b);
    case op::mul: return mk_lit<B>(a * b);
    case op::udiv: return mk_lit<B>(a.udiv(b));
    case op::umod: return mk_lit<B>(a.umod(b));
    case op::bit_and: return mk_lit<B>(a & b);
    case op::bit_or: return mk_lit<B>(a | b);
    case op::eq: return mk_bool<B>(a == b);
    case op::ne: return mk_bool<B>(a != b);
    case op::ult: return mk_bool<B>(a < b);
    case op::ule: return mk_bool<B>(a <= b);
    case op::ugt: return mk_bool<B>(a > b);
    case op::uge: return mk_bool<B>(a >= b);
    default: throw std::logic_error("fold_word_bin: not a word binop");
  }
}

// Storage cells addressed through the collision-free hash never collide with
// the small literal indices of declared slots, and two hashed cells coincide
// only when their preimages do. Treating the hash as injective and disjoint
// from literals mirrors how contract storage is laid out in practice; it lets
// location comparisons fold instead of snowballing through every guard.
template <unsigned B>
bool surely_distinct(const expr<B>& a, const expr<B>& b) {
  const bool ah = a->o == op::app && a->fn == ufn::sha3;
  const bool bh = b->o == op::app && b->fn == ufn::sha3;
  if (ah && b->is_lit()) return true;
  if (bh && a->is_lit()) return true;
  if (ah && bh && a->kids.size() == b->kids.size()) {
    for (std::size_t i = 0; i < a->kids.size(); ++i) {
      const expr<B>& x = a->kids[i];
      const expr<B>& y = b->kids[i];
      if (x->is_lit() && y->is_lit() && !(x->val == y->val)) return true;
      if (surely_distinct(x, y)) return true;
    }
  }
  return false;
}

}  // namespace detail

template <unsigned B>
expr<B> mk_not(const expr<B>& a);

template <unsigned B>
expr<B> mk_and(const expr<B>& a, const expr<B>& b);

// Word-sorted and comparison binary operators. Literal operands fold; a few
// cheap identities keep guards readable and keep structurally equal values
// pointer-comparable more often.
template <unsigned B>
expr<B> mk_bin(op o, const expr<B>& a, const expr<B>& b) {
  bool comparison = (o == op::eq || o == op::ne || o == op::ult || o == op::ule ||
                     o == op::ugt || o == op::uge);
  bool arith = (o == op::add || o == op::sub || o == op::mul || o == op::udiv ||
                o == op::umod || o == op::bit_and || o == op::bit_or);
  if (!comparison && !arith) throw std::logic_error("mk_bin: not a word binop");
  if (a->srt != sort::word || b->srt != sort::word)
    throw std::logic_error("mk_bin: word operands required");
  if (a->is_lit() && b->is_lit()) return detail::fold_word_bin<B>(o, a->val, b->val);

  word<B> zero{0}, one{1};
  switch (o) {
    case op::add:
      if (a->is_lit() && a->val == zero) return b;
      if (b->is_lit() && b->val == zero) return a;
      break;
    case op::sub:
      if (b->is_lit() && b->val == zero) return a;
      if (equal(a, b)) return mk_lit<B>(zero);
      break;
    case op::mul:
      if (a->is_lit() && a->val == one) return b;
      if (b->is_lit() && b->val == one) return a;
      if ((a->is_lit() && a->val == zero) || (b->is_lit() && b->val == zero))
        return mk_lit<B>(zero);
      break;
    case op::udiv:
      if (b->is_lit() && b->val == one) return a;
      break;
    case op::eq:
      if (equal(a, b)) return mk_true<B>();
      if (detail::surely_distinct(a, b)) return mk_false<B>();
      if (a->o == op::app && b->o == op::app && a->fn == ufn::sha3 &&
          b->fn == ufn::sha3 && a->kids.size() == b->kids.size()) {
        expr<B> r = mk_true<B>();
        for (std::size_t i = 0; i < a->kids.size(); ++i)
          r = mk_and(r, mk_bin(op::eq, a->kids[i], b->kids[i]));
        return r;
      }
      break;
    case op::ne:
      if (equal(a, b)) return mk_false<B>();
      if (detail::surely_distinct(a, b)) return mk_true<B>();
      break;
    case op::ult:
      if (equal(a, b)) return mk_false<B>();
      if (b->is_lit() && b->val == zero) return mk_false<B>();
      break;
    case op::ugt:
      if (equal(a, b)) return mk_false<B>();
      if (a->is_lit() && a->val == zero) return mk_false<B>();
      break;
    case op::ule:
      if (equal(a, b)) return mk_true<B>();
      if (a->is_lit() && a->val == zero) return mk_true<B>();
      break;
    case op::uge:
      if (equal(a, b)) return mk_true<B>();
      if (b->is_lit() && b->val == zero) return mk_true<B>();
      break;
    default:
      break;
  }

  enode<B> n;
  n.o = o;
  n.srt = comparison ? sort::boolean : sort::word;
  n.kids = {a, b};
  return detail::finish(std::move(n));
}

template <unsigned B>
expr<B> mk_eq(const expr<B>& a, const expr<B>& b) { return mk_bin(op::eq, a, b); }

template <unsigned B>
expr<B> mk_not(const expr<B>& a) {
  if (a->srt != sort::boolean) throw std::logic_error("mk_not: boolean operand required");
  if (a->is_lit()) return mk_bool<B>(a->val.is_zero());
  if (a->o == op::log_not) return a->kids[0];
  enode<B> n;
  n.o = op::log_not;
  n.srt = sort::boolean;
  n.kids = {a};
  return detail::finish(std::move(n));
}

template <unsigned B>
expr<B> mk_and(const expr<B>& a, const expr<B>& b) {
  if (a->srt != sort::boolean || b->srt != sort::boolean)
    throw std::logic_error("mk_and: boolean operands required");
  if (a->is_false() || b->is_false()) return mk_false<B>();
  if (a->is_true()) return b;
  if (b->is_true()) return a;
  if (equal(a, b)) return a;
  if (a->o == op::log_not && equal(a->kids[0], b)) return mk_false<B>();
  if (b->o == op::log_not && equal(b->kids[0], a)) return mk_false<B>();
  enode<B> n;
  n.o = op::log_and;
  n.srt = sort::boolean;
  n.kids = {a, b};
  return detail::finish(std::move(n));
}

template <unsigned B>
expr<B> mk_or(const expr<B>& a, const expr<B>& b) {
  if (a->srt != sort::boolean || b->srt != sort::boolean)
    throw std::logic_error("mk_or: boolean operands required");
  if (a->is_true() || b->is_true()) return mk_true<B>();
  if (a->is_false()) return b;
  if (b->is_false()) return a;
  if (equal(a, b)) return a;
  if (a->o == op::log_not && equal(a->kids[0], b)) return mk_true<B>();
  if (b->o == op::log_not && equal(b->kids[0], a)) return mk_true<B>();
  enode<B> n;
  n.o = op::log_or;
  n.srt = sort::boolean;
  n.kids = {a, b};
  return detail::finish(std::move(n));
}

template <unsigned B>
expr<B> mk_and_all(const std::vector<expr<B>>& conjuncts) {
  expr<B> acc = mk_true<B>();
  for (const auto& c : conjuncts) acc = mk_and(acc, c);
  return acc;
}

template <unsigned B>
expr<B> mk_or_all(const std::vector<expr<B>>& disjuncts) {
  expr<B> acc = mk_false<B>();
  for (const auto& d : disjuncts) acc = mk_or(acc, d);
  return acc;
}

template <unsigned B>
expr<B> mk_ite(const expr<B>& c, const expr<B>& t, const expr<B>& f) {
  if (c->srt != sort::boolean) throw std::logic_error("mk_ite: boolean condition required");
  if (t->srt != f->srt) throw std::logic_error("mk_ite: branch sorts differ");
  if (c->is_true()) return t;
  if (c->is_false()) return f;
  if (equal(t, f)) return t;
  enode<B> n;
  n.o = op::ite;
  n.srt = t->srt;
  n.kids = {c, t, f};
  return detail::finish(std::move(n));
}

// ---------------------------------------------------------------------------
// Traversals.

template <unsigned B>
struct substitution {
  std::unordered_map<std::uint32_t, expr<B>> by_var;

  void set(std::uint32_t var_id, expr<B> e) { by_var[var_id] = std::move(e); }
};

namespace detail {

template <unsigned B>
expr<B> substitute_rec(const expr<B>& e, const substitution<B>& s,
                       std::unordered_map<const enode<B>*, expr<B>>& memo) {
  if (e->o == op::var) {
    auto it = s.by_var.find(e->var_id);
    if (it != s.by_var.end()) {
      if (it->second->srt != e->srt)
        throw std::logic_error("substitute: sort mismatch for variable");
      return it->second;
    }
    return e;
  }
  if (e->kids.empty()) return e;
  auto mit = memo.find(e.get());
  if (mit != memo.end()) return mit->second;

  std::vector<expr<B>> kids;
  kids.reserve(e->kids.size());
  bool changed = false;
  for (const auto& k : e->kids) {
    expr<B> nk = substitute_rec(k, s, memo);
    changed = changed || nk.get() != k.get();
    kids.push_back(std::move(nk));
  }
  expr<B> out;
  if (!changed) {
    out = e;
  } else {
    switch (e->o) {
      case op::app: out = mk_app<B>(e->fn, e->site, std::move(kids)); break;
      case op::log_not: out = mk_not<B>(kids[0]); break;
      case op::log_and: out = mk_and<B>(kids[0], kids[1]); break;
      case op::log_or: out = mk_or<B>(kids[0], kids[1]); break;
      case op::ite: out = mk_ite<B>(kids[0], kids[1], kids[2]); break;
      default: out = mk_bin<B>(e->o, kids[0], kids[1]); break;
    }
  }
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

template <unsigned B>
expr<B> substitute(const expr<B>& e, const substitution<B>& s) {
  if (s.by_var.empty()) return e;
  std::unordered_map<const enode<B>*, expr<B>> memo;
  return detail::substitute_rec(e, s, memo);
}

// Replaces every subterm structurally equal to `target` with `repl`.
// Used to probe how an expression depends on a non-variable subterm (for
// example a call's return value).
namespace detail {

template <unsigned B>
expr<B> replace_rec(const expr<B>& e, const expr<B>& target, const expr<B>& repl,
                    std::unordered_map<const enode<B>*, expr<B>>& memo) {
  if (equal(e, target)) return repl;
  if (e->kids.empty()) return e;
  auto mit = memo.find(e.get());
  if (mit != memo.end()) return mit->second;

  std::vector<expr<B>> kids;
  kids.reserve(e->kids.size());
  bool changed = false;
  for (const auto& k : e->kids) {
    expr<B> nk = replace_rec(k, target, repl, memo);
    changed = changed || nk.get() != k.get();
    kids.push_back(std::move(nk));
  }
  expr<B> out;
  if (!changed) {
    out = e;
  } else {
    switch (e->o) {
      case op::app: out = mk_app<B>(e->fn, e->site, std::move(kids)); break;
      case op::log_not: out = mk_not<B>(kids[0]); break;
      case op::log_and: out = mk_and<B>(kids[0], kids[1]); break;
      case op::log_or: out = mk_or<B>(kids[0], kids[1]); break;
      case op::ite: out = mk_ite<B>(kids[0], kids[1], kids[2]); break;
      default: out = mk_bin<B>(e->o, kids[0], kids[1]); break;
    }
  }
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

template <unsigned B>
expr<B> replace(const expr<B>& e, const expr<B>& target, const expr<B>& repl) {
  if (target->srt != repl->srt) throw std::logic_error("replace: sort mismatch");
  std::unordered_map<const enode<B>*, expr<B>> memo;
  return detail::replace_rec(e, target, repl, memo);
}

namespace detail {

template <unsigned B>
void vars_of_rec(const expr<B>& e, std::unordered_set<const enode<B>*>& seen,
                 std::unordered_set<std::uint32_t>& out) {
  if (!seen.insert(e.get()).second) return;
  if (e->o == op::var) out.insert(e->var_id);
  for (const auto& k : e->kids) vars_of_rec(k, seen, out);
}

template <unsigned B>
bool contains_var_rec(const expr<B>& e, std::uint32_t id,
                      std::unordered_set<const enode<B>*>& seen) {
  if (!seen.insert(e.get()).second) return false;
  if (e->o == op::var && e->var_id == id) return true;
  for (const auto& k : e->kids)
    if (contains_var_rec(k, id, seen)) return true;
  return false;
}

template <unsigned B>
void apps_of_rec(const expr<B>& e, std::unordered_set<const enode<B>*>& seen,
                 std::vector<expr<B>>& out) {
  if (!seen.insert(e.get()).second) return;
  if (e->o == op::app) out.push_back(e);
  for (const auto& k : e->kids) apps_of_rec(k, seen, out);
}

template <unsigned B>
bool contains_term_rec(const expr<B>& e, const expr<B>& target,
                       std::unordered_set<const enode<B>*>& seen) {
  if (equal(e, target)) return true;
  if (!seen.insert(e.get()).second) return false;
  for (const auto& k : e->kids)
    if (contains_term_rec(k, target, seen)) return true;
  return false;
}

}  // namespace detail

template <unsigned B>
std::unordered_set<std::uint32_t> vars_of(const expr<B>& e) {
  std::unordered_set<const enode<B>*> seen;
  std::unordered_set<std::uint32_t> out;
  detail::vars_of_rec(e, seen, out);
  return out;
}

template <unsigned B>
bool contains_var(const expr<B>& e, std::uint32_t id) {
  std::unordered_set<const enode<B>*> seen;
  return detail::contains_var_rec(e, id, seen);
}

// Structural occurrence test (the subterm counterpart of contains_var).
template <unsigned B>
bool contains_term(const expr<B>& e, const expr<B>& target) {
  std::unordered_set<const enode<B>*> seen;
  return detail::contains_term_rec(e, target, seen);
}

// All app subterms (deduplicated by identity, then structurally).
template <unsigned B>
std::vector<expr<B>> apps_of(const expr<B>& e) {
  std::unordered_set<const enode<B>*> seen;
  std::vector<expr<B>> raw;
  detail::apps_of_rec(e, seen, raw);
  std::vector<expr<B>> out;
  for (const auto& a : raw) {
    bool dup = false;
    for (const auto& b : out)
      if (equal(a, b)) { dup = true; break; }
    if (!dup) out.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Concrete evaluation (used by replay validation and brute-force oracles).
// var_val maps variable id to a word (booleans read as nonzero);
// app_val resolves an uninterpreted application from concrete argument words.

template <unsigned B>
struct eval_env {
  std::function<word<B>(std::uint32_t)> var_val;
  std::function<word<B>(ufn, std::uint32_t, const std::vector<word<B>>&)> app_val;
};

template <unsigned B>
word<B> eval_word(const expr<B>& e, const eval_env<B>& env);

template <unsigned B>
bool eval_bool(const expr<B>& e, const eval_env<B>& env) {
  switch (e->o) {
    case op::lit: return !e->val.is_zero();
    case op::var: return !env.var_val(e->var_id).is_zero();
    case op::log_not: return !eval_bool(e->kids[0], env);
    case op::log_and: return eval_bool(e->kids[0], env) && eval_bool(e->kids[1], env);
    case op::log_or: return eval_bool(e->kids[0], env) || eval_bool(e->kids[1], env);
    case op::ite:
      return eval_bool(e->kids[0], env) ? eval_bool(e->kids[1], env)
                                        : eval_bool(e->kids[2], env);
    case op::eq: return eval_word(e->kids[0], env) == eval_word(e->kids[1], env);
    case op::ne: return eval_word(e->kids[0], env) != eval_word(e->kids[1], env);
    case op::ult: return eval_word(e->kids[0], env) < eval_word(e->kids[1], env);
    case op::ule: return eval_word(e->kids[0], env) <= eval_word(e->kids[1], env);
    case op::ugt: return eval_word(e->kids[0], env) > eval_word(e->kids[1], env);
    case op::uge: return eval_word(e->kids[0], env) >= eval_word(e->kids[1], env);
    default: throw std::logic_error("eval_bool: word-sorted node");
  }
}

template <unsigned B>
word<B> eval_word(const expr<B>& e, const eval_env<B>& env) {
  switch (e->o) {
    case op::lit: return e->val;
    case op::var: return env.var_val(e->var_id);
    case op::app: {
      std::vector<word<B>> args;
      args.reserve(e->kids.size());
      for (const auto& k : e->kids) args.push_back(eval_word(k, env));
      return env.app_val(e->fn, e->site, args);
    }
    case op::add: return eval_word(e->kids[0], env) + eval_word(e->kids[1], env);
    case op::sub: return eval_word(e->kids[0], env) - eval_word(e->kids[1], env);
    case op::mul: return eval_word(e->kids[0], env) * eval_word(e->kids[1], env);
    case op::udiv: return eval_word(e->kids[0], env).udiv(eval_word(e->kids[1], env));
    case op::umod: return eval_word(e->kids[0], env).umod(eval_word(e->kids[1], env));
    case op::bit_and: return eval_word(e->kids[0], env) & eval_word(e->kids[1], env);
    case op::bit_or: return eval_word(e->kids[0], env) | eval_word(e->kids[1], env);
    case op::ite:
      return eval_bool(e->kids[0], env) ? eval_word(e->kids[1], env)
                                        : eval_word(e->kids[2], env);
    default: throw std::logic_error("eval_word: boolean-sorted node");
  }
}

// ---------------------------------------------------------------------------
// Printing (deterministic infix, for logs and summary dumps).

namespace detail {

inline const char* op_token(op o) {
  switch (o) {
    case op::add: return "+";
    case op::sub: return "-";
    case op::mul: return "*";
    case op::udiv: return "/";
    case op::umod: return "%";
    case op::bit_and: return "&";
    case op::bit_or: return "|";
    case op::log_and: return "&&";
    case op::log_or: return "||";
    case op::eq: return "==";
    case op::ne: return "!=";
    case op::ult: return "<";
    case op::ule: return "<=";
    case op::ugt: return ">";
    case op::uge: return ">=";
    default: return "?";
  }
}

template <unsigned B>
void print_rec(const expr<B>& e, const var_pool& pool, std::string& out) {
  switch (e->o) {
    case op::lit:
      if (e->srt == sort::boolean) out += e->val.is_zero() ? "false" : "true";
      else out += e->val.to_dec();
      return;
    case op::var:
      out += pool[e->var_id].name;
      return;
    case op::app: {
      out += e->fn == ufn::sha3 ? "sha3" : "call" + std::to_string(e->site);
      out += '(';
      for (std::size_t i = 0; i < e->kids.size(); ++i) {
        if (i) out += ", ";
        print_rec(e->kids[i], pool, out);
      }
      out += ')';
      return;
    }
    case op::log_not:
      out += '!';
      out += '(';
      print_rec(e->kids[0], pool, out);
      out += ')';
      return;
    case op::ite:
      out += "ite(";
      print_rec(e->kids[0], pool, out);
      out += ", ";
      print_rec(e->kids[1], pool, out);
      out += ", ";
      print_rec(e->kids[2], pool, out);
      out += ')';
      return;
    default:
      out += '(';
      print_rec(e->kids[0], pool, out);
      out += ' ';
      out += op_token(e->o);
      out += ' ';
      print_rec(e->kids[1], pool, out);
      out += ')';
      return;
  }
}

}  // namespace detail

template <unsigned B>
std::string to_string(const expr<B>& e, const var_pool& pool) {
  std::string out;
  detail::print_rec(e, pool, out);
  return out;
}

}  // namespace casynth
