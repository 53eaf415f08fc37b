#pragma once

// The vulnerability catalog. Each query inspects one evaluated attack
// candidate (its trace of store/call events, recorded arithmetic triples,
// and branch conditions) and produces a formula whose models witness the
// vulnerability; the expensive "does this expression react to that
// variable" questions go through the solver-backed interference oracle and
// gate which disjuncts are emitted at all.
//
// Every disjunct remembers which trace events it witnesses, so a model can
// later be validated by checking that exactly those events occur, with the
// model's values, when the bound attack is replayed concretely.
//
// Every emitted disjunct also carries a gas-feasibility side constraint:
// the full frame chain of each transaction the disjunct references must fit
// the per-transaction gas budget. That is what forces, say, small receiver
// counts in a batched-transfer attack instead of letting the solver pick
// loop counts no real execution could pay for.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "casynth/interp.hpp"
#include "casynth/smt.hpp"
#include "casynth/summary.hpp"
#include "casynth/sym.hpp"

namespace casynth {

enum class vuln_kind : std::uint8_t {
  batch_overflow,
  timestamp_dep,
  unchecked_send,
  reentrancy,
};

inline const char* to_string(vuln_kind k) {
  switch (k) {
    case vuln_kind::batch_overflow: return "batch-overflow";
    case vuln_kind::timestamp_dep: return "timestamp-dep";
    case vuln_kind::unchecked_send: return "unchecked-send";
    case vuln_kind::reentrancy: return "reentrancy";
  }
  return "?";
}

inline std::optional<vuln_kind> vuln_from_name(const std::string& name) {
  if (name == "batch-overflow") return vuln_kind::batch_overflow;
  if (name == "timestamp-dep") return vuln_kind::timestamp_dep;
  if (name == "unchecked-send") return vuln_kind::unchecked_send;
  if (name == "reentrancy") return vuln_kind::reentrancy;
  return std::nullopt;
}

inline const std::vector<vuln_kind>& vuln_catalog() {
  static const std::vector<vuln_kind> all = {
      vuln_kind::batch_overflow,
      vuln_kind::timestamp_dep,
      vuln_kind::unchecked_send,
      vuln_kind::reentrancy,
  };
  return all;
}

struct query_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything the attacker chooses carries the attack-arg origin: argument
// holes, seeded array cells, and the sender identity.
inline std::vector<std::uint32_t> attack_arg_vars(const var_pool& pool) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t id = 0; id < pool.size(); ++id)
    if (pool[id].origin == var_origin::attack_arg) out.push_back(id);
  return out;
}

// The live block-timestamp variable, absent when the run pinned it.
inline std::optional<std::uint32_t> timestamp_var_of(const var_pool& pool) {
  for (std::uint32_t id = 0; id < pool.size(); ++id)
    if (pool[id].origin == var_origin::global_snapshot && pool[id].name == "timestamp")
      return id;
  return std::nullopt;
}

// Shared facts a query needs about the candidate under inspection: which
// variables the attacker controls, which one is the block timestamp, the
// per-transaction gas budget, and the solver handle for interference.
// Interference verdicts are memoized by expression node address, so a
// context must not outlive the evaluation results it was consulted about.
template <unsigned B>
struct query_context {
  solver_client<B>* solver = nullptr;
  std::vector<std::uint32_t> attack_args;  // argument holes plus the attacker identity
  std::optional<std::uint32_t> timestamp_var;
  word<B> gas_budget{100000};

  bool interferes(std::uint32_t v, const expr<B>& e) {
    auto key = std::make_pair(v, e.get());
    auto it = var_memo_.find(key);
    if (it != var_memo_.end()) return it->second;
    bool r = solver->interferes(v, e);
    var_memo_.emplace(key, r);
    return r;
  }

  bool term_interferes(const expr<B>& target, const expr<B>& e) {
    auto key = std::make_pair(target.get(), e.get());
    auto it = term_memo_.find(key);
    if (it != term_memo_.end()) return it->second;
    bool r = solver->interferes_term(target, e);
    term_memo_.emplace(key, r);
    return r;
  }

  bool any_arg_interferes(const expr<B>& e) {
    for (std::uint32_t v : attack_args)
      if (interferes(v, e)) return true;
    return false;
  }

 private:
  std::map<std::pair<std::uint32_t, const enode<B>*>, bool> var_memo_;
  std::map<std::pair<const enode<B>*, const enode<B>*>, bool> term_memo_;
};

// One way the vulnerability can manifest: a satisfiable condition plus the
// trace events (by sequence index) whose occurrence it asserts.
template <unsigned B>
struct query_disjunct {
  expr<B> formula;
  std::vector<std::size_t> events;
};

template <unsigned B>
struct query_result {
  expr<B> formula;  // disjunction over all disjuncts, false when none
  std::vector<query_disjunct<B>> disjuncts;
};

namespace detail {

// One transaction's whole frame chain must fit the budget. The outermost
// frame's gas total already folds re-entered frames in, so only depth-0
// records count.
template <unsigned B>
expr<B> gas_feasible(const eval_result<B>& res, std::size_t slot, const word<B>& budget) {
  expr<B> total = mk_lit_u64<B>(0);
  for (const auto& inv : res.invocations)
    if (inv.slot == slot && inv.depth == 0)
      total = mk_bin(op::add, total, inv.gas_used);
  return mk_bin(op::ule, total, mk_lit<B>(budget));
}

template <unsigned B>
void push_disjunct(query_result<B>& out, expr<B> d, std::vector<std::size_t> events) {
  out.formula = mk_or(out.formula, d);
  out.disjuncts.push_back({std::move(d), std::move(events)});
}

}  // namespace detail

// Wrapped arithmetic reaching a transfer: some recorded add/mul triple
// (a, b, r) wraps (an operand exceeds the result) while attacker-controlled
// inputs feed both the wrapping operand and the transfer's amount and
// recipient. Both operand orientations are tried, since which side of a
// commutative operator carries the attacker's value is a parsing accident.
template <unsigned B>
query_result<B> batch_overflow_query(const eval_result<B>& res, query_context<B>& ctx) {
  query_result<B> out;
  out.formula = mk_false<B>();
  for (const auto& t : res.triples) {
    const expr<B> operands[2] = {t.rhs, t.lhs};
    for (const expr<B>& operand : operands) {
      std::vector<std::uint32_t> sources;
      auto vs = vars_of(operand);
      for (std::uint32_t v : ctx.attack_args)
        if (vs.count(v)) sources.push_back(v);
      if (sources.empty()) continue;
      expr<B> wrapped = mk_bin(op::ugt, operand, t.result);
      if (wrapped->is_false()) continue;

      for (const auto& ev : res.trace) {
        if (ev.k != event_kind::call) continue;
        bool fed = false;
        for (std::uint32_t v : sources)
          if (ctx.interferes(v, ev.value)) { fed = true; break; }
        if (!fed) continue;
        if (!ctx.any_arg_interferes(ev.addr)) continue;
        if (!ctx.any_arg_interferes(ev.value)) continue;

        expr<B> d = mk_and(ev.guard, wrapped);
        d = mk_and(d, detail::gas_feasible(res, ev.slot, ctx.gas_budget));
        if (t.slot != ev.slot)
          d = mk_and(d, detail::gas_feasible(res, t.slot, ctx.gas_budget));
        detail::push_disjunct(out, std::move(d), {ev.seq});
      }
    }
  }
  return out;
}

// A strictly positive payout whose amount reacts to the block timestamp:
// whoever controls block production (or simply waits) can steer it.
template <unsigned B>
query_result<B> timestamp_dep_query(const eval_result<B>& res, query_context<B>& ctx) {
  query_result<B> out;
  out.formula = mk_false<B>();
  if (!ctx.timestamp_var) return out;  // pinned timestamp, nothing to steer
  for (const auto& ev : res.trace) {
    if (ev.k != event_kind::call) continue;
    expr<B> positive = mk_bin(op::ugt, ev.value, mk_lit_u64<B>(0));
    if (positive->is_false()) continue;
    if (!ctx.interferes(*ctx.timestamp_var, ev.value)) continue;
    expr<B> d = mk_and(ev.guard, positive);
    d = mk_and(d, detail::gas_feasible(res, ev.slot, ctx.gas_budget));
    detail::push_disjunct(out, std::move(d), {ev.seq});
  }
  return out;
}

// A transfer whose outcome the contract never looks at: the call's return
// value influences no branch condition anywhere in the candidate, so a
// failed send goes unnoticed. The verdict is a host-side conjunction of
// per-branch non-interference answers rather than one solver formula; the
// carried formula is just the flagged call's reachability, for binding
// argument values afterwards. Self-destruct transfers report no outcome to
// check, so they are skipped.
template <unsigned B>
query_result<B> unchecked_send_query(const eval_result<B>& res, query_context<B>& ctx) {
  query_result<B> out;
  out.formula = mk_false<B>();
  for (const auto& ev : res.trace) {
    if (ev.k != event_kind::call || ev.from_selfdestruct) continue;
    bool checked = false;
    for (const auto& br : res.branches)
      if (ctx.term_interferes(ev.ret, br.cond)) { checked = true; break; }
    if (checked) continue;
    expr<B> d = mk_and(ev.guard, detail::gas_feasible(res, ev.slot, ctx.gas_budget));
    detail::push_disjunct(out, std::move(d), {ev.seq});
    return out;  // first unchecked transfer is the finding
  }
  return out;
}

// State written after control was handed out mid-method: an external call
// to an attacker-steerable address carrying more than the stipend, another
// call opening right after it (the re-entered frame's first act), and a
// storage write landing later. Adjacency of the two calls is semantic, not
// positional: everything recorded between them must be guard-disabled, and
// both must belong to the same transaction.
template <unsigned B>
query_result<B> reentrancy_query(const eval_result<B>& res, query_context<B>& ctx) {
  constexpr std::size_t kCap = 64;
  if (res.trace.size() > kCap)
    throw query_error("reentrancy query: trace has " + std::to_string(res.trace.size()) +
                      " events, beyond the " + std::to_string(kCap) +
                      "-event enumeration cap");

  query_result<B> out;
  out.formula = mk_false<B>();
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const auto& ei = res.trace[i];
    if (ei.k != event_kind::call || ei.from_selfdestruct) continue;
    expr<B> gas_ok = mk_bin(op::ugt, ei.gas, mk_lit_u64<B>(2300));
    if (gas_ok->is_false()) continue;
    if (!ctx.any_arg_interferes(ei.addr)) continue;

    for (std::size_t j = i + 1; j < res.trace.size(); ++j) {
      const auto& ej = res.trace[j];
      if (ej.slot != ei.slot) break;  // control never re-enters across transactions
      if (ej.k != event_kind::call || ej.from_selfdestruct) continue;
      expr<B> adjacent = mk_and(ei.guard, ej.guard);
      for (std::size_t m = i + 1; m < j; ++m)
        adjacent = mk_and(adjacent, mk_not(res.trace[m].guard));
      if (adjacent->is_false()) continue;
      expr<B> pair = mk_and(adjacent, gas_ok);

      for (std::size_t k = j + 1; k < res.trace.size(); ++k) {
        const auto& ek = res.trace[k];
        if (ek.k != event_kind::store) continue;
        expr<B> d = mk_and(pair, ek.guard);
        d = mk_and(d, detail::gas_feasible(res, ei.slot, ctx.gas_budget));
        if (ek.slot != ei.slot)
          d = mk_and(d, detail::gas_feasible(res, ek.slot, ctx.gas_budget));
        detail::push_disjunct(out, std::move(d), {i, j, k});
      }
    }
  }
  return out;
}

// One entry point for the catalog.
template <unsigned B>
query_result<B> build_query(vuln_kind q, const eval_result<B>& res, query_context<B>& ctx) {
  switch (q) {
    case vuln_kind::batch_overflow: return batch_overflow_query(res, ctx);
    case vuln_kind::timestamp_dep: return timestamp_dep_query(res, ctx);
    case vuln_kind::unchecked_send: return unchecked_send_query(res, ctx);
    case vuln_kind::reentrancy: return reentrancy_query(res, ctx);
  }
  throw std::logic_error("build_query: bad query kind");
}

// ---- structural prefilters -------------------------------------------

// What a method can contribute to a candidate's event shape. Derived either
// from its summary entries (exact trace order) or, for the no-summary
// baseline, from its statement list; a body with a backward jump may repeat
// itself, so there both orders are assumed as soon as both event kinds
// appear.
struct method_shape {
  bool has_store = false;
  bool has_call = false;
  bool store_then_call = false;
  bool call_then_store = false;
};

template <unsigned B>
method_shape shape_of(const method_summary<B>& s) {
  method_shape sh;
  for (const auto& e : s.entries) {
    if (e.k == summary_action::store) {
      sh.has_store = true;
      if (sh.has_call) sh.call_then_store = true;
    } else {
      sh.has_call = true;
      if (sh.has_store) sh.store_then_call = true;
    }
  }
  return sh;
}

template <unsigned B>
method_shape shape_of(const ir::function_def<B>& f) {
  method_shape sh;
  bool backjump = false;
  using K = typename ir::stmt<B>::kind;
  for (std::size_t i = 0; i < f.body.size(); ++i) {
    const auto& s = f.body[i];
    if (s.k == K::sstore) {
      sh.has_store = true;
      if (sh.has_call) sh.call_then_store = true;
    } else if (s.k == K::call || s.k == K::selfdestruct) {
      sh.has_call = true;
      if (sh.has_store) sh.store_then_call = true;
    } else if ((s.k == K::jump || s.k == K::jumpi) && s.target != ir::revert_target &&
               s.target <= i) {
      backjump = true;
    }
  }
  if (backjump && sh.has_store && sh.has_call) {
    sh.store_then_call = true;
    sh.call_then_store = true;
  }
  return sh;
}

// Cheap structural prefilter over a candidate's method shapes, applied
// before any evaluation or solver work. Must never reject a candidate whose
// query could come out satisfiable; self-destruct entries count as calls
// since they move value.
inline bool query_shape_ok(vuln_kind q, const std::vector<method_shape>& task) {
  bool seen_store = false, seen_call = false;
  bool store_then_call = false, call_then_store = false;
  for (const method_shape& sh : task) {
    if (sh.store_then_call) store_then_call = true;
    if (sh.call_then_store) call_then_store = true;
    if (sh.has_store && seen_call) call_then_store = true;
    if (sh.has_call && seen_store) store_then_call = true;
    seen_store = seen_store || sh.has_store;
    seen_call = seen_call || sh.has_call;
  }
  switch (q) {
    case vuln_kind::batch_overflow: return store_then_call;
    case vuln_kind::timestamp_dep: return seen_call;
    case vuln_kind::unchecked_send: return seen_call;
    case vuln_kind::reentrancy: return call_then_store;
  }
  return true;
}

template <unsigned B>
bool query_shape_ok(vuln_kind q, const std::vector<const method_summary<B>*>& task) {
  std::vector<method_shape> shapes;
  shapes.reserve(task.size());
  for (const method_summary<B>* s : task) shapes.push_back(shape_of(*s));
  return query_shape_ok(q, shapes);
}

}  // namespace casynth
