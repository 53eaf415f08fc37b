#pragma once

// Method summaries. A summary condenses one public method into a short list
// of guarded effect entries:
//
//   store    (location-template, value-template)          @ guard
//   call     (gas-, addr-, value-templates, call site)    @ guard
//   destruct (addr-template)                              @ guard
//
// Templates are symbolic expressions closed over the method's parameters,
// the storage/global snapshot taken at invocation entry, and one boolean
// entry flag standing for the caller's path condition. Building a summary
// evaluates the method exactly once against a fully symbolic state; applying
// it to a concrete search state is pure substitution, so a search over
// attack sequences never re-evaluates method bodies.
//
// Application replays entries sequentially in trace order. A call entry
// whose instantiated gas operand is not provably limited to the stipend
// re-enters: the same summary is applied again at the call point (bounded by
// the configured depth), mirroring how the direct evaluator re-inlines
// re-entrant calls.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "casynth/interp.hpp"
#include "casynth/ir.hpp"
#include "casynth/state.hpp"
#include "casynth/sym.hpp"

namespace casynth {

enum class summary_action : std::uint8_t { store, call, destruct };

template <unsigned B>
struct summary_entry {
  summary_action k = summary_action::store;
  expr<B> guard;  // full path condition, revert-adjusted, entry flag included
  // store
  expr<B> loc, val;
  // call / destruct
  expr<B> gas, addr, value;
  std::uint32_t site = 0;
};

// How one formal parameter appears inside the templates.
template <unsigned B>
struct param_slot {
  std::string name;
  ir::psort srt = ir::psort::word;
  std::uint32_t value_var = 0;           // scalar (word sorted; boolean for bools)
  std::uint32_t len_var = 0;             // array length
  std::vector<std::uint32_t> elem_vars;  // array elements, one per unrolled cell
  word<B> mem_base{0};
};

template <unsigned B>
struct method_summary {
  std::string fn;
  std::size_t fn_index = 0;
  std::vector<summary_entry<B>> entries;
  std::vector<arith_triple<B>> triples;    // every +/* evaluation, as templates
  std::vector<branch_event<B>> branches;   // every branch condition, as templates
  expr<B> gas_template;                    // total charge of one invocation
  expr<B> path_ok;                         // non-revert condition
  expr<B> halted;                          // self-destruct condition
  bool truncated = false;                  // loop paths beyond the unroll bound
  std::vector<param_slot<B>> params;
  snapshot_book<B> snapshot;               // closure variables, in creation order
  std::uint32_t entry_var = 0;             // boolean flag for the caller's guard
};

template <unsigned B>
struct summary_options {
  unsigned unroll = 4;
  unsigned array_elems = 4;  // symbolic elements seeded per array parameter
  word<B> gas_budget{100000};
  gas_table gas{};
};

template <unsigned B>
struct apply_options {
  unsigned reentrancy_depth = 1;
  word<B> gas_budget{100000};
  gas_table gas{};
  std::size_t slot = 0;         // attack position stamped on the metadata
  expr<B> entry_guard;          // null means unconditional
};

namespace detail {

// Substitution plus call-site re-tagging: applying a summary at re-entry
// depth d must mint the same return-value symbols the direct evaluator
// would, and those are keyed by depth.
template <unsigned B>
expr<B> subst_resite_rec(const expr<B>& e, const substitution<B>& s, unsigned depth,
                         std::unordered_map<const enode<B>*, expr<B>>& memo) {
  if (e->o == op::lit) return e;
  if (e->o == op::var) {
    auto it = s.by_var.find(e->var_id);
    if (it == s.by_var.end()) return e;  // fresh-read scratch stays itself
    if (it->second->srt != e->srt)
      throw std::logic_error("apply_summary: sort mismatch for closure variable");
    return it->second;
  }
  auto mit = memo.find(e.get());
  if (mit != memo.end()) return mit->second;

  std::vector<expr<B>> kids;
  kids.reserve(e->kids.size());
  bool changed = false;
  for (const auto& k : e->kids) {
    expr<B> nk = subst_resite_rec(k, s, depth, memo);
    changed = changed || nk.get() != k.get();
    kids.push_back(std::move(nk));
  }
  expr<B> out;
  if (e->o == op::app && e->fn == ufn::call_ret) {
    std::uint32_t site = resite_call(e->site, depth);
    out = (!changed && site == e->site) ? e : mk_app<B>(e->fn, site, std::move(kids));
  } else if (!changed) {
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

template <unsigned B>
expr<B> sum_to_word(const expr<B>& e) {
  if (e->srt == sort::word) return e;
  return mk_ite(e, mk_lit_u64<B>(1), mk_lit_u64<B>(0));
}

}  // namespace detail

// Evaluates one public method against a fully symbolic state and freezes the
// resulting trace into templates. Re-entry is left out on purpose: the apply
// side expands it, so a summary stays one-invocation-shaped.
template <unsigned B>
method_summary<B> build_summary(const ir::contract<B>& c, std::size_t fn_index,
                                var_pool& pool, const summary_options<B>& opt = {}) {
  if (fn_index >= c.functions.size())
    throw std::invalid_argument("build_summary: no such function");
  const ir::function_def<B>& f = c.functions[fn_index];

  method_summary<B> sum;
  sum.fn = f.name;
  sum.fn_index = fn_index;
  sum.entry_var = pool.fresh("entry", sort::boolean, var_origin::entry_flag);

  std::vector<arg_bundle<B>> args;
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    const auto& [pname, psrt] = f.params[i];
    param_slot<B> ps;
    ps.name = pname;
    ps.srt = psrt;
    if (psrt == ir::psort::word_array) {
      ps.len_var = pool.fresh(pname + ".len", sort::word, var_origin::attack_arg);
      std::vector<expr<B>> elems;
      for (unsigned j = 0; j < opt.array_elems; ++j) {
        ps.elem_vars.push_back(pool.fresh(pname + "[" + std::to_string(j) + "]", sort::word,
                                          var_origin::attack_arg));
        elems.push_back(mk_var<B>(ps.elem_vars.back(), sort::word));
      }
      ps.mem_base = default_array_base<B>(i);
      args.push_back(arg_bundle<B>::array(mk_var<B>(ps.len_var, sort::word),
                                          std::move(elems), ps.mem_base));
    } else {
      sort s = psrt == ir::psort::boolean ? sort::boolean : sort::word;
      ps.value_var = pool.fresh(pname, s, var_origin::attack_arg);
      args.push_back(arg_bundle<B>::scalar(mk_var<B>(ps.value_var, s)));
    }
    sum.params.push_back(std::move(ps));
  }

  program_state<B> st = fully_symbolic_state<B>(c, pool, sum.snapshot);
  eval_options<B> eopt;
  eopt.unroll = opt.unroll;
  eopt.reentrancy_depth = 0;
  eopt.gas_budget = opt.gas_budget;
  eopt.gas = opt.gas;
  eopt.entry_guard = mk_var<B>(sum.entry_var, sort::boolean);
  eval_result<B> res = eval_function<B>(c, f, args, st, pool, eopt);

  for (const auto& ev : res.trace) {
    summary_entry<B> e;
    e.guard = ev.guard;
    if (ev.k == event_kind::store) {
      e.k = summary_action::store;
      e.loc = ev.loc;
      e.val = ev.val;
    } else if (ev.from_selfdestruct) {
      e.k = summary_action::destruct;
      e.addr = ev.addr;
      e.value = ev.value;
    } else {
      e.k = summary_action::call;
      e.gas = ev.gas;
      e.addr = ev.addr;
      e.value = ev.value;
      e.site = ev.site;
    }
    sum.entries.push_back(std::move(e));
  }

  sum.triples = std::move(res.triples);
  sum.branches = std::move(res.branches);
  sum.path_ok = res.path_ok;
  sum.halted = res.halted;
  sum.truncated = res.truncated;
  sum.gas_template = res.invocations.back().gas_used;
  return sum;
}

// Summaries for every public method, in declaration order.
template <unsigned B>
std::vector<method_summary<B>> build_all_summaries(const ir::contract<B>& c, var_pool& pool,
                                                   const summary_options<B>& opt = {}) {
  std::vector<method_summary<B>> out;
  for (std::size_t i = 0; i < c.functions.size(); ++i)
    if (c.functions[i].is_public) out.push_back(build_summary<B>(c, i, pool, opt));
  return out;
}

namespace detail {

template <unsigned B>
struct apply_frame_outcome {
  expr<B> ok;
  expr<B> halt;
  expr<B> gas_used;
};

template <unsigned B>
apply_frame_outcome<B> apply_rec(const method_summary<B>& sum,
                                 const std::vector<arg_bundle<B>>& args,
                                 program_state<B>& st, const expr<B>& entry, unsigned depth,
                                 const apply_options<B>& opt, eval_result<B>& out) {
  // The substitution binds the closure in snapshot order: entry flag and
  // parameters first, then each snapshot variable against the current state,
  // so later snapshot locations may mention earlier closure variables.
  substitution<B> s;
  s.set(sum.entry_var, entry);
  if (args.size() != sum.params.size())
    throw std::invalid_argument("apply_summary: argument count mismatch for " + sum.fn);
  for (std::size_t i = 0; i < sum.params.size(); ++i) {
    const param_slot<B>& ps = sum.params[i];
    const arg_bundle<B>& a = args[i];
    if ((ps.srt == ir::psort::word_array) != a.is_array)
      throw std::invalid_argument("apply_summary: array/scalar mismatch for " + ps.name);
    if (a.is_array) {
      s.set(ps.len_var, sum_to_word(a.len));
      for (std::size_t j = 0; j < ps.elem_vars.size(); ++j)
        s.set(ps.elem_vars[j],
              j < a.elems.size() ? sum_to_word(a.elems[j]) : mk_lit_u64<B>(0));
    } else if (ps.srt == ir::psort::boolean) {
      s.set(ps.value_var, a.value->srt == sort::boolean
                              ? a.value
                              : mk_bin(op::ne, a.value, mk_lit_u64<B>(0)));
    } else {
      s.set(ps.value_var, sum_to_word(a.value));
    }
  }

  std::unordered_map<const enode<B>*, expr<B>> memo;
  auto S = [&](const expr<B>& e) { return subst_resite_rec<B>(e, s, depth, memo); };

  using SK = typename snapshot_entry<B>::kind;
  for (const auto& se : sum.snapshot.entries) {
    switch (se.k) {
      case SK::storage: s.set(se.var_id, st.storage.read(S(se.location))); break;
      case SK::balance: s.set(se.var_id, st.globals.balance); break;
      case SK::timestamp: s.set(se.var_id, st.globals.timestamp); break;
      case SK::gas: s.set(se.var_id, st.globals.gas_left); break;
      case SK::sender: s.set(se.var_id, st.globals.sender); break;
    }
  }

  expr<B> ok = S(sum.path_ok);
  expr<B> halt = S(sum.halted);
  expr<B> gas_used = S(sum.gas_template);
  bool truncated = sum.truncated;

  for (const auto& t : sum.triples)
    out.triples.push_back({t.o, S(t.lhs), S(t.rhs), S(t.result), S(t.guard), opt.slot});
  for (const auto& b : sum.branches) out.branches.push_back({S(b.guard), S(b.cond), opt.slot});

  for (const auto& e : sum.entries) {
    expr<B> g = S(e.guard);
    switch (e.k) {
      case summary_action::store: {
        expr<B> loc = S(e.loc);
        expr<B> val = S(e.val);
        st.storage.store(loc, val, g);
        trace_event<B> ev;
        ev.k = event_kind::store;
        ev.guard = g;
        ev.slot = opt.slot;
        ev.seq = out.trace.size();
        ev.loc = loc;
        ev.val = val;
        out.trace.push_back(std::move(ev));
        break;
      }
      case summary_action::call: {
        expr<B> gas_v = S(e.gas);
        expr<B> addr_v = S(e.addr);
        expr<B> val_v = S(e.value);
        std::uint32_t site = resite_call(e.site, depth);
        st.globals.balance =
            mk_ite(g, mk_bin(op::sub, st.globals.balance, val_v), st.globals.balance);
        trace_event<B> ev;
        ev.k = event_kind::call;
        ev.guard = g;
        ev.slot = opt.slot;
        ev.seq = out.trace.size();
        ev.gas = gas_v;
        ev.addr = addr_v;
        ev.value = val_v;
        ev.ret = mk_app<B>(ufn::call_ret, site, {gas_v, addr_v, val_v});
        ev.site = site;
        out.trace.push_back(std::move(ev));

        // A transfer carrying more than the stipend hands control to its
        // recipient, who may call straight back in before this entry's
        // successors replay; expanding here keeps the interleaving faithful.
        bool stipend_only = gas_v->is_lit() && gas_v->val <= word<B>(opt.gas.call_stipend);
        if (depth < opt.reentrancy_depth && !stipend_only) {
          apply_frame_outcome<B> inner = apply_rec(sum, args, st, g, depth + 1, opt, out);
          gas_used = mk_bin(op::add, gas_used,
                            mk_ite(g, inner.gas_used, mk_lit_u64<B>(0)));
          // An inner self-destruct only sticks if the outer frame commits.
          halt = mk_or(halt, mk_and(inner.halt, ok));
        }
        break;
      }
      case summary_action::destruct: {
        trace_event<B> ev;
        ev.k = event_kind::call;
        ev.guard = g;
        ev.slot = opt.slot;
        ev.seq = out.trace.size();
        ev.gas = mk_lit_u64<B>(0);
        ev.addr = S(e.addr);
        ev.value = st.globals.balance;  // whatever is left at this point
        ev.ret = mk_lit_u64<B>(0);
        ev.from_selfdestruct = true;
        out.trace.push_back(std::move(ev));
        st.globals.balance = mk_ite(g, mk_lit_u64<B>(0), st.globals.balance);
        break;
      }
    }
  }

  invocation_info<B> info;
  info.slot = opt.slot;
  info.depth = depth;
  info.fn = sum.fn;
  info.gas_used = gas_used;
  info.path_ok = ok;
  info.truncated = truncated;
  out.invocations.push_back(std::move(info));
  return {ok, halt, gas_used};
}

}  // namespace detail

// Applies a summary to the current state: substitutes the closure, replays
// the entries (storage writes, balance movement, trace events) and expands
// re-entrant calls by applying the same summary at the call point.
template <unsigned B>
eval_result<B> apply_summary(const method_summary<B>& sum,
                             const std::vector<arg_bundle<B>>& args, program_state<B>& st,
                             const apply_options<B>& opt = {}) {
  eval_result<B> out;
  expr<B> entry = opt.entry_guard ? opt.entry_guard : mk_true<B>();
  detail::apply_frame_outcome<B> top = detail::apply_rec<B>(sum, args, st, entry, 0, opt, out);
  out.path_ok = top.ok;
  out.halted = top.halt;
  out.truncated = sum.truncated;
  return out;
}

// ---------------------------------------------------------------------------
// Rendering, for logs and for golden tests. Storage locations print through
// the contract's slot declarations: plain slots by name, hashed cells as
// name[key].

template <unsigned B>
std::string render_location(const expr<B>& loc, const var_pool& pool,
                            const ir::contract<B>& c) {
  std::uint64_t n_slots = static_cast<std::uint64_t>(c.slots.size());
  if (loc->is_lit() && n_slots > 0 && loc->val < word<B>(n_slots))
    return c.slots[loc->val.low_u64()].name;
  if (loc->o == op::app && loc->fn == ufn::sha3 && loc->kids.size() == 2 &&
      loc->kids[0]->is_lit() && n_slots > 0 && loc->kids[0]->val < word<B>(n_slots))
    return c.slots[loc->kids[0]->val.low_u64()].name + "[" + to_string(loc->kids[1], pool) +
           "]";
  return to_string(loc, pool);
}

template <unsigned B>
std::string to_string(const summary_entry<B>& e, const var_pool& pool,
                      const ir::contract<B>& c) {
  std::string out;
  switch (e.k) {
    case summary_action::store:
      out = "sum-sstore(" + render_location(e.loc, pool, c) + ", " + to_string(e.val, pool) + ")";
      break;
    case summary_action::call:
      out = "sum-call(" + to_string(e.gas, pool) + ", " + to_string(e.addr, pool) + ", " +
            to_string(e.value, pool) + ")";
      break;
    case summary_action::destruct:
      out = "sum-selfdestruct(" + to_string(e.addr, pool) + ")";
      break;
  }
  return out + " @ " + to_string(e.guard, pool);
}

}  // namespace casynth
