#pragma once

// Symbolic evaluator: merging (guarded-update) execution of one method
// invocation. Both sides of every branch are evaluated in a single walk and
// writes merge via ite on the path condition, so a method is evaluated once
// no matter how many paths it has. Loops run as bounded passes: a backward
// jump routes its inflow guard to the *next* pass, and whatever inflow
// remains after the last pass becomes an unwinding revert (flagged, never
// silent). Revert edges collect into a disjunction R; at invocation exit the
// journal writes and trace events of this invocation are weakened by !R and
// the balance is restored under R. Gas is charged per executed statement
// occurrence under its guard and stands even when the invocation reverts.

#include "gas.hpp"
#include "ir.hpp"
#include "state.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace casynth {

enum class event_kind : std::uint8_t { store, call };

// One persistent-effect occurrence. A selfdestruct appears as a call-kind
// event moving the whole remaining balance (gas operand 0, no return app),
// marked so the unchecked-send query can skip its vacuous return value.
template <unsigned B>
struct trace_event {
  event_kind k = event_kind::store;
  expr<B> guard;  // full path condition, revert-adjusted at finalize
  std::size_t slot = 0;
  std::size_t seq = 0;
  // store
  expr<B> loc, val;
  // call
  expr<B> gas, addr, value, ret;
  std::uint32_t site = 0;
  bool from_selfdestruct = false;
};

// Every {+,*} evaluation, recorded so overflow queries have a finite
// enumeration domain.
template <unsigned B>
struct arith_triple {
  op o = op::add;
  expr<B> lhs, rhs, result;
  expr<B> guard;
  std::size_t slot = 0;
};

// Every jumpi occurrence (condition in boolean form).
template <unsigned B>
struct branch_event {
  expr<B> guard, cond;
  std::size_t slot = 0;
};

template <unsigned B>
struct invocation_info {
  std::size_t slot = 0;
  unsigned depth = 0;  // 0 = attack transaction, 1 = re-entered frame
  std::string fn;
  expr<B> gas_used;  // total charged to this frame, re-entered usage included
  expr<B> path_ok;   // negation of this frame's revert disjunction
  bool truncated = false;
};

template <unsigned B>
struct eval_result {
  std::vector<trace_event<B>> trace;
  std::vector<arith_triple<B>> triples;
  std::vector<branch_event<B>> branches;
  std::vector<invocation_info<B>> invocations;
  expr<B> path_ok;  // top frame
  expr<B> halted;   // guard under which the contract destroyed itself
  bool truncated = false;

  // Fold another invocation's result after this one (multi-transaction runs).
  void append(eval_result&& o) {
    for (auto& e : o.trace) {
      e.seq = trace.size();
      trace.push_back(std::move(e));
    }
    for (auto& t : o.triples) triples.push_back(std::move(t));
    for (auto& b : o.branches) branches.push_back(std::move(b));
    for (auto& i : o.invocations) invocations.push_back(std::move(i));
    path_ok = path_ok ? mk_and(path_ok, o.path_ok) : o.path_ok;
    halted = halted ? mk_or(halted, o.halted) : o.halted;
    truncated = truncated || o.truncated;
  }
};

// Argument to one formal parameter. Scalars carry a value expression; arrays
// carry a length, up to C element expressions, and a literal memory base at
// which the elements are laid out word by word before the body runs.
template <unsigned B>
struct arg_bundle {
  expr<B> value;
  bool is_array = false;
  expr<B> len;
  std::vector<expr<B>> elems;
  word<B> mem_base{0};

  static arg_bundle scalar(expr<B> v) {
    arg_bundle a;
    a.value = std::move(v);
    return a;
  }
  static arg_bundle array(expr<B> len, std::vector<expr<B>> elems, word<B> base) {
    arg_bundle a;
    a.is_array = true;
    a.len = std::move(len);
    a.elems = std::move(elems);
    a.mem_base = base;
    return a;
  }
};

// Distinct literal base addresses for array parameters, far from scratch
// memory a body would plausibly index from zero.
template <unsigned B>
word<B> default_array_base(std::size_t param_index) {
  return word<B>(0x10000 + 0x1000 * static_cast<std::uint64_t>(param_index));
}

// Call-site identity shared by the symbolic evaluator and the concrete
// replayer; the return-value function symbol is keyed by it.
inline std::uint32_t call_site(std::size_t fn_idx, unsigned depth, std::size_t stmt_idx) {
  return static_cast<std::uint32_t>((fn_idx << 20) | (std::size_t(depth) << 16) | stmt_idx);
}

// Same site, different frame depth. Summary application re-tags the call
// sites baked into a template so a re-entered frame mints the same return
// symbols direct evaluation would.
inline std::uint32_t resite_call(std::uint32_t site, unsigned depth) {
  return (site & ~(0xFu << 16)) | (std::uint32_t(depth) << 16);
}

namespace detail {

// Whether guard g carries c (or its negation) as a conjunct on its and-spine.
// Guards are threaded as shared nodes, so pointer identity is enough.
template <unsigned B>
bool guard_has_conjunct(const expr<B>& g, const enode<B>* c, bool negated) {
  if (!negated && g.get() == c) return true;
  if (negated && g->o == op::log_not && g->kids[0].get() == c) return true;
  if (g->o == op::log_and)
    return guard_has_conjunct(g->kids[0], c, negated) ||
           guard_has_conjunct(g->kids[1], c, negated);
  return false;
}

// A value read under inflow guard g: any ite selected by one of g's own
// conjuncts collapses. This keeps an unrolled loop counter literal along
// the live iteration path instead of a tower of merge ites, which in turn
// keeps array element loads on exact seeded addresses.
template <unsigned B>
expr<B> select_under(const expr<B>& g, expr<B> v) {
  while (v->o == op::ite) {
    if (guard_has_conjunct(g, v->kids[0].get(), false))
      v = v->kids[1];
    else if (guard_has_conjunct(g, v->kids[0].get(), true))
      v = v->kids[2];
    else
      break;
  }
  return v;
}

}  // namespace detail

template <unsigned B>
struct eval_options {
  unsigned unroll = 4;             // pass budget for backward jumps
  unsigned reentrancy_depth = 1;   // re-inline bound at call sites
  word<B> gas_budget{100000};      // per-transaction budget (read by `gas`)
  gas_table gas{};
  std::size_t slot = 0;            // attack position stamped on the metadata
  expr<B> entry_guard;             // null means unconditional
};

template <unsigned B>
class evaluator {
 public:
  evaluator(const ir::contract<B>& c, var_pool& pool, program_state<B>& st,
            const eval_options<B>& opt)
      : c_(c), pool_(pool), st_(st), opt_(opt) {}

  eval_result<B> run(const ir::function_def<B>& f, const std::vector<arg_bundle<B>>& args) {
    eval_result<B> out;
    out.path_ok = mk_true<B>();
    out.halted = mk_false<B>();
    expr<B> entry = opt_.entry_guard ? opt_.entry_guard : mk_true<B>();
    frame_outcome top = run_invocation(f, args, entry, 0, mk_lit<B>(opt_.gas_budget), out);
    out.path_ok = top.path_ok;
    out.halted = top.halt;
    out.truncated = top.truncated;
    return out;
  }

 private:
  struct frame {
    std::unordered_map<std::string, expr<B>> regs;
    std::shared_ptr<memory_store<B>> mem;
  };

  struct frame_outcome {
    expr<B> path_ok;
    expr<B> halt;
    expr<B> gas_used;
    bool truncated = false;
  };

  // ---- expression evaluation -------------------------------------------

  expr<B> to_word(const expr<B>& e) const {
    if (e->srt == sort::word) return e;
    return mk_ite(e, mk_lit_u64<B>(1), mk_lit_u64<B>(0));
  }

  expr<B> to_bool(const expr<B>& e) const {
    if (e->srt == sort::boolean) return e;
    return mk_bin(op::ne, e, mk_lit_u64<B>(0));
  }

  expr<B> reg_read(const frame& fr, const std::string& name) const {
    auto it = fr.regs.find(name);
    if (it != fr.regs.end()) return it->second;
    // Only reachable on paths the definedness validator already rejects or
    // under guards that are unsatisfiable at runtime; a zero is harmless.
    return mk_lit_u64<B>(0);
  }

  void reg_write(frame& fr, const std::string& name, const expr<B>& val,
                 const expr<B>& g) {
    auto it = fr.regs.find(name);
    if (g->is_true() || it == fr.regs.end()) {
      // A first definition lands unconditionally: every path that could read
      // the register without passing the write is use-before-def, which the
      // validator rejects up front. Keeping the raw value here stops one
      // guarded definition from wrapping the whole dataflow in ites.
      fr.regs[name] = val;
      return;
    }
    fr.regs[name] = mk_ite(g, val, it->second);
  }

  expr<B> eval_expr(const ir::iexpr<B>& e, const frame& fr, const expr<B>& g,
                    eval_result<B>& out) {
    using EK = typename ir::iexpr<B>::kind;
    switch (e.k) {
      case EK::constant:
        return mk_lit<B>(e.c);
      case EK::ident:
        return detail::select_under(g, reg_read(fr, e.name));
      case EK::msg_sender:
        return st_.globals.sender;
      case EK::unop:
        return mk_not(to_bool(eval_expr(e.kids[0], fr, g, out)));
      case EK::binop: {
        if (e.o == op::log_and || e.o == op::log_or) {
          expr<B> a = to_bool(eval_expr(e.kids[0], fr, g, out));
          expr<B> b = to_bool(eval_expr(e.kids[1], fr, g, out));
          return e.o == op::log_and ? mk_and(a, b) : mk_or(a, b);
        }
        expr<B> a = to_word(eval_expr(e.kids[0], fr, g, out));
        expr<B> b = to_word(eval_expr(e.kids[1], fr, g, out));
        expr<B> r = mk_bin(e.o, a, b);
        if (e.o == op::add || e.o == op::mul)
          out.triples.push_back({e.o, a, b, r, g, opt_.slot});
        return r;
      }
    }
    throw std::logic_error("eval_expr: bad expression kind");
  }

  // Storage key to location: declared plain slot -> literal slot index;
  // declared map -> sha3 app over (slot index, key); otherwise the named
  // register already holds a computed location.
  expr<B> location_of(const ir::storage_key<B>& key, const frame& fr, const expr<B>& g,
                      eval_result<B>& out) {
    const ir::slot_decl<B>* d = c_.find_slot(key.base);
    if (!d) return to_word(detail::select_under(g, reg_read(fr, key.base)));
    auto idx = static_cast<std::uint64_t>(d - c_.slots.data());
    if (d->srt == ir::slot_sort::map) {
      expr<B> k = to_word(eval_expr(*key.index, fr, g, out));
      return mk_app<B>(ufn::sha3, 0, {mk_lit_u64<B>(idx), k});
    }
    return mk_lit_u64<B>(idx);
  }

  // ---- invocation -------------------------------------------------------

  frame_outcome run_invocation(const ir::function_def<B>& f,
                               const std::vector<arg_bundle<B>>& args, expr<B> entry,
                               unsigned depth, expr<B> budget, eval_result<B>& out) {
    if (args.size() != f.params.size())
      throw std::invalid_argument("eval_function: argument count mismatch for " + f.name);

    frame fr;
    fr.mem = std::make_shared<memory_store<B>>(pool_);
    for (std::size_t i = 0; i < args.size(); ++i) {
      const auto& [pname, psrt] = f.params[i];
      const arg_bundle<B>& a = args[i];
      if ((psrt == ir::psort::word_array) != a.is_array)
        throw std::invalid_argument("eval_function: array/scalar mismatch for " + pname);
      if (a.is_array) {
        fr.regs[pname + ".len"] = to_word(a.len);
        fr.regs[pname + ".ptr"] = mk_lit<B>(a.mem_base);
        for (std::size_t j = 0; j < a.elems.size(); ++j)
          fr.mem->store(mk_lit<B>(a.mem_base + word<B>(static_cast<std::uint64_t>(j))),
                        to_word(a.elems[j]), mk_true<B>());
      } else {
        fr.regs[pname] = to_word(a.value);
      }
    }

    std::size_t fn_idx = 0;
    for (std::size_t i = 0; i < c_.functions.size(); ++i)
      if (&c_.functions[i] == &f) fn_idx = i;

    const std::size_t journal_start = st_.storage.size();
    const std::size_t events_start = out.trace.size();
    const expr<B> balance_entry = st_.globals.balance;

    expr<B> revert = mk_false<B>();
    expr<B> halt = mk_false<B>();
    expr<B> gas_used = mk_lit_u64<B>(0);
    bool truncated = false;

    auto charge = [&](const expr<B>& g, std::uint64_t units) {
      gas_used = mk_bin(op::add, gas_used,
                        mk_ite(g, mk_lit_u64<B>(units), mk_lit_u64<B>(0)));
    };
    auto merge_into = [](std::vector<expr<B>>& flow, std::size_t i, const expr<B>& g) {
      flow[i] = flow[i] ? mk_or(flow[i], g) : g;
    };

    const std::size_t n = f.body.size();
    std::vector<expr<B>> inflow(n + 1), backflow(n);
    if (n > 0) inflow[0] = entry;

    using K = typename ir::stmt<B>::kind;
    // `unroll` bounds how many times any backward-jump body can run. The
    // last slot's continuation always lands in the leftover revert (its
    // header re-check would only happen in the next, never-run pass), so
    // live loop iterations top out at unroll - 1.
    for (unsigned pass = 0; pass < std::max(1u, opt_.unroll); ++pass) {
      bool any = false;
      for (const auto& g : inflow)
        if (g && !g->is_false()) { any = true; break; }
      if (!any) break;

      for (std::size_t i = 0; i < n; ++i) {
        expr<B> g = inflow[i];
        if (!g || g->is_false()) continue;
        const ir::stmt<B>& s = f.body[i];
        // selfdestruct halts its frame; jumps route explicitly; everything
        // else falls through.
        bool falls = s.k != K::jump && s.k != K::selfdestruct;
        charge(g, opt_.gas.cost(s));

        switch (s.k) {
          case K::assign:
            reg_write(fr, s.dst, to_word(eval_expr(s.ops[0], fr, g, out)), g);
            break;
          case K::mload: {
            expr<B> addr = to_word(eval_expr(s.ops[0], fr, g, out));
            reg_write(fr, s.dst, fr.mem->read(addr), g);
            break;
          }
          case K::mstore: {
            expr<B> addr = to_word(eval_expr(s.ops[0], fr, g, out));
            expr<B> val = to_word(eval_expr(s.ops[1], fr, g, out));
            fr.mem->store(addr, val, g);
            break;
          }
          case K::sload: {
            expr<B> loc = location_of(s.skey, fr, g, out);
            reg_write(fr, s.dst, st_.storage.read(loc), g);
            break;
          }
          case K::sstore: {
            expr<B> loc = location_of(s.skey, fr, g, out);
            expr<B> val = to_word(eval_expr(s.ops[0], fr, g, out));
            st_.storage.store(loc, val, g);
            trace_event<B> ev;
            ev.k = event_kind::store;
            ev.guard = g;
            ev.slot = opt_.slot;
            ev.seq = out.trace.size();
            ev.loc = loc;
            ev.val = val;
            out.trace.push_back(std::move(ev));
            break;
          }
          case K::sha3: {
            expr<B> a = to_word(eval_expr(s.ops[0], fr, g, out));
            expr<B> b = to_word(eval_expr(s.ops[1], fr, g, out));
            reg_write(fr, s.dst, mk_app<B>(ufn::sha3, 0, {a, b}), g);
            break;
          }
          case K::call: {
            expr<B> gas_v = to_word(eval_expr(s.ops[0], fr, g, out));
            expr<B> addr_v = to_word(eval_expr(s.ops[1], fr, g, out));
            expr<B> val_v = to_word(eval_expr(s.ops[2], fr, g, out));
            std::uint32_t site = call_site(fn_idx, depth, i);
            expr<B> ret = mk_app<B>(ufn::call_ret, site, {gas_v, addr_v, val_v});
            reg_write(fr, s.dst, ret, g);
            st_.globals.balance =
                mk_ite(g, mk_bin(op::sub, st_.globals.balance, val_v), st_.globals.balance);
            trace_event<B> ev;
            ev.k = event_kind::call;
            ev.guard = g;
            ev.slot = opt_.slot;
            ev.seq = out.trace.size();
            ev.gas = gas_v;
            ev.addr = addr_v;
            ev.value = val_v;
            ev.ret = ret;
            ev.site = site;
            out.trace.push_back(std::move(ev));

            // Re-entry: the recipient of a transfer carrying more than the
            // stipend may call straight back into the same method before the
            // outer frame continues.
            bool stipend_only =
                gas_v->is_lit() && gas_v->val <= word<B>(opt_.gas.call_stipend);
            if (depth < opt_.reentrancy_depth && !stipend_only) {
              frame_outcome inner = run_invocation(f, args, g, depth + 1, gas_v, out);
              gas_used = mk_bin(op::add, gas_used,
                                mk_ite(g, inner.gas_used, mk_lit_u64<B>(0)));
              halt = mk_or(halt, inner.halt);
              truncated = truncated || inner.truncated;
            }
            break;
          }
          case K::selfdestruct: {
            expr<B> addr_v = to_word(eval_expr(s.ops[0], fr, g, out));
            trace_event<B> ev;
            ev.k = event_kind::call;
            ev.guard = g;
            ev.slot = opt_.slot;
            ev.seq = out.trace.size();
            ev.gas = mk_lit_u64<B>(0);
            ev.addr = addr_v;
            ev.value = st_.globals.balance;
            ev.ret = mk_lit_u64<B>(0);
            ev.from_selfdestruct = true;
            out.trace.push_back(std::move(ev));
            st_.globals.balance = mk_ite(g, mk_lit_u64<B>(0), st_.globals.balance);
            halt = mk_or(halt, g);
            break;
          }
          case K::read_balance:
            reg_write(fr, s.dst, st_.globals.balance, g);
            break;
          case K::read_gas:
            reg_write(fr, s.dst, mk_bin(op::sub, budget, gas_used), g);
            break;
          case K::read_address:
            reg_write(fr, s.dst, st_.globals.self_address, g);
            break;
          case K::read_timestamp:
            reg_write(fr, s.dst, st_.globals.timestamp, g);
            break;
          case K::nop:
            break;
          case K::jump: {
            if (s.target == ir::revert_target)
              revert = mk_or(revert, g);
            else if (s.target > i)
              merge_into(inflow, s.target, g);
            else
              merge_into(backflow, s.target, g);
            break;
          }
          case K::jumpi: {
            expr<B> cond = to_bool(eval_expr(s.ops[0], fr, g, out));
            out.branches.push_back({g, cond, opt_.slot});
            expr<B> taken = mk_and(g, cond);
            if (!taken->is_false()) {
              if (s.target == ir::revert_target)
                revert = mk_or(revert, taken);
              else if (s.target > i)
                merge_into(inflow, s.target, taken);
              else
                merge_into(backflow, s.target, taken);
            }
            falls = false;
            expr<B> fall = mk_and(g, mk_not(cond));
            if (!fall->is_false()) merge_into(inflow, i + 1, fall);
            break;
          }
        }
        if (falls) merge_into(inflow, i + 1, g);
      }

      inflow.assign(n + 1, expr<B>{});
      for (std::size_t i = 0; i < n; ++i) inflow[i] = backflow[i];
      backflow.assign(n, expr<B>{});
    }

    // Paths still wanting another pass exceed the unroll budget: treat them
    // as reverted and say so.
    expr<B> leftover = mk_false<B>();
    for (std::size_t i = 0; i < n; ++i)
      if (inflow[i]) leftover = mk_or(leftover, inflow[i]);
    if (!leftover->is_false()) {
      revert = mk_or(revert, leftover);
      truncated = true;
    }

    // Finalize: revert unwinds this invocation's writes, events, balance and
    // any committed selfdestruct, but the gas it burned stays burned.
    expr<B> ok = mk_not(revert);
    st_.storage.restrict_writes(journal_start, ok);
    for (std::size_t i = events_start; i < out.trace.size(); ++i)
      out.trace[i].guard = mk_and(out.trace[i].guard, ok);
    st_.globals.balance = mk_ite(revert, balance_entry, st_.globals.balance);
    halt = mk_and(halt, ok);

    invocation_info<B> info;
    info.slot = opt_.slot;
    info.depth = depth;
    info.fn = f.name;
    info.gas_used = gas_used;
    info.path_ok = ok;
    info.truncated = truncated;
    out.invocations.push_back(std::move(info));

    // Expose the top frame's registers/memory for inspection.
    if (depth == 0) {
      st_.registers = fr.regs;
      st_.memory = fr.mem;
    }
    return {ok, halt, gas_used, truncated};
  }

  const ir::contract<B>& c_;
  var_pool& pool_;
  program_state<B>& st_;
  const eval_options<B>& opt_;
};

// Evaluate one invocation of `f` against `st` (mutating storage, globals and
// the inspection registers). Trace, arithmetic and branch metadata land in
// the result; path_ok is the non-revert condition of the invocation.
template <unsigned B>
eval_result<B> eval_function(const ir::contract<B>& c, const ir::function_def<B>& f,
                             const std::vector<arg_bundle<B>>& args, program_state<B>& st,
                             var_pool& pool, const eval_options<B>& opt = {}) {
  evaluator<B> ev(c, pool, st, opt);
  return ev.run(f, args);
}

}  // namespace casynth
