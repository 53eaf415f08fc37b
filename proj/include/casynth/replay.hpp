#pragma once

// Fully concrete execution of an attack: every transaction runs with real
// control flow, wrap-around arithmetic and upfront gas charging. Reverts
// (explicit or out-of-gas) roll back that invocation's storage and balance;
// gas stays burned. External effects whose values the language leaves open
// (hash results, call return values) come from pluggable oracles so a replay
// can realize exactly the world a solver model described.

#include "gas.hpp"
#include "interp.hpp"
#include "ir.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace casynth {

struct replay_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <unsigned B>
struct concrete_arg {
  bool is_array = false;
  word<B> scalar;
  std::vector<word<B>> elems;

  static concrete_arg of(word<B> v) {
    concrete_arg a;
    a.scalar = v;
    return a;
  }
  static concrete_arg array(std::vector<word<B>> xs) {
    concrete_arg a;
    a.is_array = true;
    a.elems = std::move(xs);
    return a;
  }
};

template <unsigned B>
struct attack_call {
  std::string fn;
  std::vector<concrete_arg<B>> args;
};

template <unsigned B>
struct concrete_attack {
  std::vector<attack_call<B>> calls;
};

template <unsigned B>
struct replay_env {
  word<B> sender{0xA11CE};
  word<B> timestamp{1000000};
  word<B> victim_balance{1000000};
  word<B> gas_budget{100000};
  unsigned reentrancy_depth = 1;
  gas_table gas{};
  std::uint64_t step_cap = 1u << 20;  // hard bound on executed statements
  // Oracles; when empty, sha3 falls back to a builtin mixer and calls
  // return 1.
  std::function<word<B>(word<B>, word<B>)> sha3_fn;
  std::function<word<B>(std::uint32_t, word<B>, word<B>, word<B>)> call_fn;
};

template <unsigned B>
struct concrete_event {
  event_kind k = event_kind::store;
  std::size_t slot = 0;
  unsigned depth = 0;
  // store
  word<B> loc, val;
  // call
  word<B> gas, addr, value, ret;
  std::uint32_t site = 0;
  bool from_selfdestruct = false;
};

template <unsigned B>
struct invocation_outcome {
  std::size_t slot = 0;
  std::string fn;
  bool reverted = false;
  bool out_of_gas = false;
  word<B> gas_used{0};
};

template <unsigned B>
struct replay_result {
  std::map<word<B>, word<B>> storage;  // location -> value, zeroes elided
  word<B> balance{0};
  bool destroyed = false;
  std::vector<concrete_event<B>> trace;
  std::vector<invocation_outcome<B>> outcomes;  // one per attack transaction
};

// Builtin sha3 stand-in: a deterministic word-sized mixer over both inputs.
// Not a real hash; collisions merely have to be unlikely within a replay.
template <unsigned B>
word<B> builtin_sha3(const word<B>& a, const word<B>& b) {
  std::uint64_t h1 = a.hash() * 0x9e3779b97f4a7c15ull + 0x100000001b3ull;
  std::uint64_t h2 = b.hash() * 0xc2b2ae3d27d4eb4full + h1;
  std::uint64_t h3 = (h1 ^ (h2 >> 29)) * 0xbf58476d1ce4e5b9ull;
  std::uint64_t h4 = (h2 ^ (h3 >> 32)) * 0x94d049bb133111ebull;
  word<B> r{h4};
  r = r + word<B>(h3) * word<B>::pow2(64);
  r = r + word<B>(h2) * word<B>::pow2(128);
  r = r + word<B>(h1) * word<B>::pow2(192);
  return r;
}

template <unsigned B>
class replayer {
 public:
  replayer(const ir::contract<B>& c, const replay_env<B>& env) : c_(c), env_(env) {
    for (std::size_t i = 0; i < c.slots.size(); ++i)
      if (c.slots[i].srt != ir::slot_sort::map && !c.slots[i].init.is_zero())
        res_.storage[word<B>(static_cast<std::uint64_t>(i))] = c.slots[i].init;
    res_.balance = env.victim_balance;
  }

  replay_result<B> run(const concrete_attack<B>& atk) {
    for (std::size_t slot = 0; slot < atk.calls.size(); ++slot) {
      const attack_call<B>& tx = atk.calls[slot];
      const ir::function_def<B>* f = c_.find_function(tx.fn);
      if (!f || !f->is_public)
        throw replay_error("attack names unknown or non-public function '" + tx.fn + "'");
      if (tx.args.size() != f->params.size())
        throw replay_error("argument count mismatch for '" + tx.fn + "'");
      invocation_outcome<B> oc;
      oc.slot = slot;
      oc.fn = tx.fn;
      frame_result r = run_invocation(*f, tx.args, slot, 0, env_.gas_budget);
      oc.reverted = r.reverted;
      oc.out_of_gas = r.out_of_gas;
      oc.gas_used = r.gas_used;
      res_.outcomes.push_back(std::move(oc));
    }
    return std::move(res_);
  }

 private:
  struct frame_result {
    bool reverted = false;
    bool out_of_gas = false;
    word<B> gas_used{0};
  };

  word<B> sha3(const word<B>& a, const word<B>& b) const {
    return env_.sha3_fn ? env_.sha3_fn(a, b) : builtin_sha3<B>(a, b);
  }

  frame_result run_invocation(const ir::function_def<B>& f,
                              const std::vector<concrete_arg<B>>& args, std::size_t slot,
                              unsigned depth, word<B> budget) {
    // rollback points
    auto storage_entry = res_.storage;
    word<B> balance_entry = res_.balance;
    bool destroyed_entry = res_.destroyed;
    std::size_t trace_entry = res_.trace.size();

    std::unordered_map<std::string, word<B>> regs;
    std::map<word<B>, word<B>> memory;
    for (std::size_t i = 0; i < args.size(); ++i) {
      const auto& [pname, psrt] = f.params[i];
      const concrete_arg<B>& a = args[i];
      if ((psrt == ir::psort::word_array) != a.is_array)
        throw replay_error("array/scalar mismatch for parameter '" + pname + "'");
      if (a.is_array) {
        word<B> base = default_array_base<B>(i);
        regs[pname + ".len"] = word<B>(static_cast<std::uint64_t>(a.elems.size()));
        regs[pname + ".ptr"] = base;
        for (std::size_t j = 0; j < a.elems.size(); ++j)
          memory[base + word<B>(static_cast<std::uint64_t>(j))] = a.elems[j];
      } else {
        regs[pname] = a.scalar;
      }
    }

    std::size_t fn_idx = 0;
    for (std::size_t i = 0; i < c_.functions.size(); ++i)
      if (&c_.functions[i] == &f) fn_idx = i;

    word<B> gas_used{0};
    auto rollback = [&] {
      res_.storage = std::move(storage_entry);
      res_.balance = balance_entry;
      res_.destroyed = destroyed_entry;
      res_.trace.resize(trace_entry);
    };

    auto reg = [&](const std::string& n) -> word<B> {
      auto it = regs.find(n);
      return it != regs.end() ? it->second : word<B>(0);
    };

    std::function<word<B>(const ir::iexpr<B>&)> ev = [&](const ir::iexpr<B>& e) -> word<B> {
      using EK = typename ir::iexpr<B>::kind;
      switch (e.k) {
        case EK::constant: return e.c;
        case EK::ident: return reg(e.name);
        case EK::msg_sender: return env_.sender;
        case EK::unop: return word<B>(ev(e.kids[0]).is_zero() ? 1 : 0);
        case EK::binop: {
          word<B> a = ev(e.kids[0]);
          word<B> b = ev(e.kids[1]);
          switch (e.o) {
            case op::add: return a + b;
            case op::sub: return a - b;
            case op::mul: return a * b;
            case op::udiv: return a.udiv(b);
            case op::umod: return a.umod(b);
            case op::bit_and: return a & b;
            case op::bit_or: return a | b;
            case op::log_and: return word<B>(!a.is_zero() && !b.is_zero() ? 1 : 0);
            case op::log_or: return word<B>(!a.is_zero() || !b.is_zero() ? 1 : 0);
            case op::eq: return word<B>(a == b ? 1 : 0);
            case op::ne: return word<B>(a != b ? 1 : 0);
            case op::ult: return word<B>(a < b ? 1 : 0);
            case op::ule: return word<B>(a <= b ? 1 : 0);
            case op::ugt: return word<B>(a > b ? 1 : 0);
            case op::uge: return word<B>(a >= b ? 1 : 0);
            default: throw replay_error("bad binary operator in expression");
          }
        }
      }
      throw replay_error("bad expression kind");
    };

    auto loc_of = [&](const ir::storage_key<B>& key) -> word<B> {
      const ir::slot_decl<B>* d = c_.find_slot(key.base);
      if (!d) return reg(key.base);
      auto idx = static_cast<std::uint64_t>(d - c_.slots.data());
      if (d->srt == ir::slot_sort::map) return sha3(word<B>(idx), ev(*key.index));
      return word<B>(idx);
    };

    using K = typename ir::stmt<B>::kind;
    std::size_t pc = 0;
    const std::size_t n = f.body.size();
    while (pc < n) {
      if (++steps_ > env_.step_cap)
        throw replay_error("step cap exceeded in '" + f.name + "'");
      const ir::stmt<B>& s = f.body[pc];
      gas_used = gas_used + word<B>(env_.gas.cost(s));
      if (gas_used > budget) {
        rollback();
        return {true, true, gas_used};
      }
      std::size_t next = pc + 1;

      switch (s.k) {
        case K::assign: regs[s.dst] = ev(s.ops[0]); break;
        case K::mload: {
          auto it = memory.find(ev(s.ops[0]));
          regs[s.dst] = it != memory.end() ? it->second : word<B>(0);
          break;
        }
        case K::mstore: memory[ev(s.ops[0])] = ev(s.ops[1]); break;
        case K::sload: {
          auto it = res_.storage.find(loc_of(s.skey));
          regs[s.dst] = it != res_.storage.end() ? it->second : word<B>(0);
          break;
        }
        case K::sstore: {
          word<B> loc = loc_of(s.skey);
          word<B> val = ev(s.ops[0]);
          res_.storage[loc] = val;
          concrete_event<B> e;
          e.k = event_kind::store;
          e.slot = slot;
          e.depth = depth;
          e.loc = loc;
          e.val = val;
          res_.trace.push_back(e);
          break;
        }
        case K::sha3: regs[s.dst] = sha3(ev(s.ops[0]), ev(s.ops[1])); break;
        case K::call: {
          word<B> gas_v = ev(s.ops[0]);
          word<B> addr_v = ev(s.ops[1]);
          word<B> val_v = ev(s.ops[2]);
          std::uint32_t site = call_site(fn_idx, depth, pc);
          word<B> ret =
              env_.call_fn ? env_.call_fn(site, gas_v, addr_v, val_v) : word<B>(1);
          regs[s.dst] = ret;
          res_.balance = res_.balance - val_v;  // unchecked, wraps
          concrete_event<B> e;
          e.k = event_kind::call;
          e.slot = slot;
          e.depth = depth;
          e.gas = gas_v;
          e.addr = addr_v;
          e.value = val_v;
          e.ret = ret;
          e.site = site;
          res_.trace.push_back(e);
          if (depth < env_.reentrancy_depth && gas_v > word<B>(env_.gas.call_stipend)) {
            frame_result inner = run_invocation(f, args, slot, depth + 1, gas_v);
            gas_used = gas_used + inner.gas_used;
            if (gas_used > budget) {
              rollback();
              return {true, true, gas_used};
            }
          }
          break;
        }
        case K::selfdestruct: {
          word<B> addr_v = ev(s.ops[0]);
          concrete_event<B> e;
          e.k = event_kind::call;
          e.slot = slot;
          e.depth = depth;
          e.gas = word<B>(0);
          e.addr = addr_v;
          e.value = res_.balance;
          e.ret = word<B>(0);
          e.from_selfdestruct = true;
          res_.trace.push_back(e);
          res_.balance = word<B>(0);
          res_.destroyed = true;
          return {false, false, gas_used};  // frame halts, effects stand
        }
        case K::read_balance: regs[s.dst] = res_.balance; break;
        case K::read_gas: regs[s.dst] = budget - gas_used; break;
        case K::read_address: regs[s.dst] = word<B>(0xC0DE); break;
        case K::read_timestamp: regs[s.dst] = env_.timestamp; break;
        case K::nop: break;
        case K::jump:
          if (s.target == ir::revert_target) {
            rollback();
            return {true, false, gas_used};
          }
          next = s.target;
          break;
        case K::jumpi:
          if (!ev(s.ops[0]).is_zero()) {
            if (s.target == ir::revert_target) {
              rollback();
              return {true, false, gas_used};
            }
            next = s.target;
          }
          break;
      }
      pc = next;
    }
    return {false, false, gas_used};
  }

  const ir::contract<B>& c_;
  const replay_env<B>& env_;
  replay_result<B> res_;
  std::uint64_t steps_ = 0;
};

template <unsigned B>
replay_result<B> concrete_replay(const ir::contract<B>& c, const concrete_attack<B>& atk,
                                 const replay_env<B>& env = {}) {
  replayer<B> r(c, env);
  return r.run(atk);
}

}  // namespace casynth
