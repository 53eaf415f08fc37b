#pragma once

// Program states: guarded storage and memory journals over a concrete or
// fully-symbolic base, contract globals, and the snapshot bookkeeping that
// summary generation and reinterpretation share.

#include "ir.hpp"
#include "sym.hpp"
#include "word.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace casynth {

// Γ0 configuration. The attacker's address and the victim's funding are
// literals; the block timestamp is symbolic by default so timestamp queries
// can bind it; every invocation runs against a fixed gas budget.
template <unsigned B>
struct init_config {
  word<B> attacker_address{0xA11CE};
  word<B> victim_balance{1000000};
  word<B> gas_budget{100000};
  std::optional<word<B>> pinned_timestamp;  // literal when set, else symbolic
  std::optional<word<B>> pinned_sender;     // literal when set, else symbolic
};

// The location of a declared plain slot is its declaration index as a word
// literal; a map cell is the uninterpreted hash of (slot index, key).
template <unsigned B>
expr<B> slot_location(const ir::contract<B>& c, std::string_view slot) {
  for (std::size_t i = 0; i < c.slots.size(); ++i)
    if (c.slots[i].name == slot) return mk_lit<B>(word<B>(static_cast<std::uint64_t>(i)));
  throw std::logic_error("slot_location: unknown slot '" + std::string(slot) + "'");
}

template <unsigned B>
expr<B> map_location(const ir::contract<B>& c, std::string_view slot, const expr<B>& key) {
  return mk_app<B>(ufn::sha3, 0, {slot_location(c, slot), key});
}

// A snapshot variable standing for the entry value of one storage location
// or one global, recorded with the location template needed to reinterpret
// it against another state later. Creation order is preserved because later
// map-cell location templates may mention earlier snapshot variables.
template <unsigned B>
struct snapshot_entry {
  std::uint32_t var_id;
  enum class kind : std::uint8_t { storage, balance, timestamp, gas, sender } k;
  expr<B> location;  // storage only
};

template <unsigned B>
struct snapshot_book {
  std::vector<snapshot_entry<B>> entries;

  std::optional<std::uint32_t> find_storage(const expr<B>& loc) const {
    for (const auto& e : entries)
      if (e.k == snapshot_entry<B>::kind::storage && equal(e.location, loc)) return e.var_id;
    return std::nullopt;
  }
};

// Ordered journal of guarded writes over a base. Reads fold the journal
// newest-first into an ite chain; the equality test on locations folds
// syntactically identical locations (and distinct literals) for free.
template <unsigned B>
class storage_journal {
 public:
  struct write {
    expr<B> loc;
    expr<B> val;
    expr<B> guard;
  };

  // Concrete base: declared plain slots hold their initializers, everything
  // else (map cells, computed locations) reads zero.
  static storage_journal concrete_base(const ir::contract<B>& c) {
    storage_journal s;
    s.contract_ = &c;
    s.symbolic_base_ = false;
    return s;
  }

  // Fully-symbolic base: plain slots are bound to fresh snapshot variables
  // up front; map cells get on-demand snapshot variables on first read.
  static storage_journal symbolic_base(const ir::contract<B>& c, var_pool& pool,
                                       snapshot_book<B>& book) {
    storage_journal s;
    s.contract_ = &c;
    s.symbolic_base_ = true;
    s.pool_ = &pool;
    s.book_ = &book;
    for (std::size_t i = 0; i < c.slots.size(); ++i) {
      if (c.slots[i].srt == ir::slot_sort::map) continue;
      std::uint32_t id = pool.fresh(c.slots[i].name + "@0", sort::word,
                                    var_origin::storage_snapshot);
      expr<B> loc = mk_lit<B>(word<B>(static_cast<std::uint64_t>(i)));
      book.entries.push_back({id, snapshot_entry<B>::kind::storage, loc});
      s.base_cache_.push_back({loc, mk_var<B>(id, sort::word)});
    }
    return s;
  }

  void store(expr<B> loc, expr<B> val, expr<B> guard) {
    writes_.push_back({std::move(loc), std::move(val), std::move(guard)});
  }

  expr<B> read(const expr<B>& loc) const {
    expr<B> acc = base_read(loc);
    for (const auto& w : writes_) {
      expr<B> hit = mk_and(w.guard, mk_eq(w.loc, loc));
      acc = mk_ite(hit, w.val, acc);
    }
    return acc;
  }

  const std::vector<write>& writes() const { return writes_; }
  std::size_t size() const { return writes_.size(); }

  // Conjoin a condition into the guards of all writes appended at or after
  // `from` (revert handling at invocation finalize).
  void restrict_writes(std::size_t from, const expr<B>& cond) {
    for (std::size_t i = from; i < writes_.size(); ++i)
      writes_[i].guard = mk_and(writes_[i].guard, cond);
  }

  // Deduplicated list of written locations (structural identity).
  std::vector<expr<B>> written_locations() const {
    std::vector<expr<B>> out;
    for (const auto& w : writes_) {
      bool dup = false;
      for (const auto& l : out)
        if (equal(l, w.loc)) { dup = true; break; }
      if (!dup) out.push_back(w.loc);
    }
    return out;
  }

 private:
  expr<B> base_read(const expr<B>& loc) const {
    for (const auto& [l, v] : base_cache_)
      if (equal(l, loc)) return v;
    if (!symbolic_base_) {
      // a literal location naming a declared plain slot reads its initializer
      if (loc->is_lit()) {
        std::uint64_t idx = loc->val.low_u64();
        if (idx < contract_->slots.size() && loc->val == word<B>(idx) &&
            contract_->slots[idx].srt != ir::slot_sort::map)
          return mk_lit<B>(contract_->slots[idx].init);
      }
      return mk_lit<B>(word<B>(0));
    }
    std::uint32_t id = pool_->fresh("loc#" + std::to_string(book_->entries.size()) + "@0",
                                    sort::word, var_origin::storage_snapshot);
    book_->entries.push_back({id, snapshot_entry<B>::kind::storage, loc});
    base_cache_.push_back({loc, mk_var<B>(id, sort::word)});
    return base_cache_.back().second;
  }

  const ir::contract<B>* contract_ = nullptr;
  bool symbolic_base_ = false;
  var_pool* pool_ = nullptr;
  snapshot_book<B>* book_ = nullptr;
  mutable std::vector<std::pair<expr<B>, expr<B>>> base_cache_;
  std::vector<write> writes_;
};

// Volatile per-invocation memory: guarded keyed store with exact-match
// (structural) reads; a read with no matching prior write yields a fresh
// unconstrained variable.
template <unsigned B>
class memory_store {
 public:
  explicit memory_store(var_pool& pool) : pool_(&pool) {}

  void store(expr<B> addr, expr<B> val, expr<B> guard) {
    writes_.push_back({std::move(addr), std::move(val), std::move(guard)});
  }

  expr<B> read(const expr<B>& addr) {
    std::vector<const write*> hits;  // oldest first
    for (const auto& w : writes_)
      if (equal(w.addr, addr)) hits.push_back(&w);
    // unconditional latest write fully covers the read
    if (!hits.empty() && hits.back()->guard->is_true()) return hits.back()->val;
    expr<B> acc = fresh_read(addr);
    for (const write* w : hits) acc = mk_ite(w->guard, w->val, acc);
    return acc;
  }

 private:
  struct write {
    expr<B> addr;
    expr<B> val;
    expr<B> guard;
  };

  // Memory is deterministic: two reads of the same (structural) address with
  // no covering write in between must agree, so the fresh base variable is
  // memoized per address.
  expr<B> fresh_read(const expr<B>& addr) {
    for (const auto& [a, v] : fresh_) {
      if (equal(a, addr)) return v;
    }
    std::uint32_t id = pool_->fresh("mem#" + std::to_string(fresh_.size()), sort::word,
                                    var_origin::fresh_read);
    fresh_.push_back({addr, mk_var<B>(id, sort::word)});
    return fresh_.back().second;
  }

  var_pool* pool_;
  std::vector<write> writes_;
  std::vector<std::pair<expr<B>, expr<B>>> fresh_;
};

// Contract globals. The victim's own address stays a literal; balance,
// timestamp, and remaining gas are expressions (symbolic in summary mode).
template <unsigned B>
struct globals_state {
  expr<B> balance;
  expr<B> timestamp;
  expr<B> gas_left;
  expr<B> self_address;
  expr<B> sender;  // run-level attacker identity, shared by all invocations
};

template <unsigned B>
struct program_state {
  std::unordered_map<std::string, expr<B>> registers;
  std::shared_ptr<memory_store<B>> memory;  // reset per invocation
  storage_journal<B> storage;
  globals_state<B> globals;
};

// Γ0 for synthesis: concrete storage init, literal funding, symbolic
// timestamp (unless pinned), symbolic attacker identity (unless pinned).
template <unsigned B>
program_state<B> initial_state(const ir::contract<B>& c, var_pool& pool,
                               const init_config<B>& cfg) {
  program_state<B> st;
  st.memory = std::make_shared<memory_store<B>>(pool);
  st.storage = storage_journal<B>::concrete_base(c);
  st.globals.balance = mk_lit<B>(cfg.victim_balance);
  st.globals.gas_left = mk_lit<B>(cfg.gas_budget);
  st.globals.self_address = mk_lit<B>(word<B>(0xC0DE));
  if (cfg.pinned_timestamp) {
    st.globals.timestamp = mk_lit<B>(*cfg.pinned_timestamp);
  } else {
    std::uint32_t id = pool.fresh("timestamp", sort::word, var_origin::global_snapshot);
    st.globals.timestamp = mk_var<B>(id, sort::word);
  }
  if (cfg.pinned_sender) {
    st.globals.sender = mk_lit<B>(*cfg.pinned_sender);
  } else {
    std::uint32_t id = pool.fresh("msg.sender", sort::word, var_origin::attack_arg);
    st.globals.sender = mk_var<B>(id, sort::word);
  }
  return st;
}

// Fully-symbolic state for summary generation: every plain slot and every
// global bound to a fresh snapshot variable; map cells on demand.
template <unsigned B>
program_state<B> fully_symbolic_state(const ir::contract<B>& c, var_pool& pool,
                                      snapshot_book<B>& book) {
  program_state<B> st;
  st.memory = std::make_shared<memory_store<B>>(pool);
  st.storage = storage_journal<B>::symbolic_base(c, pool, book);

  auto global_var = [&](const char* name, typename snapshot_entry<B>::kind k) {
    std::uint32_t id = pool.fresh(std::string(name) + "@0", sort::word,
                                  var_origin::global_snapshot);
    book.entries.push_back({id, k, nullptr});
    return mk_var<B>(id, sort::word);
  };
  st.globals.balance = global_var("balance", snapshot_entry<B>::kind::balance);
  st.globals.timestamp = global_var("timestamp", snapshot_entry<B>::kind::timestamp);
  st.globals.gas_left = global_var("gas", snapshot_entry<B>::kind::gas);
  st.globals.self_address = mk_lit<B>(word<B>(0xC0DE));

  std::uint32_t sid = pool.fresh("msg.sender", sort::word, var_origin::attack_arg);
  book.entries.push_back({sid, snapshot_entry<B>::kind::sender, nullptr});
  st.globals.sender = mk_var<B>(sid, sort::word);
  return st;
}

}  // namespace casynth
