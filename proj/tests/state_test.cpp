#include "casynth/state.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace {

using namespace casynth;

ir::contract<256> two_slot_contract() {
  return ir::parse_contract<256>(
      "contract C {\n"
      "  storage a: word = 7;\n"
      "  storage owner: bool = 1;\n"
      "  storage bal: map;\n"
      "  public fn f(x: word) { no-op }\n"
      "}");
}

TEST(Journal, ConcreteBaseReadsInitialValues) {
  auto c = two_slot_contract();
  var_pool pool;
  storage_journal<256> j(storage_journal<256>::concrete_base(c));
  auto a = j.read(slot_location<256>(c, "a"));
  ASSERT_TRUE(a->is_lit());
  EXPECT_EQ(a->val, word<256>(7));
  // unknown map cell defaults to zero under the concrete base
  auto key = mk_lit_u64<256>(0xBEEF);
  auto cell = j.read(map_location<256>(c, "bal", key));
  ASSERT_TRUE(cell->is_lit());
  EXPECT_EQ(cell->val, word<256>(0));
}

TEST(Journal, StoreThenReadSameLocation) {
  auto c = two_slot_contract();
  storage_journal<256> j(storage_journal<256>::concrete_base(c));
  auto loc = slot_location<256>(c, "a");
  j.store(loc, mk_lit_u64<256>(42), mk_true<256>());
  auto back = j.read(loc);
  ASSERT_TRUE(back->is_lit());
  EXPECT_EQ(back->val, word<256>(42));
}

TEST(Journal, GuardedStoreBuildsIte) {
  auto c = two_slot_contract();
  var_pool pool;
  auto g = mk_var<256>(pool.fresh("g", sort::boolean, var_origin::attack_arg),
                       sort::boolean);
  storage_journal<256> j(storage_journal<256>::concrete_base(c));
  auto loc = slot_location<256>(c, "a");
  j.store(loc, mk_lit_u64<256>(42), g);
  auto back = j.read(loc);
  EXPECT_EQ(back->o, op::ite);
  // guard true -> 42, guard false -> base 7
  eval_env<256> env;
  env.var_val = [&](uint32_t) { return word<256>(1); };
  EXPECT_EQ(eval_word<256>(back, env), word<256>(42));
  env.var_val = [&](uint32_t) { return word<256>(0); };
  EXPECT_EQ(eval_word<256>(back, env), word<256>(7));
}

TEST(Journal, NewestWriteWins) {
  auto c = two_slot_contract();
  storage_journal<256> j(storage_journal<256>::concrete_base(c));
  auto loc = slot_location<256>(c, "a");
  j.store(loc, mk_lit_u64<256>(1), mk_true<256>());
  j.store(loc, mk_lit_u64<256>(2), mk_true<256>());
  auto back = j.read(loc);
  ASSERT_TRUE(back->is_lit());
  EXPECT_EQ(back->val, word<256>(2));
}

TEST(Journal, RestrictWritesWeakensGuards) {
  auto c = two_slot_contract();
  var_pool pool;
  auto r = mk_var<256>(pool.fresh("r", sort::boolean, var_origin::attack_arg),
                       sort::boolean);
  storage_journal<256> j(storage_journal<256>::concrete_base(c));
  auto loc = slot_location<256>(c, "a");
  j.store(loc, mk_lit_u64<256>(42), mk_true<256>());
  j.restrict_writes(0, mk_not<256>(r));
  auto back = j.read(loc);
  // with r true (reverted) the write is suppressed
  eval_env<256> env;
  env.var_val = [&](uint32_t) { return word<256>(1); };
  EXPECT_EQ(eval_word<256>(back, env), word<256>(7));
  env.var_val = [&](uint32_t) { return word<256>(0); };
  EXPECT_EQ(eval_word<256>(back, env), word<256>(42));
}

TEST(SymbolicState, SnapshotCountsSlotsPlusGlobals) {
  auto c = two_slot_contract();
  var_pool pool;
  snapshot_book<256> book;
  auto st = fully_symbolic_state<256>(c, pool, book);
  // two plain slots (map cells are on demand) + balance, timestamp, gas, sender
  EXPECT_EQ(book.entries.size(), 6u);
  size_t storage_n = 0, global_n = 0, sender_n = 0;
  for (const auto& e : book.entries) {
    if (e.k == snapshot_entry<256>::kind::storage) ++storage_n;
    else if (e.k == snapshot_entry<256>::kind::sender) ++sender_n;
    else ++global_n;
  }
  EXPECT_EQ(storage_n, 2u);
  EXPECT_EQ(global_n, 3u);
  EXPECT_EQ(sender_n, 1u);
}

TEST(SymbolicState, MapCellsAreOnDemandAndMemoized) {
  auto c = two_slot_contract();
  var_pool pool;
  snapshot_book<256> book;
  auto st = fully_symbolic_state<256>(c, pool, book);
  size_t before = book.entries.size();
  auto key = mk_lit_u64<256>(5);
  auto loc = map_location<256>(c, "bal", key);
  auto v1 = st.storage.read(loc);
  auto v2 = st.storage.read(loc);
  EXPECT_TRUE(equal(v1, v2));
  EXPECT_EQ(book.entries.size(), before + 1);
  EXPECT_EQ(book.entries.back().k, snapshot_entry<256>::kind::storage);
  ASSERT_TRUE(book.entries.back().location != nullptr);
  EXPECT_TRUE(equal(book.entries.back().location, loc));
}

TEST(InitialState, ConcreteDefaults) {
  auto c = two_slot_contract();
  var_pool pool;
  init_config<256> cfg;
  auto st = initial_state<256>(c, pool, cfg);
  ASSERT_TRUE(st.globals.balance->is_lit());
  EXPECT_EQ(st.globals.balance->val, word<256>(1000000));
  ASSERT_TRUE(st.globals.self_address->is_lit());
  EXPECT_EQ(st.globals.self_address->val, word<256>(0xC0DE));
  // timestamp and sender stay symbolic unless pinned
  EXPECT_EQ(st.globals.timestamp->o, op::var);
  EXPECT_EQ(st.globals.sender->o, op::var);
  EXPECT_EQ(pool[st.globals.sender->var_id].origin, var_origin::attack_arg);

  cfg.pinned_timestamp = word<256>(1234);
  cfg.pinned_sender = word<256>(0xA11CE);
  auto st2 = initial_state<256>(c, pool, cfg);
  ASSERT_TRUE(st2.globals.timestamp->is_lit());
  EXPECT_EQ(st2.globals.timestamp->val, word<256>(1234));
  ASSERT_TRUE(st2.globals.sender->is_lit());
}

TEST(Memory, ExactMatchHitsAndFreshMisses) {
  var_pool pool;
  memory_store<256> mem(pool);
  auto p = mk_var<256>(pool.fresh("p", sort::word, var_origin::attack_arg),
                       sort::word);
  mem.store(p, mk_lit_u64<256>(99), mk_true<256>());
  auto hit = mem.read(p);
  ASSERT_TRUE(hit->is_lit());
  EXPECT_EQ(hit->val, word<256>(99));
  // a structurally different address misses and yields a fresh read;
  // possible aliasing with p is deliberately ignored (scratch memory)
  auto q = mk_bin<256>(op::add, p, mk_lit_u64<256>(1));
  auto miss = mem.read(q);
  EXPECT_EQ(miss->o, op::var);
  size_t pool_before = pool.size();
  auto miss2 = mem.read(q);
  // repeated reads of the same unknown address reuse the fresh variable
  EXPECT_TRUE(equal(miss, miss2));
  EXPECT_EQ(pool.size(), pool_before);
}

TEST(Memory, FreshReadFromEmptyMemory) {
  var_pool pool;
  memory_store<256> mem(pool);
  auto p = mk_var<256>(pool.fresh("p", sort::word, var_origin::attack_arg),
                       sort::word);
  auto v = mem.read(p);
  EXPECT_EQ(v->o, op::var);
  EXPECT_EQ(pool[v->var_id].origin, var_origin::fresh_read);
}

}  // namespace
