#include "casynth/summary.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace {

using namespace casynth;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << "cannot open " << path;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string corpus(const std::string& name) {
  return std::string(CASYNTH_CORPUS_DIR) + "/" + name;
}

const char* kVaultText =
    "contract Vault {\n"
    "  storage balances: map;\n"
    "  public fn deposit(amt: word) {\n"
    "    b := sload balances[msg.sender]\n"
    "    nb := b + amt\n"
    "    sstore balances[msg.sender] nb\n"
    "  }\n"
    "  public fn withdraw() {\n"
    "    bal := sload balances[msg.sender]\n"
    "    jumpi POS (bal > 0)\n"
    "    jump REVERT\n"
    "    POS: r := call 50000 msg.sender bal\n"
    "    sstore balances[msg.sender] 0\n"
    "  }\n"
    "}\n";

bool expr_eq(const expr<256>& a, const expr<256>& b) {
  if (!a || !b) return !a && !b;
  return equal(a, b);
}

// Pseudo-random but deterministic environment for semantic comparisons of
// expressions that are equivalent without being structurally identical.
eval_env<256> mixing_env() {
  eval_env<256> env;
  env.var_val = [](std::uint32_t id) { return word<256>((id + 1) * 1000003ull); };
  env.app_val = [](ufn f, std::uint32_t site, const std::vector<word<256>>& xs) {
    word<256> acc(2 * site + (f == ufn::sha3 ? 17ull : 29ull));
    for (const auto& x : xs) acc = acc * word<256>(1000000007ull) + x;
    return acc;
  };
  return env;
}

void expect_same_events(const std::vector<trace_event<256>>& got,
                        const std::vector<trace_event<256>>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    SCOPED_TRACE("event " + std::to_string(i));
    EXPECT_EQ(got[i].k, want[i].k);
    EXPECT_EQ(got[i].slot, want[i].slot);
    EXPECT_EQ(got[i].seq, want[i].seq);
    EXPECT_EQ(got[i].site, want[i].site);
    EXPECT_EQ(got[i].from_selfdestruct, want[i].from_selfdestruct);
    EXPECT_TRUE(expr_eq(got[i].guard, want[i].guard));
    EXPECT_TRUE(expr_eq(got[i].loc, want[i].loc));
    EXPECT_TRUE(expr_eq(got[i].val, want[i].val));
    EXPECT_TRUE(expr_eq(got[i].gas, want[i].gas));
    EXPECT_TRUE(expr_eq(got[i].addr, want[i].addr));
    EXPECT_TRUE(expr_eq(got[i].value, want[i].value));
    EXPECT_TRUE(expr_eq(got[i].ret, want[i].ret));
  }
}

void expect_same_journal(const storage_journal<256>& got, const storage_journal<256>& want) {
  ASSERT_EQ(got.writes().size(), want.writes().size());
  for (std::size_t i = 0; i < got.writes().size(); ++i) {
    SCOPED_TRACE("write " + std::to_string(i));
    EXPECT_TRUE(expr_eq(got.writes()[i].loc, want.writes()[i].loc));
    EXPECT_TRUE(expr_eq(got.writes()[i].val, want.writes()[i].val));
    EXPECT_TRUE(expr_eq(got.writes()[i].guard, want.writes()[i].guard));
  }
}

TEST(Summary, VestingRenderedGolden) {
  auto c = ir::parse_contract<256>(read_file(corpus("vesting.ir")));
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);

  EXPECT_EQ(sum.fn, "vestTokens");
  ASSERT_EQ(sum.entries.size(), 2u);
  ASSERT_EQ(sum.params.size(), 2u);
  EXPECT_FALSE(sum.truncated);

  // Instantiated for an unconditional caller, the guards collapse to the
  // branch condition alone.
  substitution<256> top;
  top.set(sum.entry_var, mk_true<256>());
  auto e0 = sum.entries[0];
  e0.guard = substitute(e0.guard, top);
  EXPECT_EQ(to_string(e0, pool, c),
            "sum-sstore(vesting.amount, (_amount - 1)) @ (_amount > 0)");
  auto e1 = sum.entries[1];
  e1.guard = substitute(e1.guard, top);
  EXPECT_EQ(to_string(e1, pool, c), "sum-call(msg.sender, _to, (_amount - 1)) @ (_amount > 0)");

  EXPECT_EQ(to_string(substitute(sum.path_ok, top), pool), "(_amount > 0)");
  EXPECT_TRUE(substitute(sum.halted, top)->is_false());
}

TEST(Summary, MakeFlagSingleStore) {
  auto c = ir::parse_contract<256>(read_file(corpus("batch_token.ir")));
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);

  EXPECT_EQ(sum.fn, "makeFlag");
  ASSERT_EQ(sum.entries.size(), 1u);
  EXPECT_EQ(sum.entries[0].k, summary_action::store);
  EXPECT_EQ(render_location(sum.entries[0].loc, pool, c), "flag");
  // The body is branch-free, so the only condition is the caller's own.
  EXPECT_EQ(sum.entries[0].guard->o, op::var);
  EXPECT_EQ(sum.entries[0].guard->var_id, sum.entry_var);
  EXPECT_TRUE(sum.path_ok->is_true());
}

TEST(Summary, BatchTransferUnrollsAndTruncates) {
  auto c = ir::parse_contract<256>(read_file(corpus("batch_token.ir")));
  var_pool pool;
  auto sum = build_summary<256>(c, 1, pool);

  EXPECT_EQ(sum.fn, "batchTransfer");
  EXPECT_TRUE(sum.truncated);  // receiver count is symbolic, the loop outlives the bound
  ASSERT_EQ(sum.params.size(), 2u);
  EXPECT_EQ(sum.params[0].elem_vars.size(), 4u);
  EXPECT_EQ(sum.params[0].mem_base, default_array_base<256>(0));
  EXPECT_EQ(sum.params[0].name, "_receivers");

  std::size_t stores = 0, calls = 0;
  for (const auto& e : sum.entries) {
    stores += e.k == summary_action::store;
    calls += e.k == summary_action::call;
  }
  EXPECT_EQ(stores, calls + 1);  // debit first, then one credit+ping per unrolled pass
  EXPECT_GE(calls, 4u);
  for (const auto& e : sum.entries) {
    if (e.k != summary_action::call) continue;
    EXPECT_EQ(to_string(e.gas, pool), "2300");
  }
}

TEST(Summary, PureComputationLeavesNoEntries) {
  auto c = ir::parse_contract<256>(
      "contract C { public fn f(x: word) { r := x + 1\n s := r * 2 } }");
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);
  EXPECT_TRUE(sum.entries.empty());
  EXPECT_TRUE(sum.path_ok->is_true());
  EXPECT_TRUE(sum.halted->is_false());
  ASSERT_EQ(sum.triples.size(), 2u);  // the add and the mul both recorded
}

TEST(Summary, BuildRejectsBadFunctionIndex) {
  auto c = ir::parse_contract<256>("contract C { public fn f() { no-op } }");
  var_pool pool;
  EXPECT_THROW(build_summary<256>(c, 3, pool), std::invalid_argument);
}

TEST(Summary, BuildAllCoversPublicFunctionsOnly) {
  auto c = ir::parse_contract<256>(
      "contract C { private fn helper() { no-op } public fn f() { no-op } "
      "public fn g() { no-op } }");
  var_pool pool;
  auto sums = build_all_summaries<256>(c, pool);
  ASSERT_EQ(sums.size(), 2u);
  EXPECT_EQ(sums[0].fn, "f");
  EXPECT_EQ(sums[1].fn, "g");
}

TEST(Summary, ApplyMatchesDirectEvaluationOnVesting) {
  auto c = ir::parse_contract<256>(read_file(corpus("vesting.ir")));
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);

  init_config<256> cfg;
  auto st_direct = initial_state<256>(c, pool, cfg);
  auto st_apply = st_direct;  // same snapshot variables on both sides

  auto to = mk_var<256>(pool.fresh("a_to", sort::word, var_origin::attack_arg), sort::word);
  auto amt = mk_var<256>(pool.fresh("a_amt", sort::word, var_origin::attack_arg), sort::word);
  std::vector<arg_bundle<256>> args = {arg_bundle<256>::scalar(to),
                                       arg_bundle<256>::scalar(amt)};

  eval_options<256> dopt;
  dopt.reentrancy_depth = 1;
  dopt.slot = 3;
  auto direct = eval_function<256>(c, c.functions[0], args, st_direct, pool, dopt);

  apply_options<256> aopt;
  aopt.reentrancy_depth = 1;
  aopt.slot = 3;
  auto applied = apply_summary<256>(sum, args, st_apply, aopt);

  // The call transfers to a parameter address with symbolic gas, so both
  // sides expand one re-entered frame: store, call, inner store, inner call.
  ASSERT_EQ(applied.trace.size(), 4u);
  expect_same_events(applied.trace, direct.trace);
  expect_same_journal(st_apply.storage, st_direct.storage);
  EXPECT_TRUE(expr_eq(applied.path_ok, direct.path_ok));

  ASSERT_EQ(applied.triples.size(), direct.triples.size());
  for (std::size_t i = 0; i < applied.triples.size(); ++i) {
    EXPECT_EQ(applied.triples[i].o, direct.triples[i].o);
    EXPECT_EQ(applied.triples[i].slot, direct.triples[i].slot);
    EXPECT_TRUE(expr_eq(applied.triples[i].lhs, direct.triples[i].lhs));
    EXPECT_TRUE(expr_eq(applied.triples[i].rhs, direct.triples[i].rhs));
    EXPECT_TRUE(expr_eq(applied.triples[i].result, direct.triples[i].result));
    EXPECT_TRUE(expr_eq(applied.triples[i].guard, direct.triples[i].guard));
  }
  ASSERT_EQ(applied.branches.size(), direct.branches.size());
  for (std::size_t i = 0; i < applied.branches.size(); ++i) {
    EXPECT_TRUE(expr_eq(applied.branches[i].guard, direct.branches[i].guard));
    EXPECT_TRUE(expr_eq(applied.branches[i].cond, direct.branches[i].cond));
  }

  // Balance and per-frame gas take different but equivalent shapes (the
  // template bakes its revert rewrite in, the evaluator applies it at the
  // end), so compare them under a valuation.
  auto env = mixing_env();
  EXPECT_EQ(eval_word<256>(st_apply.globals.balance, env),
            eval_word<256>(st_direct.globals.balance, env));
  ASSERT_EQ(applied.invocations.size(), direct.invocations.size());
  for (std::size_t i = 0; i < applied.invocations.size(); ++i) {
    EXPECT_EQ(applied.invocations[i].depth, direct.invocations[i].depth);
    EXPECT_EQ(applied.invocations[i].fn, direct.invocations[i].fn);
    EXPECT_EQ(eval_word<256>(applied.invocations[i].gas_used, env),
              eval_word<256>(direct.invocations[i].gas_used, env));
    EXPECT_EQ(eval_bool<256>(applied.invocations[i].path_ok, env),
              eval_bool<256>(direct.invocations[i].path_ok, env));
  }
}

TEST(Summary, ApplySequenceMatchesDirectOnReentrantVault) {
  auto c = ir::parse_contract<256>(kVaultText);
  var_pool pool;
  auto deposit = build_summary<256>(c, 0, pool);
  auto withdraw = build_summary<256>(c, 1, pool);

  init_config<256> cfg;
  cfg.pinned_sender = word<256>(0xA11CE);
  auto st_direct = initial_state<256>(c, pool, cfg);
  auto st_apply = st_direct;

  std::vector<arg_bundle<256>> dep_args = {arg_bundle<256>::scalar(mk_lit_u64<256>(100))};

  eval_options<256> d0;
  d0.slot = 0;
  auto direct = eval_function<256>(c, c.functions[0], dep_args, st_direct, pool, d0);
  eval_options<256> d1;
  d1.slot = 1;
  d1.reentrancy_depth = 1;
  direct.append(eval_function<256>(c, c.functions[1], {}, st_direct, pool, d1));

  apply_options<256> a0;
  a0.slot = 0;
  auto applied = apply_summary<256>(deposit, dep_args, st_apply, a0);
  apply_options<256> a1;
  a1.slot = 1;
  a1.reentrancy_depth = 1;
  applied.append(apply_summary<256>(withdraw, {}, st_apply, a1));

  // deposit store, then withdraw expands to call / inner call / inner store /
  // outer store; everything is literal-driven here so the traces must agree
  // node for node.
  ASSERT_EQ(applied.trace.size(), 5u);
  expect_same_events(applied.trace, direct.trace);
  expect_same_journal(st_apply.storage, st_direct.storage);

  // A 100-unit deposit funds two 100-unit payouts: the classic double spend.
  ASSERT_TRUE(st_apply.globals.balance->is_lit());
  ASSERT_TRUE(st_direct.globals.balance->is_lit());
  EXPECT_EQ(st_apply.globals.balance->val, word<256>(1000000 - 200));
  EXPECT_EQ(st_direct.globals.balance->val, st_apply.globals.balance->val);

  // Re-entered frames mint the same call-return symbols as direct evaluation.
  EXPECT_EQ(applied.trace[1].site, call_site(1, 0, 3));
  EXPECT_EQ(applied.trace[2].site, call_site(1, 1, 3));
}

TEST(Summary, ApplyDepthZeroKeepsTemplateShape) {
  auto c = ir::parse_contract<256>(kVaultText);
  var_pool pool;
  auto withdraw = build_summary<256>(c, 1, pool);

  init_config<256> cfg;
  auto st = initial_state<256>(c, pool, cfg);
  apply_options<256> opt;
  opt.reentrancy_depth = 0;
  auto res = apply_summary<256>(withdraw, {}, st, opt);

  ASSERT_EQ(res.trace.size(), 2u);
  EXPECT_EQ(res.trace[0].k, event_kind::call);
  EXPECT_EQ(res.trace[1].k, event_kind::store);
  ASSERT_EQ(res.invocations.size(), 1u);
  EXPECT_EQ(res.invocations[0].depth, 0u);
}

TEST(Summary, SnapshotRebindsToLiveStateAcrossApplications) {
  auto c = ir::parse_contract<256>(
      "contract C { storage n: word = 7; public fn bump() { v := sload n\n nv := v + 1\n "
      "sstore n nv } }");
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);

  init_config<256> cfg;
  auto st = initial_state<256>(c, pool, cfg);
  apply_summary<256>(sum, {}, st, {});
  apply_summary<256>(sum, {}, st, {});

  ASSERT_EQ(st.storage.writes().size(), 2u);
  ASSERT_TRUE(st.storage.writes()[0].val->is_lit());
  EXPECT_EQ(st.storage.writes()[0].val->val, word<256>(8));
  ASSERT_TRUE(st.storage.writes()[1].val->is_lit());
  EXPECT_EQ(st.storage.writes()[1].val->val, word<256>(9));
}

TEST(Summary, GlobalSnapshotsResolveAtApplication) {
  auto c = ir::parse_contract<256>(
      "contract C { storage last: word = 0; public fn spin() { t := timestamp\n "
      "sstore last t } }");
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);

  init_config<256> cfg;
  auto st = initial_state<256>(c, pool, cfg);
  auto res = apply_summary<256>(sum, {}, st, {});
  ASSERT_EQ(res.trace.size(), 1u);
  EXPECT_TRUE(equal(res.trace[0].val, st.globals.timestamp));
}

TEST(Summary, SelfDestructDrainsAndHalts) {
  auto c = ir::parse_contract<256>(
      "contract C { public fn die(a: address) { selfdestruct a } }");
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);
  ASSERT_EQ(sum.entries.size(), 1u);
  EXPECT_EQ(sum.entries[0].k, summary_action::destruct);

  init_config<256> cfg;
  auto st = initial_state<256>(c, pool, cfg);
  auto addr = mk_var<256>(pool.fresh("a_addr", sort::word, var_origin::attack_arg), sort::word);
  auto res = apply_summary<256>(sum, {arg_bundle<256>::scalar(addr)}, st, {});

  ASSERT_EQ(res.trace.size(), 1u);
  EXPECT_TRUE(res.trace[0].from_selfdestruct);
  EXPECT_TRUE(equal(res.trace[0].addr, addr));
  ASSERT_TRUE(res.trace[0].value->is_lit());
  EXPECT_EQ(res.trace[0].value->val, word<256>(1000000));  // pre-destruct pot
  EXPECT_TRUE(res.halted->is_true());
  ASSERT_TRUE(st.globals.balance->is_lit());
  EXPECT_EQ(st.globals.balance->val, word<256>(0));
}

TEST(Summary, ApplyThreadsCallerGuardThroughEverything) {
  auto c = ir::parse_contract<256>(read_file(corpus("vesting.ir")));
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);

  init_config<256> cfg;
  auto st = initial_state<256>(c, pool, cfg);
  std::uint32_t ch = pool.fresh("pick", sort::boolean, var_origin::choice_flag);
  auto to = mk_var<256>(pool.fresh("a_to", sort::word, var_origin::attack_arg), sort::word);
  auto amt = mk_var<256>(pool.fresh("a_amt", sort::word, var_origin::attack_arg), sort::word);

  apply_options<256> opt;
  opt.reentrancy_depth = 0;
  opt.entry_guard = mk_var<256>(ch, sort::boolean);
  auto res = apply_summary<256>(
      sum, {arg_bundle<256>::scalar(to), arg_bundle<256>::scalar(amt)}, st, opt);

  ASSERT_EQ(res.trace.size(), 2u);
  for (const auto& ev : res.trace) EXPECT_TRUE(contains_var(ev.guard, ch));
  for (const auto& w : st.storage.writes()) EXPECT_TRUE(contains_var(w.guard, ch));
  EXPECT_TRUE(contains_var(res.path_ok, ch));
}

TEST(Summary, ShortArrayArgumentPadsWithZeroes) {
  auto c = ir::parse_contract<256>(read_file(corpus("batch_token.ir")));
  var_pool pool;
  auto sum = build_summary<256>(c, 1, pool);

  init_config<256> cfg;
  cfg.pinned_sender = word<256>(0xA11CE);
  auto st = initial_state<256>(c, pool, cfg);
  std::vector<expr<256>> elems = {mk_lit_u64<256>(0xB0B)};  // fewer than were templated
  auto args = std::vector<arg_bundle<256>>{
      arg_bundle<256>::array(mk_lit_u64<256>(1), elems, default_array_base<256>(0)),
      arg_bundle<256>::scalar(mk_lit_u64<256>(5))};
  apply_options<256> opt;
  opt.reentrancy_depth = 0;
  auto res = apply_summary<256>(sum, args, st, opt);
  EXPECT_FALSE(res.trace.empty());
}

TEST(Summary, ApplyRejectsArgumentMismatches) {
  auto c = ir::parse_contract<256>(read_file(corpus("vesting.ir")));
  var_pool pool;
  auto sum = build_summary<256>(c, 0, pool);
  init_config<256> cfg;
  auto st = initial_state<256>(c, pool, cfg);
  EXPECT_THROW(apply_summary<256>(sum, {arg_bundle<256>::scalar(mk_lit_u64<256>(1))}, st, {}),
               std::invalid_argument);
  auto arr = arg_bundle<256>::array(mk_lit_u64<256>(1), {mk_lit_u64<256>(2)},
                                    default_array_base<256>(0));
  EXPECT_THROW(apply_summary<256>(sum, {arr, arg_bundle<256>::scalar(mk_lit_u64<256>(1))}, st,
                                  {}),
               std::invalid_argument);
}

}  // namespace
