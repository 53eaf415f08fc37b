#include "casynth/replay.hpp"

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

ir::contract<256> batch_token() {
  return ir::parse_contract<256>(read_file(corpus("batch_token.ir")));
}

TEST(Replay, EmptyAttackKeepsInitialObservables) {
  auto c = ir::parse_contract<256>(read_file(corpus("vesting.ir")));
  auto res = concrete_replay<256>(c, {});
  EXPECT_EQ(res.balance, word<256>(1000000));
  EXPECT_EQ(res.storage.at(word<256>(0)), word<256>(1000000));
  EXPECT_EQ(res.storage.at(word<256>(1)), word<256>(1500000000));
  EXPECT_TRUE(res.trace.empty());
}

TEST(Replay, OverflowAttackTransfersWithZeroAmount) {
  auto c = batch_token();
  word<256> half = word<256>::pow2(255);
  concrete_attack<256> atk;
  atk.calls.push_back({"makeFlag", {concrete_arg<256>::of(word<256>(1))}});
  atk.calls.push_back(
      {"batchTransfer",
       {concrete_arg<256>::array({word<256>(0x123), word<256>(0x456)}),
        concrete_arg<256>::of(half)}});
  auto res = concrete_replay<256>(c, atk);

  ASSERT_EQ(res.outcomes.size(), 2u);
  EXPECT_FALSE(res.outcomes[0].reverted);
  EXPECT_FALSE(res.outcomes[1].reverted);
  EXPECT_EQ(res.outcomes[1].gas_used, word<256>(62280));

  // each receiver was credited 2^255 while the sender paid amount = 0
  word<256> recv1 = builtin_sha3<256>(word<256>(1), word<256>(0x123));
  word<256> recv2 = builtin_sha3<256>(word<256>(1), word<256>(0x456));
  word<256> sender_cell = builtin_sha3<256>(word<256>(1), word<256>(0xA11CE));
  EXPECT_EQ(res.storage.at(recv1), half);
  EXPECT_EQ(res.storage.at(recv2), half);
  EXPECT_EQ(res.storage.at(sender_cell), word<256>(0));

  // two transfers of 2^255 wrap the balance decrement around exactly
  EXPECT_EQ(res.balance, word<256>(1000000));
  ASSERT_EQ(res.trace.size(), 6u);  // flag store, sender store, 2x (recv store, call)
  EXPECT_EQ(res.trace[3].k, event_kind::call);
  EXPECT_EQ(res.trace[3].value, half);
}

TEST(Replay, RequireFailureRevertsInvocation) {
  auto c = batch_token();
  concrete_attack<256> atk;
  atk.calls.push_back({"makeFlag", {concrete_arg<256>::of(word<256>(0))}});
  atk.calls.push_back(
      {"batchTransfer",
       {concrete_arg<256>::array({word<256>(0x123)}), concrete_arg<256>::of(word<256>(5))}});
  auto res = concrete_replay<256>(c, atk);
  ASSERT_EQ(res.outcomes.size(), 2u);
  EXPECT_FALSE(res.outcomes[0].reverted);
  EXPECT_TRUE(res.outcomes[1].reverted);
  EXPECT_FALSE(res.outcomes[1].out_of_gas);
  // no transfer happened
  EXPECT_EQ(res.balance, word<256>(1000000));
  for (const auto& e : res.trace) EXPECT_EQ(e.slot, 0u);
}

TEST(Replay, GasExhaustionRevertsAndRollsBack) {
  auto c = batch_token();
  concrete_attack<256> atk;
  atk.calls.push_back({"makeFlag", {concrete_arg<256>::of(word<256>(1))}});
  atk.calls.push_back(
      {"batchTransfer",
       {concrete_arg<256>::array(
            {word<256>(1), word<256>(2), word<256>(3), word<256>(4)}),
        concrete_arg<256>::of(word<256>(0))}});
  auto res = concrete_replay<256>(c, atk);
  ASSERT_EQ(res.outcomes.size(), 2u);
  EXPECT_TRUE(res.outcomes[1].reverted);
  EXPECT_TRUE(res.outcomes[1].out_of_gas);
  // only the flag write survives
  ASSERT_EQ(res.trace.size(), 1u);
  EXPECT_EQ(res.trace[0].k, event_kind::store);
  EXPECT_EQ(res.balance, word<256>(1000000));
}

TEST(Replay, ThreeReceiversFitTheBudget) {
  auto c = batch_token();
  concrete_attack<256> atk;
  atk.calls.push_back({"makeFlag", {concrete_arg<256>::of(word<256>(1))}});
  atk.calls.push_back(
      {"batchTransfer",
       {concrete_arg<256>::array({word<256>(1), word<256>(2), word<256>(3)}),
        concrete_arg<256>::of(word<256>(0))}});
  auto res = concrete_replay<256>(c, atk);
  EXPECT_FALSE(res.outcomes[1].reverted);
  EXPECT_EQ(res.outcomes[1].gas_used, word<256>(83204));
}

TEST(Replay, ReentrantWithdrawDoubleSpends) {
  auto c = ir::parse_contract<256>(
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
      "}\n");
  concrete_attack<256> atk;
  atk.calls.push_back({"deposit", {concrete_arg<256>::of(word<256>(1000))}});
  atk.calls.push_back({"withdraw", {}});
  auto res = concrete_replay<256>(c, atk);
  ASSERT_EQ(res.outcomes.size(), 2u);
  EXPECT_FALSE(res.outcomes[1].reverted);
  // paid out twice: once in the outer frame, once re-entered
  EXPECT_EQ(res.balance, word<256>(1000000 - 2000));
  std::size_t calls = 0;
  for (const auto& e : res.trace)
    if (e.k == event_kind::call) ++calls;
  EXPECT_EQ(calls, 2u);
}

TEST(Replay, ReentryStopsAtConfiguredDepth) {
  auto c = ir::parse_contract<256>(
      "contract C { storage x: word = 5; public fn f() {\n"
      "  v := sload x\n"
      "  jumpi GO (v > 0)\n"
      "  jump REVERT\n"
      "  GO: r := call 50000 msg.sender 1\n"
      "  sstore x 0\n"
      "} }");
  concrete_attack<256> atk;
  atk.calls.push_back({"f", {}});
  replay_env<256> env;
  env.reentrancy_depth = 2;
  auto res = concrete_replay<256>(c, atk, env);
  std::size_t calls = 0;
  for (const auto& e : res.trace)
    if (e.k == event_kind::call) ++calls;
  // depth 0, 1 and 2 each call once; the deepest does not recurse further
  EXPECT_EQ(calls, 3u);
  EXPECT_EQ(res.balance, word<256>(1000000 - 3));
}

TEST(Replay, SelfdestructSendsEverythingAndHalts) {
  auto c = ir::parse_contract<256>(
      "contract C { storage x: word = 0; public fn f() {\n"
      "  selfdestruct msg.sender\n"
      "  sstore x 1\n"
      "} }");
  concrete_attack<256> atk;
  atk.calls.push_back({"f", {}});
  auto res = concrete_replay<256>(c, atk);
  EXPECT_TRUE(res.destroyed);
  EXPECT_EQ(res.balance, word<256>(0));
  ASSERT_EQ(res.trace.size(), 1u);
  EXPECT_TRUE(res.trace[0].from_selfdestruct);
  EXPECT_EQ(res.trace[0].value, word<256>(1000000));
  EXPECT_FALSE(res.outcomes[0].reverted);
}

TEST(Replay, UnknownFunctionIsAnError) {
  auto c = batch_token();
  concrete_attack<256> atk;
  atk.calls.push_back({"mint", {}});
  EXPECT_THROW(concrete_replay<256>(c, atk), replay_error);
}

TEST(Replay, CallOracleDrivesReturnValues) {
  auto c = ir::parse_contract<256>(
      "contract C { storage x: word = 0; public fn f() {\n"
      "  r := call 2300 msg.sender 0\n"
      "  jumpi OK (r != 0)\n"
      "  jump REVERT\n"
      "  OK: sstore x r\n"
      "} }");
  concrete_attack<256> atk;
  atk.calls.push_back({"f", {}});
  replay_env<256> env;
  env.call_fn = [](std::uint32_t, word<256>, word<256>, word<256>) { return word<256>(0); };
  auto res = concrete_replay<256>(c, atk, env);
  EXPECT_TRUE(res.outcomes[0].reverted);

  auto res2 = concrete_replay<256>(c, atk);  // default oracle returns 1
  EXPECT_FALSE(res2.outcomes[0].reverted);
  EXPECT_EQ(res2.storage.at(word<256>(0)), word<256>(1));
}

// The symbolic evaluator on a fully literal initial state must agree with
// fully concrete replay once uninterpreted applications are resolved by the
// same oracles.
TEST(Replay, AgreesWithSymbolicEvaluationOnLiteralState) {
  auto c = batch_token();
  var_pool pool;
  init_config<256> cfg;
  cfg.pinned_sender = word<256>(0xA11CE);
  cfg.pinned_timestamp = word<256>(99);
  auto st = initial_state<256>(c, pool, cfg);

  word<256> half = word<256>::pow2(255);
  eval_options<256> opt;
  auto r0 = eval_function<256>(c, *c.find_function("makeFlag"),
                               {arg_bundle<256>::scalar(mk_lit_u64<256>(1))}, st, pool, opt);
  opt.slot = 1;
  auto r1 = eval_function<256>(
      c, *c.find_function("batchTransfer"),
      {arg_bundle<256>::array(mk_lit_u64<256>(2),
                              {mk_lit_u64<256>(0x123), mk_lit_u64<256>(0x456)},
                              default_array_base<256>(0)),
       arg_bundle<256>::scalar(mk_lit<256>(half))},
      st, pool, opt);

  concrete_attack<256> atk;
  atk.calls.push_back({"makeFlag", {concrete_arg<256>::of(word<256>(1))}});
  atk.calls.push_back(
      {"batchTransfer",
       {concrete_arg<256>::array({word<256>(0x123), word<256>(0x456)}),
        concrete_arg<256>::of(half)}});
  auto rep = concrete_replay<256>(c, atk);

  eval_env<256> env;
  env.var_val = [](std::uint32_t) { return word<256>(0); };
  env.app_val = [](ufn fn, std::uint32_t, const std::vector<word<256>>& args) {
    if (fn == ufn::sha3) return builtin_sha3<256>(args[0], args[1]);
    return word<256>(1);
  };
  EXPECT_EQ(eval_word<256>(st.globals.balance, env), rep.balance);
  for (const auto& key : {word<256>(0x123), word<256>(0x456), word<256>(0xA11CE)}) {
    auto loc_sym = map_location<256>(c, "balances", mk_lit<256>(key));
    word<256> loc_con = builtin_sha3<256>(word<256>(1), key);
    word<256> want =
        rep.storage.count(loc_con) ? rep.storage.at(loc_con) : word<256>(0);
    EXPECT_EQ(eval_word<256>(st.storage.read(loc_sym), env), want) << key.to_hex();
  }
}

}  // namespace
