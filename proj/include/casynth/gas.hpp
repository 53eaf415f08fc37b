#pragma once

// Static gas costs per statement kind. The two costs the vulnerability
// model depends on are the expensive storage write and the call overhead;
// the remainder follow the usual fee schedule shape: cheap bookkeeping at 3,
// arithmetic at 5, storage reads at 200.

#include "ir.hpp"

#include <cstdint>

namespace casynth {

struct gas_table {
  std::uint64_t arithmetic = 5;      // assign
  std::uint64_t mload = 3;
  std::uint64_t mstore = 3;
  std::uint64_t sload = 200;
  std::uint64_t sstore = 20000;
  std::uint64_t sha3 = 30;
  std::uint64_t call = 700;
  std::uint64_t selfdestruct = 5000;
  std::uint64_t other = 3;           // jumps, global reads, no-op

  // Gas a recipient can always spend when transferred value (the classic
  // re-entry threshold used by the reentrancy query and replay).
  std::uint64_t call_stipend = 2300;

  template <unsigned B>
  std::uint64_t cost(const ir::stmt<B>& s) const {
    using K = typename ir::stmt<B>::kind;
    switch (s.k) {
      case K::assign: return arithmetic;
      case K::mload: return mload;
      case K::mstore: return mstore;
      case K::sload: return sload;
      case K::sstore: return sstore;
      case K::sha3: return sha3;
      case K::call: return call;
      case K::selfdestruct: return selfdestruct;
      default: return other;
    }
  }
};

}  // namespace casynth
