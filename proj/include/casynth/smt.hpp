#pragma once

// Solver integration. A solver_client owns one external SMT-LIB2 REPL
// process (anything that reads commands on stdin and answers on stdout,
// e.g. `z3 -in` or the bundled WASM-backed shim) and offers three
// operations on symbolic terms:
//
//   check(assumptions)   satisfiability of a conjunction, with model access
//   value_of / value_of_term   model values after a sat answer
//   interferes(var, e)   whether e can change when only var changes
//
// Terms are encoded over QF_UFBV: words become fixed-width bitvectors, the
// hash and external-call results become uninterpreted functions. Shared
// subterms are emitted once as define-funs, so DAG-shaped values (ite
// chains from merged branches) stay linear in the encoding.
//
// Every check runs inside its own (push)/(pop) scope. Timeouts are enforced
// host-side: a query that overruns is answered `unknown` and the process is
// killed and respawned, so one stuck query cannot wedge the worker.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "casynth/sym.hpp"

namespace casynth {

enum class sat_result : std::uint8_t { sat, unsat, unknown };

inline const char* to_string(sat_result r) {
  switch (r) {
    case sat_result::sat: return "sat";
    case sat_result::unsat: return "unsat";
    default: return "unknown";
  }
}

struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

struct solver_config {
  std::string command = default_command();
  unsigned query_timeout_ms = 20000;
  unsigned startup_timeout_ms = 180000;

  static std::string default_command() {
#ifdef CASYNTH_DEFAULT_SOLVER_CMD
    return CASYNTH_DEFAULT_SOLVER_CMD;
#else
    return "node tools/smt_repl.js";
#endif
  }
};

namespace detail {

inline void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

// One child process speaking a line protocol over a pipe pair. Reads are
// driven by poll() so a deadline can be enforced without threads.
class pipe_process {
 public:
  pipe_process() = default;
  pipe_process(const pipe_process&) = delete;
  pipe_process& operator=(const pipe_process&) = delete;
  ~pipe_process() { shutdown(); }

  bool running() const { return pid_ > 0; }

  void spawn(const std::string& command) {
    shutdown();
    ignore_sigpipe_once();
    int to_child[2] = {-1, -1};
    int from_child[2] = {-1, -1};
    if (::pipe(to_child) != 0) throw solver_error("pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw solver_error("pipe() failed");
    }
    pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw solver_error("fork() failed");
    }
    if (pid == 0) {
      ::setpgid(0, 0);  // own process group, so shutdown can kill the whole tree
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    ::setpgid(pid, pid);  // mirror the child's call: whoever runs first wins
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    ::fcntl(out_fd_, F_SETFL, O_NONBLOCK);
    pid_ = pid;
    buf_.clear();
  }

  void shutdown() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ > 0) {
      if (::kill(-pid_, SIGKILL) != 0) ::kill(pid_, SIGKILL);
      int status = 0;
      while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
      }
      pid_ = -1;
    }
    buf_.clear();
  }

  void send(const std::string& text) {
    const char* p = text.data();
    std::size_t left = text.size();
    while (left > 0) {
      ssize_t n = ::write(in_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw solver_error("solver process rejected input");
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  // Collects output lines until the sentinel line arrives. Returns nullopt
  // when the deadline passes first; the caller is expected to respawn.
  std::optional<std::vector<std::string>> read_until(const std::string& sentinel,
                                                     unsigned timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    std::vector<std::string> lines;
    for (;;) {
      std::size_t pos;
      while ((pos = buf_.find('\n')) != std::string::npos) {
        std::string line = buf_.substr(0, pos);
        buf_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == sentinel) return lines;
        lines.push_back(std::move(line));
      }
      auto now = std::chrono::steady_clock::now();
      if (now >= deadline) return std::nullopt;
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
      struct pollfd pfd = {out_fd_, POLLIN, 0};
      int pr = ::poll(&pfd, 1, static_cast<int>(left.count()) + 1);
      if (pr < 0) {
        if (errno == EINTR) continue;
        throw solver_error("poll() on solver output failed");
      }
      if (pr == 0) return std::nullopt;
      char tmp[4096];
      ssize_t n = ::read(out_fd_, tmp, sizeof tmp);
      if (n > 0) {
        buf_.append(tmp, static_cast<std::size_t>(n));
      } else if (n == 0) {
        throw solver_error("solver process closed its output");
      } else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
        throw solver_error("read from solver failed");
      }
    }
  }

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buf_;
};

inline std::vector<std::string> sexp_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '(' || c == ')') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
      out.emplace_back(1, c);
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <unsigned B>
std::optional<word<B>> parse_smt_value(const std::string& tok) {
  if (tok == "true") return word<B>(1);
  if (tok == "false") return word<B>(0);
  if (tok.size() > 2 && tok[0] == '#' && tok[1] == 'x')
    return word<B>::parse("0x" + tok.substr(2));
  if (tok.size() > 2 && tok[0] == '#' && tok[1] == 'b') {
    word<B> w{0};
    for (std::size_t i = 2; i < tok.size(); ++i) {
      if (tok[i] != '0' && tok[i] != '1') return std::nullopt;
      w = w + w;
      if (tok[i] == '1') w = w + word<B>(1);
    }
    return w;
  }
  if (!tok.empty() && std::isdigit(static_cast<unsigned char>(tok[0])))
    return word<B>::parse(tok);
  return std::nullopt;
}

// Pulls the value bound to `name` out of a get-value response such as
// ((name #x2a)) or ((name (_ bv42 256))).
template <unsigned B>
std::optional<word<B>> parse_value_for(const std::vector<std::string>& lines,
                                       const std::string& name) {
  std::string all;
  for (const auto& l : lines) {
    all += l;
    all += ' ';
  }
  std::vector<std::string> toks = sexp_tokens(all);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i] != name) continue;
    if (i + 1 >= toks.size()) return std::nullopt;
    if (toks[i + 1] != "(") return parse_smt_value<B>(toks[i + 1]);
    if (i + 3 < toks.size() && toks[i + 2] == "_" && toks[i + 3].rfind("bv", 0) == 0)
      return parse_smt_value<B>(toks[i + 3].substr(2));
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

template <unsigned B>
class solver_client {
 public:
  explicit solver_client(var_pool& pool, solver_config cfg = {})
      : pool_(&pool), cfg_(std::move(cfg)) {}

  solver_client(const solver_client&) = delete;
  solver_client& operator=(const solver_client&) = delete;

  const solver_config& config() const { return cfg_; }
  unsigned unknown_count() const { return unknowns_; }
  unsigned check_count() const { return checks_; }

  // Satisfiability of the conjunction of boolean assumptions. A sat answer
  // leaves the scope open so value_of / value_of_term can read the model.
  sat_result check(const std::vector<expr<B>>& assumptions) {
    for (const auto& a : assumptions)
      if (a->srt != sort::boolean)
        throw std::logic_error("solver_client::check: boolean assumptions required");
    ensure_ready();
    ++checks_;

    close_scope();
    scope_ = scope_state{};
    std::string payload = "(push 1)\n";
    std::unordered_map<const enode<B>*, std::string> memo;
    std::vector<std::string> names;
    names.reserve(assumptions.size());
    for (const auto& a : assumptions) names.push_back(enc(a, memo, nullptr, payload));
    for (const auto& n : names) payload += "(assert " + n + ")\n";
    payload += "(check-sat)\n";
    payload += kEcho;

    auto lines = round_trip(payload, cfg_.query_timeout_ms);
    if (!lines) {
      ++unknowns_;
      last_ = sat_result::unknown;
      return last_;
    }
    last_ = sat_result::unknown;
    for (const auto& l : *lines) {
      if (l == "sat") last_ = sat_result::sat;
      if (l == "unsat") last_ = sat_result::unsat;
    }
    if (last_ == sat_result::unknown) ++unknowns_;
    in_scope_ = true;
    return last_;
  }

  // Model value of a variable after a sat check. Variables the query never
  // mentioned get the solver's completion default (zero).
  std::optional<word<B>> value_of(std::uint32_t var_id) {
    if (!in_scope_ || last_ != sat_result::sat) return std::nullopt;
    std::string payload;
    std::string name = var_ref(var_id, nullptr, payload);
    payload += "(get-value (" + name + "))\n";
    payload += kEcho;
    auto lines = round_trip(payload, cfg_.query_timeout_ms);
    if (!lines) return std::nullopt;
    return detail::parse_value_for<B>(*lines, name);
  }

  // Model value of an arbitrary term after a sat check (used to read the
  // model's hash and call-result valuations out of app terms).
  std::optional<word<B>> value_of_term(const expr<B>& term) {
    if (!in_scope_ || last_ != sat_result::sat) return std::nullopt;
    std::string payload;
    std::unordered_map<const enode<B>*, std::string> memo;
    std::string name = enc(term, memo, nullptr, payload);
    payload += "(get-value (" + name + "))\n";
    payload += kEcho;
    auto lines = round_trip(payload, cfg_.query_timeout_ms);
    if (!lines) return std::nullopt;
    return detail::parse_value_for<B>(*lines, name);
  }

  // Whether e's value can depend on var: sat of
  //   e[a/var] != e[b/var]  with  a != b
  // for fresh a, b and everything else shared. Unsolved instances count as
  // interference so pruning stays sound.
  bool interferes(std::uint32_t var_id, const expr<B>& e) {
    if (!contains_var(e, var_id)) return false;
    ensure_ready();
    ++checks_;
    close_scope();
    scope_ = scope_state{};

    std::string payload = "(push 1)\n";
    const std::string sa = "itf_a", sb = "itf_b";
    payload += "(declare-fun " + sa + " () " + smt_sort((*pool_)[var_id].srt) + ")\n";
    payload += "(declare-fun " + sb + " () " + smt_sort((*pool_)[var_id].srt) + ")\n";
    std::unordered_map<std::uint32_t, std::string> ra{{var_id, sa}}, rb{{var_id, sb}};
    std::unordered_map<const enode<B>*, std::string> ma, mb;
    std::string na = enc(e, ma, &ra, payload);
    std::string nb = enc(e, mb, &rb, payload);
    payload += "(assert (distinct " + sa + " " + sb + "))\n";
    payload += "(assert (distinct " + na + " " + nb + "))\n";
    payload += "(check-sat)\n(pop 1)\n";
    payload += kEcho;

    auto lines = round_trip(payload, cfg_.query_timeout_ms);
    if (!lines) {
      ++unknowns_;
      return true;
    }
    for (const auto& l : *lines) {
      if (l == "unsat") return false;
      if (l == "sat") return true;
    }
    ++unknowns_;
    return true;
  }

  // Subterm-level variant of interferes: whether e's value can depend on the
  // value of a whole subterm (typically a call's return application). Every
  // structural occurrence of the subterm is swapped for a fresh variable on
  // each side before asking the same question.
  bool interferes_term(const expr<B>& target, const expr<B>& e) {
    if (!contains_term(e, target)) return false;
    std::uint32_t a = pool_->fresh("itf_a", target->srt, var_origin::probe);
    std::uint32_t b = pool_->fresh("itf_b", target->srt, var_origin::probe);
    expr<B> ea = replace(e, target, mk_var<B>(a, target->srt));
    expr<B> eb = replace(e, target, mk_var<B>(b, target->srt));

    ensure_ready();
    ++checks_;
    close_scope();
    scope_ = scope_state{};

    std::string payload = "(push 1)\n";
    std::unordered_map<const enode<B>*, std::string> memo;
    std::string na = enc(ea, memo, nullptr, payload);
    std::string nb = enc(eb, memo, nullptr, payload);
    payload += "(assert (distinct v" + std::to_string(a) + " v" + std::to_string(b) + "))\n";
    payload += "(assert (distinct " + na + " " + nb + "))\n";
    payload += "(check-sat)\n(pop 1)\n";
    payload += kEcho;

    auto lines = round_trip(payload, cfg_.query_timeout_ms);
    if (!lines) {
      ++unknowns_;
      return true;
    }
    for (const auto& l : *lines) {
      if (l == "unsat") return false;
      if (l == "sat") return true;
    }
    ++unknowns_;
    return true;
  }

  // Drops the process and all session state; the next call starts fresh.
  void hard_reset() {
    proc_.shutdown();
    ready_ = false;
    in_scope_ = false;
    last_ = sat_result::unknown;
  }

  ~solver_client() { hard_reset(); }

 private:
  struct scope_state {
    std::unordered_set<std::uint32_t> vars;
    std::unordered_set<std::uint32_t> call_sites;
    bool sha3 = false;
  };

  static constexpr const char* kEcho = "(echo \"::done::\")\n";

  static std::string smt_sort(sort s) {
    return s == sort::boolean ? "Bool" : "(_ BitVec " + std::to_string(B) + ")";
  }

  static std::string bv_lit(const word<B>& w) {
    return "(_ bv" + w.to_dec() + " " + std::to_string(B) + ")";
  }

  void ensure_ready() {
    if (ready_) return;
    proc_.spawn(cfg_.command);
    std::string preamble = "(set-logic QF_UFBV)\n";
    preamble += kEcho;
    proc_.send(preamble);
    auto lines = proc_.read_until("::done::", cfg_.startup_timeout_ms);
    if (!lines) {
      proc_.shutdown();
      throw solver_error("solver did not start: " + cfg_.command);
    }
    for (const auto& l : *lines)
      if (l.rfind("(error", 0) == 0)
        throw solver_error("solver rejected the preamble: " + l);
    ready_ = true;
    in_scope_ = false;
  }

  void close_scope() {
    if (!in_scope_) return;
    proc_.send("(pop 1)\n");
    in_scope_ = false;
  }

  // Sends a payload ending in the echo sentinel and collects the response.
  // nullopt means the deadline passed and the process was recycled.
  std::optional<std::vector<std::string>> round_trip(const std::string& payload,
                                                     unsigned timeout_ms) {
    try {
      proc_.send(payload);
      auto lines = proc_.read_until("::done::", timeout_ms);
      if (!lines) {
        hard_reset();
        return std::nullopt;
      }
      return lines;
    } catch (const solver_error&) {
      hard_reset();
      return std::nullopt;
    }
  }

  std::string var_ref(std::uint32_t id,
                      const std::unordered_map<std::uint32_t, std::string>* rename,
                      std::string& out) {
    if (rename) {
      auto it = rename->find(id);
      if (it != rename->end()) return it->second;
    }
    std::string name = "v" + std::to_string(id);
    if (scope_.vars.insert(id).second)
      out += "(declare-fun " + name + " () " + smt_sort((*pool_)[id].srt) + ")\n";
    return name;
  }

  // Emits declarations and define-funs for e into `out`, returning the atom
  // or name that denotes e. Shared nodes are emitted once per memo.
  std::string enc(const expr<B>& e, std::unordered_map<const enode<B>*, std::string>& memo,
                  const std::unordered_map<std::uint32_t, std::string>* rename,
                  std::string& out) {
    if (e->o == op::lit) {
      if (e->srt == sort::boolean) return e->val.is_zero() ? "false" : "true";
      return bv_lit(e->val);
    }
    if (e->o == op::var) return var_ref(e->var_id, rename, out);

    auto mit = memo.find(e.get());
    if (mit != memo.end()) return mit->second;

    std::vector<std::string> k;
    k.reserve(e->kids.size());
    for (const auto& kid : e->kids) k.push_back(enc(kid, memo, rename, out));

    std::string body;
    switch (e->o) {
      case op::add: body = "(bvadd " + k[0] + " " + k[1] + ")"; break;
      case op::sub: body = "(bvsub " + k[0] + " " + k[1] + ")"; break;
      case op::mul: body = "(bvmul " + k[0] + " " + k[1] + ")"; break;
      case op::udiv:
        body = "(ite (= " + k[1] + " " + bv_lit(word<B>(0)) + ") " + bv_lit(word<B>(0)) +
               " (bvudiv " + k[0] + " " + k[1] + "))";
        break;
      case op::umod:
        body = "(ite (= " + k[1] + " " + bv_lit(word<B>(0)) + ") " + bv_lit(word<B>(0)) +
               " (bvurem " + k[0] + " " + k[1] + "))";
        break;
      case op::bit_and: body = "(bvand " + k[0] + " " + k[1] + ")"; break;
      case op::bit_or: body = "(bvor " + k[0] + " " + k[1] + ")"; break;
      case op::log_and: body = "(and " + k[0] + " " + k[1] + ")"; break;
      case op::log_or: body = "(or " + k[0] + " " + k[1] + ")"; break;
      case op::log_not: body = "(not " + k[0] + ")"; break;
      case op::eq: body = "(= " + k[0] + " " + k[1] + ")"; break;
      case op::ne: body = "(distinct " + k[0] + " " + k[1] + ")"; break;
      case op::ult: body = "(bvult " + k[0] + " " + k[1] + ")"; break;
      case op::ule: body = "(bvule " + k[0] + " " + k[1] + ")"; break;
      case op::ugt: body = "(bvugt " + k[0] + " " + k[1] + ")"; break;
      case op::uge: body = "(bvuge " + k[0] + " " + k[1] + ")"; break;
      case op::ite: body = "(ite " + k[0] + " " + k[1] + " " + k[2] + ")"; break;
      case op::app: {
        std::string fn;
        if (e->fn == ufn::sha3) {
          fn = "uf_sha3";
          if (!scope_.sha3) {
            scope_.sha3 = true;
            std::string w = smt_sort(sort::word);
            out += "(declare-fun uf_sha3 (" + w + " " + w + ") " + w + ")\n";
          }
        } else {
          fn = "uf_call_" + std::to_string(e->site);
          if (scope_.call_sites.insert(e->site).second) {
            std::string w = smt_sort(sort::word);
            out += "(declare-fun " + fn + " (" + w + " " + w + " " + w + ") " + w + ")\n";
          }
        }
        body = "(" + fn;
        for (const auto& arg : k) body += " " + arg;
        body += ")";
        break;
      }
      default:
        throw std::logic_error("solver_client: unencodable operator");
    }

    std::string name = "t" + std::to_string(next_term_++);
    out += "(define-fun " + name + " () " + smt_sort(e->srt) + " " + body + ")\n";
    memo.emplace(e.get(), name);
    return name;
  }

  var_pool* pool_;
  solver_config cfg_;
  detail::pipe_process proc_;
  scope_state scope_;
  bool ready_ = false;
  bool in_scope_ = false;
  sat_result last_ = sat_result::unknown;
  std::uint64_t next_term_ = 0;
  unsigned unknowns_ = 0;
  unsigned checks_ = 0;
};

}  // namespace casynth
