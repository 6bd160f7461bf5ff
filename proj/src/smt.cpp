#include "warden/smt.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "warden/error.hpp"
#include "warden/util.hpp"

namespace warden {

std::string_view to_string(SolverOutcome o) {
  switch (o) {
    case SolverOutcome::Sat: return "sat";
    case SolverOutcome::Unsat: return "unsat";
    case SolverOutcome::Unknown: return "unknown";
    case SolverOutcome::Timeout: return "timeout";
  }
  return "unknown";
}

namespace {

struct Sexpr {
  std::string atom;
  std::vector<Sexpr> items;
  bool is_list = false;
};

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : s_(text) {}

  std::vector<Sexpr> read_all() {
    std::vector<Sexpr> out;
    while (skip_space(), pos_ < s_.size()) {
      if (s_[pos_] == ')') {
        ++pos_;
        continue;
      }
      out.push_back(read());
    }
    return out;
  }

 private:
  void skip_space() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == ';') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  Sexpr read() {
    skip_space();
    Sexpr e;
    if (s_[pos_] == '(') {
      ++pos_;
      e.is_list = true;
      while (skip_space(), pos_ < s_.size() && s_[pos_] != ')') e.items.push_back(read());
      if (pos_ < s_.size()) ++pos_;
      return e;
    }
    std::size_t start = pos_;
    if (s_[pos_] == '|' || s_[pos_] == '"') {
      char q = s_[pos_++];
      while (pos_ < s_.size() && s_[pos_] != q) ++pos_;
      if (pos_ < s_.size()) ++pos_;
    } else {
      while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
             s_[pos_] != ')' && s_[pos_] != ';') {
        ++pos_;
      }
    }
    e.atom = std::string(s_.substr(start, pos_ - start));
    return e;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string render(const Sexpr& e) {
  if (!e.is_list) return e.atom;
  std::string out = "(";
  for (std::size_t i = 0; i < e.items.size(); ++i) {
    if (i) out += ' ';
    out += render(e.items[i]);
  }
  return out + ")";
}

int bv_width_of(const Sexpr& sort) {
  if (sort.is_list && sort.items.size() == 3 && sort.items[0].atom == "_" && sort.items[1].atom == "BitVec") {
    return std::atoi(sort.items[2].atom.c_str());
  }
  return 0;
}

std::optional<std::string> decimal_of(const Sexpr& v) {
  using boost::multiprecision::cpp_int;
  if (!v.is_list) {
    const auto& a = v.atom;
    if (a.rfind("#x", 0) == 0) return cpp_int("0x" + a.substr(2)).str();
    if (a.rfind("#b", 0) == 0) {
      cpp_int n = 0;
      for (char c : a.substr(2)) n = n * 2 + (c == '1' ? 1 : 0);
      return n.str();
    }
    if (a == "true" || a == "false") return a;
    if (!a.empty() && std::all_of(a.begin(), a.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; })) {
      return a;
    }
    return std::nullopt;
  }
  if (v.items.size() == 3 && v.items[0].atom == "_" && v.items[1].atom.rfind("bv", 0) == 0) {
    return v.items[1].atom.substr(2);
  }
  if (v.items.size() == 2 && v.items[0].atom == "-" && !v.items[1].is_list) return "-" + v.items[1].atom;
  return std::nullopt;
}

}  // namespace

SolverResult parse_solver_output(const std::string& output) {
  SolverResult r;
  std::istringstream in(output);
  std::vector<std::string> errors;
  std::string rest;
  bool verdict = false;
  for (std::string line; std::getline(in, line);) {
    if (verdict) {
      rest += line + "\n";
      continue;
    }
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.rfind("(error", 0) == 0) {
      errors.push_back(t);
      continue;
    }
    if (t == "sat" || t == "unsat" || t == "unknown" || t == "timeout") {
      verdict = true;
      r.outcome = t == "sat" ? SolverOutcome::Sat
                  : t == "unsat" ? SolverOutcome::Unsat
                  : t == "timeout" ? SolverOutcome::Timeout
                                   : SolverOutcome::Unknown;
    }
  }
  if (!errors.empty()) {
    r.outcome = SolverOutcome::Unknown;
    r.message = join(errors, "\n");
    return r;
  }
  if (!verdict) {
    r.message = output.empty() ? "solver produced no verdict" : trim(output);
    return r;
  }
  if (r.outcome == SolverOutcome::Sat) r.model_text = trim(rest);
  return r;
}

namespace {

std::string resolve_executable(const std::string& exe) {
  if (exe.find('/') != std::string::npos) return exe;
  const char* path = std::getenv("PATH");
  std::istringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
  for (std::string dir; std::getline(dirs, dir, ':');) {
    auto candidate = std::filesystem::path(dir) / exe;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate.string();
  }
  return exe;
}

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

}  // namespace

ProcessSolverRunner::ProcessSolverRunner(std::string executable, std::vector<std::string> args, SandboxLimits limits)
    : executable_(resolve_executable(executable)), args_(std::move(args)), limits_(limits) {}

SolverResult ProcessSolverRunner::run(const std::string& script, int timeout_ms) {
  ignore_sigpipe();
  int to_child[2], from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) return {SolverOutcome::Unknown, "", std::strerror(errno)};
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    return {SolverOutcome::Unknown, "", std::strerror(errno)};
  }

  std::vector<std::string> argv_store{executable_};
  argv_store.insert(argv_store.end(), args_.begin(), args_.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::string path_env = "PATH=/usr/local/bin:/usr/bin:/bin";
  char* envp[] = {path_env.data(), nullptr};
  rlim_t cpu_seconds = static_cast<rlim_t>(timeout_ms / 1000 + 2);

  pid_t pid = ::fork();
  if (pid < 0) return {SolverOutcome::Unknown, "", std::strerror(errno)};
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(to_child[0], 0);
    ::dup2(from_child[1], 1);
    ::dup2(from_child[1], 2);
    for (int fd = 3; fd < 1024; ++fd) ::close(fd);
    rlimit r{};
    r.rlim_cur = r.rlim_max = static_cast<rlim_t>(limits_.memory_bytes);
    ::setrlimit(RLIMIT_AS, &r);
    r.rlim_cur = r.rlim_max = cpu_seconds;
    ::setrlimit(RLIMIT_CPU, &r);
    r.rlim_cur = r.rlim_max = 0;
    ::setrlimit(RLIMIT_FSIZE, &r);
    ::setrlimit(RLIMIT_CORE, &r);
    r.rlim_cur = r.rlim_max = static_cast<rlim_t>(limits_.max_open_files);
    ::setrlimit(RLIMIT_NOFILE, &r);
    ::execve(argv[0], argv.data(), envp);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(to_child[0]);
  ::close(from_child[1]);
  int in_fd = to_child[1];
  int out_fd = from_child[0];
  ::fcntl(in_fd, F_SETFL, O_NONBLOCK);
  ::fcntl(out_fd, F_SETFL, O_NONBLOCK);

  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  std::size_t written = 0;
  std::string output;
  bool timed_out = false;
  char buf[65536];
  while (out_fd >= 0) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {out_fd, POLLIN, 0};
    if (in_fd >= 0) fds[n++] = {in_fd, POLLOUT, 0};
    int wait_ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
    if (::poll(fds, n, wait_ms) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (in_fd >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t k = ::write(in_fd, script.data() + written, script.size() - written);
      if (k > 0) written += static_cast<std::size_t>(k);
      if (k < 0 && errno != EAGAIN) written = script.size();
      if (written >= script.size()) {
        ::close(in_fd);
        in_fd = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      ssize_t k = ::read(out_fd, buf, sizeof buf);
      if (k > 0) {
        output.append(buf, static_cast<std::size_t>(k));
      } else if (k == 0 || errno != EAGAIN) {
        ::close(out_fd);
        out_fd = -1;
      }
    }
  }
  if (in_fd >= 0) ::close(in_fd);
  if (out_fd >= 0) ::close(out_fd);
  if (timed_out) ::kill(-pid, SIGKILL);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) return {SolverOutcome::Timeout, "", "solver exceeded " + std::to_string(timeout_ms) + " ms"};
  if (WIFSIGNALED(status)) {
    int sig = WTERMSIG(status);
    if (sig == SIGXCPU || sig == SIGKILL) return {SolverOutcome::Timeout, "", "solver hit its CPU limit"};
    return {SolverOutcome::Unknown, "", "solver killed by signal " + std::to_string(sig)};
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127 && output.empty()) {
    return {SolverOutcome::Unknown, "", "solver executable could not be started: " + executable_};
  }
  return parse_solver_output(output);
}

std::vector<SmtSymbol> declared_symbols(const std::string& script) {
  std::vector<SmtSymbol> out;
  for (const auto& e : SexprReader(script).read_all()) {
    if (!e.is_list || e.items.empty()) continue;
    const auto& head = e.items[0].atom;
    const Sexpr* sort = nullptr;
    if (head == "declare-const" && e.items.size() == 3) sort = &e.items[2];
    if (head == "declare-fun" && e.items.size() == 4 && e.items[2].is_list && e.items[2].items.empty()) {
      sort = &e.items[3];
    }
    if (!sort) continue;
    out.push_back({e.items[1].atom, render(*sort), bv_width_of(*sort)});
  }
  return out;
}

std::map<std::string, std::string> parse_model_values(const std::string& model_text) {
  std::map<std::string, std::string> out;
  std::vector<const Sexpr*> stack;
  auto all = SexprReader(model_text).read_all();
  for (const auto& e : all) stack.push_back(&e);
  while (!stack.empty()) {
    const Sexpr* e = stack.back();
    stack.pop_back();
    if (!e->is_list) continue;
    if (e->items.size() == 5 && e->items[0].atom == "define-fun" && e->items[2].is_list && e->items[2].items.empty()) {
      if (auto value = decimal_of(e->items[4])) out[e->items[1].atom] = *value;
      continue;
    }
    for (const auto& c : e->items) stack.push_back(&c);
  }
  return out;
}

namespace {

enum class SymbolRole { Balance, Iteration, Amount };

SymbolRole role_of(const std::string& name) {
  std::string n = to_lower(name);
  for (const char* k : {"balance", "reserve", "supply"}) {
    if (n.find(k) != std::string::npos) return SymbolRole::Balance;
  }
  for (const char* word : {"account", "discount"}) {
    for (auto pos = n.find(word); pos != std::string::npos; pos = n.find(word)) n.erase(pos, std::strlen(word));
  }
  for (const char* k : {"iter", "loop", "round", "step", "count", "times"}) {
    if (n.find(k) != std::string::npos) return SymbolRole::Iteration;
  }
  return SymbolRole::Amount;
}

std::string pow2(int bits) {
  return (boost::multiprecision::cpp_int(1) << bits).str();
}

}  // namespace

std::vector<std::string> default_realism_constraints(const std::vector<SmtSymbol>& symbols, const RealismOptions& options) {
  std::vector<std::string> out;
  const std::string cap = pow2(options.amount_cap_bits);
  const std::string iters = std::to_string(options.max_iterations);
  for (const auto& s : symbols) {
    auto role = role_of(s.name);
    if (s.bv_width > 0) {
      std::string w = std::to_string(s.bv_width);
      if (role == SymbolRole::Balance) {
        out.push_back("(bvsge " + s.name + " (_ bv0 " + w + "))");
      } else if (role == SymbolRole::Iteration) {
        if (s.bv_width > 8) out.push_back("(bvule " + s.name + " (_ bv" + iters + " " + w + "))");
      } else if (s.bv_width > options.amount_cap_bits) {
        out.push_back("(bvule " + s.name + " (_ bv" + cap + " " + w + "))");
      }
    } else if (s.sort == "Int" || s.sort == "Real") {
      if (role == SymbolRole::Balance) {
        out.push_back("(>= " + s.name + " 0)");
      } else {
        out.push_back("(>= " + s.name + " 0)");
        out.push_back("(<= " + s.name + " " + (role == SymbolRole::Iteration ? iters : cap) + ")");
      }
    }
  }
  return out;
}

std::string attach_realism(const std::string& script, const std::vector<std::string>& constraints) {
  std::string asserts;
  for (const auto& c : constraints) asserts += "(assert " + c + ")\n";
  std::string out = script;
  auto pos = out.find("(check-sat)");
  if (pos == std::string::npos) {
    if (!out.empty() && out.back() != '\n') out += '\n';
    return out + asserts + "(check-sat)\n(get-model)\n";
  }
  out.insert(pos, asserts);
  pos += asserts.size() + std::string_view("(check-sat)").size();
  if (out.find("(get-model)", pos) == std::string::npos) out.insert(pos, "\n(get-model)");
  return out;
}

std::string smt_literal(const SmtSymbol& symbol, const std::string& value) {
  if (symbol.bv_width > 0) return "(_ bv" + value + " " + std::to_string(symbol.bv_width) + ")";
  if (!value.empty() && value[0] == '-') return "(- " + value.substr(1) + ")";
  return value;
}

SolverResult recheck_model(const std::string& script, const std::map<std::string, std::string>& values,
                           SolverRunner& runner, int timeout_ms) {
  std::vector<std::string> pins;
  for (const auto& s : declared_symbols(script)) {
    auto it = values.find(s.name);
    if (it != values.end()) pins.push_back("(= " + s.name + " " + smt_literal(s, it->second) + ")");
  }
  return runner.run(attach_realism(script, pins), timeout_ms);
}

nlohmann::json to_json(const SmtProblem& p) {
  return {{"function", p.function},
          {"outcome", to_string(p.outcome)},
          {"realism_constraints", p.realism_constraints},
          {"model_values", p.model_values},
          {"message", p.message}};
}

}  // namespace warden
