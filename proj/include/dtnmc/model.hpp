#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dtnmc {

class ModelError : public std::runtime_error {
public:
  ModelError(const std::string &msg, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(line ? std::to_string(line) + ":" + std::to_string(column) + ": " + msg
                                : msg),
        line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_, column_;
};

enum class Op { lt, le, eq, ge, gt };

inline const char *op_text(Op op) {
  switch (op) {
  case Op::lt: return "<";
  case Op::le: return "<=";
  case Op::eq: return "==";
  case Op::ge: return ">=";
  case Op::gt: return ">";
  }
  return "?";
}

// clock ~ constant, or clock ~ other + constant
struct Atom {
  std::size_t clock = 0;
  std::optional<std::size_t> other;
  Op op = Op::le;
  std::int64_t constant = 0;

  bool diagonal() const { return other.has_value(); }
  bool upper_bound() const { return !other && (op == Op::lt || op == Op::le); }
  bool operator==(const Atom &) const = default;
};

struct ClockConstraint {
  std::vector<Atom> conjuncts;

  bool trivial() const { return conjuncts.empty(); }
  bool operator==(const ClockConstraint &) const = default;
};

struct Location {
  std::string name;
  ClockConstraint invariant;
};

// an empty label is the silent label
struct Transition {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string label;
  ClockConstraint guard;
  std::vector<std::size_t> resets;
  std::optional<std::size_t> location_guard;
};

enum class SyncKind { send, receive };

struct Sync {
  std::string channel;
  SyncKind kind = SyncKind::send;
  bool operator==(const Sync &) const = default;
};

struct BroadcastTransition {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string label;
  ClockConstraint guard;
  std::vector<std::size_t> resets;
  Sync sync;
};

template <class T> struct AutomatonBase {
  std::string name;
  std::vector<std::string> clocks;
  std::vector<Location> locations;
  std::size_t initial = 0;
  std::vector<T> transitions;

  std::optional<std::size_t> find_location(const std::string &n) const {
    for (std::size_t i = 0; i < locations.size(); ++i)
      if (locations[i].name == n)
        return i;
    return std::nullopt;
  }
  std::optional<std::size_t> find_clock(const std::string &n) const {
    for (std::size_t i = 0; i < clocks.size(); ++i)
      if (clocks[i] == n)
        return i;
    return std::nullopt;
  }
  std::size_t location(const std::string &n) const {
    auto i = find_location(n);
    if (!i)
      throw ModelError("unknown location '" + n + "'");
    return *i;
  }
  std::set<std::string> labels() const {
    std::set<std::string> out;
    for (const auto &t : transitions)
      if (!t.label.empty())
        out.insert(t.label);
    return out;
  }
};

struct GuardedTimedAutomaton : AutomatonBase<Transition> {};

struct LossyBroadcastAutomaton : AutomatonBase<BroadcastTransition> {
  std::vector<std::string> broadcasts;
};

// location guards are never set; global_clock names the clock t when present
struct TimedAutomaton : AutomatonBase<Transition> {
  std::optional<std::size_t> global_clock;
};

using Automaton = std::variant<GuardedTimedAutomaton, LossyBroadcastAutomaton>;

// maximal constant per clock, compared in non-diagonal atoms of guards and invariants
template <class A> std::vector<std::int64_t> max_constants(const A &a) {
  std::vector<std::int64_t> m(a.clocks.size(), 0);
  auto visit = [&](const ClockConstraint &g) {
    for (const auto &at : g.conjuncts)
      if (!at.diagonal())
        m[at.clock] = std::max(m[at.clock], at.constant);
  };
  for (const auto &l : a.locations)
    visit(l.invariant);
  for (const auto &t : a.transitions)
    visit(t.guard);
  return m;
}

// largest diagonal constant, -1 when the automaton has no diagonal atoms
template <class A> std::int64_t max_diagonal_constant(const A &a) {
  std::int64_t d = -1;
  auto visit = [&](const ClockConstraint &g) {
    for (const auto &at : g.conjuncts)
      if (at.diagonal())
        d = std::max(d, at.constant);
  };
  for (const auto &l : a.locations)
    visit(l.invariant);
  for (const auto &t : a.transitions)
    visit(t.guard);
  if (d < 0)
    return d;
  auto m = max_constants(a);
  for (auto x : m)
    d = std::max(d, x);
  return d;
}

} // namespace dtnmc
