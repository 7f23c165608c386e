#pragma once

#include <algorithm>
#include <map>
#include <optional>

#include "dsl.hpp"
#include "transform.hpp"

namespace dtnmc {

template <class A> struct Translation {
  A automaton;
  // one line per gadget element, naming the source transition it comes from
  std::vector<std::string> notes;
};

namespace bridge_detail {

template <class A> std::string describe(const A &a, const typename decltype(A::transitions)::value_type &t) {
  std::string s = a.locations[t.source].name + " -> " + a.locations[t.target].name;
  s += t.label.empty() ? " (silent)" : " (" + t.label + ")";
  return s;
}

template <class A> std::string fresh_location(const A &a, const std::string &base) {
  std::string n = base;
  for (int k = 2; a.find_location(n); ++k)
    n = base + "_" + std::to_string(k);
  return n;
}

inline bool constant_holds(std::int64_t lhs, Op op, std::int64_t rhs) {
  switch (op) {
  case Op::lt: return lhs < rhs;
  case Op::le: return lhs <= rhs;
  case Op::eq: return lhs == rhs;
  case Op::ge: return lhs >= rhs;
  default: return lhs > rhs;
  }
}

inline Op mirrored(Op op) {
  switch (op) {
  case Op::lt: return Op::gt;
  case Op::le: return Op::ge;
  case Op::ge: return Op::le;
  case Op::gt: return Op::lt;
  default: return Op::eq;
  }
}

// inv evaluated after the resets, as a constraint on the clocks before them; nullopt if unsatisfiable
inline std::optional<ClockConstraint> after_resets(const ClockConstraint &inv, const std::vector<std::size_t> &resets) {
  auto reset = [&](std::size_t c) { return std::find(resets.begin(), resets.end(), c) != resets.end(); };
  ClockConstraint out;
  for (const auto &a : inv.conjuncts) {
    bool rx = reset(a.clock), ry = a.other && reset(*a.other);
    if (!a.other || (!rx && !ry)) {
      if (!rx) {
        out.conjuncts.push_back(a);
        continue;
      }
      if (!constant_holds(0, a.op, a.constant))
        return std::nullopt;
      continue;
    }
    if (rx && ry) {
      if (!constant_holds(0, a.op, a.constant))
        return std::nullopt;
      continue;
    }
    // x - y op k with one side at zero
    Atom b{rx ? *a.other : a.clock, std::nullopt, rx ? mirrored(a.op) : a.op, rx ? -a.constant : a.constant};
    if (b.constant < 0) {
      if (b.op == Op::ge || b.op == Op::gt)
        continue;
      return std::nullopt;
    }
    out.conjuncts.push_back(b);
  }
  return out;
}

} // namespace bridge_detail

// guards become receptions on the guard location; every guard location gets one silent sender loop
inline Translation<LossyBroadcastAutomaton> gta_to_lbta(const GuardedTimedAutomaton &a) {
  Translation<LossyBroadcastAutomaton> out;
  auto &b = out.automaton;
  b.name = a.name;
  b.clocks = a.clocks;
  b.locations = a.locations;
  b.initial = a.initial;
  for (const auto &l : a.locations)
    b.broadcasts.push_back(l.name);
  std::set<std::size_t> loops;
  for (const auto &t : a.transitions) {
    BroadcastTransition bt;
    bt.source = t.source;
    bt.target = t.target;
    bt.label = t.label;
    bt.guard = t.guard;
    bt.resets = t.resets;
    if (t.location_guard) {
      bt.sync = {a.locations[*t.location_guard].name, SyncKind::receive};
      loops.insert(*t.location_guard);
      out.notes.push_back("receiver " + bt.sync.channel + "?? for " + bridge_detail::describe(a, t));
    } else {
      bt.sync = {a.locations[t.source].name, SyncKind::send};
      out.notes.push_back("sender " + bt.sync.channel + "!! for " + bridge_detail::describe(a, t));
    }
    b.transitions.push_back(std::move(bt));
  }
  for (auto g : loops) {
    BroadcastTransition bt;
    bt.source = bt.target = g;
    bt.sync = {a.locations[g].name, SyncKind::send};
    b.transitions.push_back(std::move(bt));
    out.notes.push_back("silent loop " + a.locations[g].name + "!! witnessing guard " +
                        a.locations[g].name);
  }
  return out;
}

// each sender passes through a zero-time auxiliary location that receivers use as their guard
inline Translation<GuardedTimedAutomaton> lbta_to_gta(const LossyBroadcastAutomaton &b) {
  Translation<GuardedTimedAutomaton> out;
  auto &a = out.automaton;
  a.name = b.name;
  a.clocks = b.clocks;
  a.locations = b.locations;
  a.initial = b.initial;
  std::string snd = "c_snd";
  while (b.find_clock(snd))
    snd += "_";
  a.clocks.push_back(snd);
  const std::size_t c_snd = a.clocks.size() - 1;

  auto unique = relabel_unique(b).first;
  std::map<std::string, std::vector<std::size_t>> aux_of;
  for (std::size_t i = 0; i < b.transitions.size(); ++i) {
    const auto &t = b.transitions[i];
    if (t.sync.kind != SyncKind::send)
      continue;
    auto entry = bridge_detail::after_resets(b.locations[t.target].invariant, t.resets);
    if (!entry) {
      out.notes.push_back("dropped sender " + bridge_detail::describe(b, t) + ": target invariant fails after resets");
      continue;
    }
    std::string key = unique.transitions[i].label;
    std::string base = "snd_" + b.locations[t.source].name + "_";
    for (char ch : key)
      base += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
    Location aux{bridge_detail::fresh_location(a, base), {}};
    aux.invariant.conjuncts.push_back(Atom{c_snd, std::nullopt, Op::le, 0});
    a.locations.push_back(aux);
    std::size_t q = a.locations.size() - 1;
    aux_of[t.sync.channel].push_back(q);

    Transition first;
    first.source = t.source;
    first.target = q;
    first.label = t.label;
    first.guard = t.guard;
    for (const auto &x : entry->conjuncts)
      first.guard.conjuncts.push_back(x);
    first.resets = {c_snd};
    a.transitions.push_back(first);
    Transition second;
    second.source = q;
    second.target = t.target;
    second.resets = t.resets;
    a.transitions.push_back(second);
    out.notes.push_back(aux.name + ": sender " + t.sync.channel + "!! of " + bridge_detail::describe(b, t));
  }
  std::map<std::string, std::size_t> nosnd;
  for (const auto &t : b.transitions) {
    if (t.sync.kind != SyncKind::receive)
      continue;
    std::vector<std::size_t> guards = aux_of[t.sync.channel];
    if (guards.empty()) {
      auto it = nosnd.find(t.sync.channel);
      if (it == nosnd.end()) {
        a.locations.push_back({bridge_detail::fresh_location(a, "nosnd_" + t.sync.channel), {}});
        it = nosnd.emplace(t.sync.channel, a.locations.size() - 1).first;
        out.notes.push_back(a.locations.back().name + ": never occupied, no sender of " + t.sync.channel);
      }
      guards.push_back(it->second);
    }
    for (auto g : guards) {
      Transition r;
      r.source = t.source;
      r.target = t.target;
      r.label = t.label;
      r.guard = t.guard;
      r.resets = t.resets;
      r.location_guard = g;
      a.transitions.push_back(r);
      out.notes.push_back("receiver of " + bridge_detail::describe(b, t) + " guarded by " +
                          a.locations[g].name);
    }
  }
  return out;
}

template <class A> std::string annotated(const Translation<A> &t, bool annotate) {
  std::string out;
  if (annotate)
    for (const auto &n : t.notes)
      out += "# " + n + "\n";
  return out + print_model(Automaton(t.automaton));
}

} // namespace dtnmc
