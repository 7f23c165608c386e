#pragma once

#include <functional>

#include "region_graph.hpp"

namespace dtnmc {

enum class TimelockVerdict { proved, refuted, skipped };

inline const char *verdict_text(TimelockVerdict v) {
  switch (v) {
  case TimelockVerdict::proved: return "proved";
  case TimelockVerdict::refuted: return "refuted";
  case TimelockVerdict::skipped: return "skipped";
  }
  return "?";
}

struct TimelockResult {
  TimelockVerdict verdict = TimelockVerdict::skipped;
  // location and region over the automaton's clocks
  std::optional<LocalState> witness;
  std::string witness_text;
};

// Time can diverge from a state iff it reaches a cycle of the region graph that contains a tick,
// where a tick is a self-loop resetting an extra clock z once z >= 1.
inline TimelockResult check_timelock_free(const TimedAutomaton &a, std::size_t max_states = 1000000) {
  TimedAutomaton ta = a;
  ta.global_clock.reset();
  std::size_t z = ta.clocks.size();
  std::string zname = "z";
  while (ta.find_clock(zname))
    zname += "_";
  ta.clocks.push_back(zname);
  std::size_t first_tick = ta.transitions.size();
  for (std::size_t q = 0; q < ta.locations.size(); ++q) {
    Transition tick;
    tick.source = tick.target = q;
    tick.guard.conjuncts.push_back(Atom{z, std::nullopt, Op::ge, 1});
    tick.resets = {z};
    ta.transitions.push_back(tick);
  }
  RegionGraph g(ta);
  auto r = reachable_region_states(g, 0, max_states);
  const std::size_t n = r.states.size();
  std::vector<std::vector<std::size_t>> succ(n), pred(n);
  for (const auto &e : r.edges) {
    succ[e.source].push_back(e.target);
    pred[e.target].push_back(e.source);
  }

  // Tarjan, iterative
  std::vector<std::size_t> comp(n, SIZE_MAX), low(n), idx(n, SIZE_MAX), stack;
  std::vector<bool> on(n, false);
  std::size_t counter = 0, ncomp = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (idx[root] != SIZE_MAX)
      continue;
    std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
    idx[root] = low[root] = counter++;
    stack.push_back(root);
    on[root] = true;
    while (!call.empty()) {
      auto &[v, k] = call.back();
      if (k < succ[v].size()) {
        std::size_t w = succ[v][k++];
        if (idx[w] == SIZE_MAX) {
          idx[w] = low[w] = counter++;
          stack.push_back(w);
          on[w] = true;
          call.emplace_back(w, 0);
        } else if (on[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
        continue;
      }
      if (low[v] == idx[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      std::size_t done = v;
      call.pop_back();
      if (!call.empty())
        low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }

  std::vector<bool> diverge(n, false);
  std::deque<std::size_t> queue;
  for (const auto &e : r.edges)
    if (e.transition && *e.transition >= first_tick && comp[e.source] == comp[e.target] &&
        !diverge[e.source]) {
      diverge[e.source] = true;
      queue.push_back(e.source);
    }
  while (!queue.empty()) {
    std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t p : pred[v])
      if (!diverge[p]) {
        diverge[p] = true;
        queue.push_back(p);
      }
  }

  TimelockResult res;
  res.verdict = TimelockVerdict::proved;
  // prefer a state without any way out, else the first blocked state found
  std::optional<std::size_t> witness;
  for (std::size_t i = 0; i < n; ++i) {
    if (diverge[i])
      continue;
    if (!witness)
      witness = i;
    bool stuck = std::all_of(succ[i].begin(), succ[i].end(), [&](std::size_t w) { return w == i; });
    if (stuck) {
      witness = i;
      break;
    }
  }
  if (witness) {
    res.verdict = TimelockVerdict::refuted;
    LocalState s = r.states[*witness].state;
    s.region = s.region.eliminate(z + 1);
    res.witness = s;
    res.witness_text = a.locations[s.loc].name + ", " + s.region.to_string(a.clocks);
  }
  return res;
}

inline TimelockResult check_timelock_free(const GuardedTimedAutomaton &a,
                                          std::size_t max_states = 1000000) {
  return check_timelock_free(strip_guarded(a), max_states);
}

struct ValidationOptions {
  bool skip_timelock = false;
  std::size_t max_states = 1000000;
};

struct ValidationReport {
  TimelockResult timelock;
  RelabelMap relabel_map;
  std::vector<std::string> diagnostics;

  bool ok() const { return timelock.verdict != TimelockVerdict::refuted; }
};

inline ValidationReport validate(const GuardedTimedAutomaton &a, const ValidationOptions &opt = {}) {
  ValidationReport rep;
  rep.relabel_map = relabel_unique(a).second;
  for (const auto &[in, user] : rep.relabel_map.to_user) {
    if (user.empty())
      rep.diagnostics.push_back("silent transition relabeled as " + in);
    else if (in != user)
      rep.diagnostics.push_back("duplicate label " + user + " relabeled as " + in);
  }
  if (opt.skip_timelock) {
    rep.timelock.verdict = TimelockVerdict::skipped;
  } else {
    rep.timelock = check_timelock_free(a, opt.max_states);
    if (rep.timelock.verdict == TimelockVerdict::refuted)
      rep.diagnostics.push_back("Assumption 1 refuted at (" + rep.timelock.witness_text + ")");
  }
  return rep;
}

inline ValidationReport validate(const LossyBroadcastAutomaton &b, const ValidationOptions & = {}) {
  ValidationReport rep;
  rep.relabel_map = relabel_unique(b).second;
  rep.timelock.verdict = TimelockVerdict::skipped;
  std::set<std::string> senders;
  for (const auto &t : b.transitions)
    if (t.sync.kind == SyncKind::send)
      senders.insert(t.sync.channel);
  for (const auto &t : b.transitions)
    if (t.sync.kind == SyncKind::receive && !senders.count(t.sync.channel))
      rep.diagnostics.push_back("receiver " + t.sync.channel + "?? has no matching sender");
  return rep;
}

} // namespace dtnmc
