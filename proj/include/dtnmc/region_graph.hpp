#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "region.hpp"
#include "transform.hpp"

namespace dtnmc {

class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct LocalState {
  std::uint32_t loc = 0;
  Dbm region;

  bool operator==(const LocalState &) const = default;
  bool operator<(const LocalState &o) const {
    if (loc != o.loc)
      return loc < o.loc;
    return region < o.region;
  }
  std::size_t hash() const { return region.hash() * 31 + loc; }
};

struct LocalStateHash {
  std::size_t operator()(const LocalState &s) const { return s.hash(); }
};

// kind of the slot encoded in a normalized region (t rebased into [0,1) or marked unbounded)
inline Slot::Kind normalized_kind(const Dbm &r, std::size_t t_clock) {
  std::size_t t = t_clock + 1;
  if (r.at(t, 0).is_inf())
    return Slot::Kind::unbounded;
  if (r.at(t, 0) == Bound::le(0))
    return Slot::Kind::point;
  return Slot::Kind::open;
}

struct NormalizedRegionState {
  LocalState state;
  BigInt m = 0;
  std::optional<std::size_t> global;

  Slot slot() const {
    if (!global)
      return Slot::point(0);
    return Slot{normalized_kind(state.region, *global), m};
  }
  // the region with absolute t
  Dbm absolute() const {
    Dbm r = state.region;
    if (global && slot().kind != Slot::Kind::unbounded)
      r.translate(*global + 1, static_cast<std::int64_t>(m));
    return r;
  }
  bool operator==(const NormalizedRegionState &o) const { return state == o.state && m == o.m; }
  bool operator<(const NormalizedRegionState &o) const {
    if (m != o.m)
      return m < o.m;
    return state < o.state;
  }
};

inline RegionContext make_context(const TimedAutomaton &ta) {
  RegionContext ctx;
  ctx.bound = max_constants(ta);
  ctx.diag_bound = max_diagonal_constant(ta);
  ctx.group.assign(ta.clocks.size(), 0);
  ctx.global = ta.global_clock;
  if (ta.global_clock) {
    ctx.bound[*ta.global_clock] = 1;
    ctx.group[*ta.global_clock] = -1;
  }
  return ctx;
}

struct RegionSuccessors {
  Valuation rep;
  bool open = false;
  // immediate delay successor; equal to the source for maximal regions
  std::optional<LocalState> delay;
  bool wraps = false;
  std::vector<std::pair<std::size_t, LocalState>> discrete;
};

// lazy region automaton of a timed automaton; t, when present, is kept rebased to [0,1)
class RegionGraph {
public:
  explicit RegionGraph(TimedAutomaton ta, bool memoize = true)
      : ta_(std::move(ta)), ctx_(make_context(ta_)), memoize_(memoize), out_(ta_.locations.size()) {
    for (std::size_t i = 0; i < ta_.transitions.size(); ++i)
      out_[ta_.transitions[i].source].push_back(i);
  }

  const TimedAutomaton &automaton() const { return ta_; }
  const RegionContext &context() const { return ctx_; }
  std::optional<std::size_t> global() const { return ta_.global_clock; }
  std::size_t dim() const { return ta_.clocks.size() + 1; }

  LocalState initial() const {
    return {static_cast<std::uint32_t>(ta_.initial), Dbm::zero(dim())};
  }

  std::shared_ptr<const RegionSuccessors> successors(const LocalState &s) const {
    if (memoize_) {
      std::shared_lock lock(mutex_);
      auto it = memo_.find(s);
      if (it != memo_.end())
        return it->second;
    }
    auto res = std::make_shared<const RegionSuccessors>(compute(s));
    if (memoize_) {
      std::unique_lock lock(mutex_);
      return memo_.try_emplace(s, res).first->second;
    }
    return res;
  }

  std::size_t memo_size() const {
    std::shared_lock lock(mutex_);
    return memo_.size();
  }

  // delay successor of a point-slot state at the last bounded slot, landing in the unbounded tail
  std::optional<LocalState> delay_into_unbounded(const LocalState &s) const {
    auto succ = successors(s);
    auto v = time_successor_point(succ->rep, ctx_);
    if (!v)
      return std::nullopt;
    v->num[*global()] = 2 * v->den;
    if (!satisfies(*v, ta_.locations[s.loc].invariant))
      return std::nullopt;
    return LocalState{s.loc, region_of(*v, ctx_)};
  }

  std::string describe(const LocalState &s) const {
    return ta_.locations[s.loc].name + ", " + s.region.to_string(ta_.clocks);
  }

private:
  RegionSuccessors compute(const LocalState &s) const {
    RegionSuccessors out;
    out.rep = sample(s.region);
    out.open = time_open(out.rep, ctx_);
    const auto &inv = ta_.locations[s.loc].invariant;
    auto v = time_successor_point(out.rep, ctx_);
    if (!v) {
      out.delay = s;
    } else if (satisfies(*v, inv)) {
      if (auto g = global(); g && ctx_.bounded(*v, *g) && v->num[*g] == v->den) {
        v->num[*g] = 0;
        out.wraps = true;
      }
      out.delay = LocalState{s.loc, region_of(*v, ctx_)};
    }
    for (std::size_t i : out_[s.loc]) {
      const auto &tr = ta_.transitions[i];
      if (!satisfies(out.rep, tr.guard))
        continue;
      Valuation w = out.rep;
      for (auto c : tr.resets)
        w.num[c] = 0;
      if (!satisfies(w, ta_.locations[tr.target].invariant))
        continue;
      out.discrete.emplace_back(i, LocalState{static_cast<std::uint32_t>(tr.target), region_of(w, ctx_)});
    }
    return out;
  }

  TimedAutomaton ta_;
  RegionContext ctx_;
  bool memoize_;
  std::vector<std::vector<std::size_t>> out_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<LocalState, std::shared_ptr<const RegionSuccessors>, LocalStateHash> memo_;
};

struct RegionEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  // nullopt for delay edges
  std::optional<std::size_t> transition;
};

struct RegionReachability {
  std::vector<NormalizedRegionState> states;
  std::vector<RegionEdge> edges;
  std::vector<std::optional<std::size_t>> parent;

  std::optional<std::size_t> find(const std::string &loc, const std::string &region,
                                  const Slot &slot, const TimedAutomaton &ta) const {
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto &s = states[i];
      if (ta.locations[s.state.loc].name != loc || !(s.slot() == slot))
        continue;
      Dbm c = ta.global_clock ? eliminate_clock(s.state.region, *ta.global_clock) : s.state.region;
      std::vector<std::string> names = ta.clocks;
      if (ta.global_clock)
        names.erase(names.begin() + static_cast<std::ptrdiff_t>(*ta.global_clock));
      if (c.to_string(names) == region)
        return i;
    }
    return std::nullopt;
  }
};

// breadth-first exploration up to the point slot [slot_cap, slot_cap]
inline RegionReachability reachable_region_states(const RegionGraph &g, std::int64_t slot_cap,
                                                  std::size_t max_states = 1000000) {
  RegionReachability out;
  std::map<std::pair<BigInt, LocalState>, std::size_t> index;
  std::deque<std::size_t> queue;
  auto add = [&](LocalState s, BigInt m, std::optional<std::size_t> parent) {
    auto key = std::make_pair(m, s);
    auto it = index.find(key);
    if (it != index.end())
      return it->second;
    if (out.states.size() >= max_states)
      throw BudgetExceeded("region graph exploration exceeded " + std::to_string(max_states) +
                           " states");
    std::size_t id = out.states.size();
    out.states.push_back({std::move(s), std::move(m), g.global()});
    out.parent.push_back(parent);
    index.emplace(std::move(key), id);
    queue.push_back(id);
    return id;
  };
  add(g.initial(), 0, std::nullopt);
  while (!queue.empty()) {
    std::size_t id = queue.front();
    queue.pop_front();
    NormalizedRegionState cur = out.states[id];
    auto succ = g.successors(cur.state);
    if (succ->delay) {
      BigInt m = cur.m + (succ->wraps ? 1 : 0);
      Slot::Kind k = g.global() ? normalized_kind(cur.state.region, *g.global()) : Slot::Kind::point;
      bool within = !g.global() || (k == Slot::Kind::point ? m < slot_cap : m <= slot_cap);
      if (within) {
        std::size_t to = add(*succ->delay, m, id);
        out.edges.push_back({id, to, std::nullopt});
      }
    }
    for (const auto &[tr, s] : succ->discrete) {
      std::size_t to = add(s, cur.m, id);
      out.edges.push_back({id, to, tr});
    }
  }
  return out;
}

namespace dot_detail {

inline std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c;
  }
  return out;
}

} // namespace dot_detail

inline std::string to_dot(const RegionGraph &g, const RegionReachability &r) {
  const auto &ta = g.automaton();
  std::string out = "digraph regions {\n  node [shape=box];\n";
  for (std::size_t i = 0; i < r.states.size(); ++i)
    out += "  s" + std::to_string(i) + " [label=\"" +
           dot_detail::escape(g.describe(r.states[i].state)) + "\\n" + r.states[i].slot().to_string() +
           "\"];\n";
  for (const auto &e : r.edges) {
    out += "  s" + std::to_string(e.source) + " -> s" + std::to_string(e.target);
    if (e.transition)
      out += " [label=\"" + dot_detail::escape(ta.transitions[*e.transition].label) + "\"]";
    else
      out += " [style=dashed]";
    out += ";\n";
  }
  return out + "}\n";
}

} // namespace dtnmc
