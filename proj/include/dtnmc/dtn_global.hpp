#pragma once

#include <variant>

#include "dtn_local.hpp"

namespace dtnmc {

// formula over location occupancy: #q >= 1, #q == 0, &&, ||
struct Constraint {
  enum class Kind { occupied, empty, conj, disj };
  Kind kind = Kind::occupied;
  std::size_t location = 0;
  std::vector<Constraint> children;

  static Constraint atom(std::size_t q, bool occupied) {
    Constraint c;
    c.kind = occupied ? Kind::occupied : Kind::empty;
    c.location = q;
    return c;
  }
};

class ConstraintError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace constraint_detail {

class Parser {
public:
  Parser(const std::string &text, const GuardedTimedAutomaton &a) : s_(text), a_(a) {}

  Constraint parse() {
    Constraint c = disj();
    skip();
    if (pos_ != s_.size())
      fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return c;
  }

private:
  [[noreturn]] void fail(const std::string &msg) const {
    throw ConstraintError("constraint column " + std::to_string(pos_ + 1) + ": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool accept(const std::string &tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  Constraint disj() {
    Constraint c = conj();
    if (!accept("||"))
      return c;
    Constraint out;
    out.kind = Constraint::Kind::disj;
    out.children.push_back(std::move(c));
    do
      out.children.push_back(conj());
    while (accept("||"));
    return out;
  }
  Constraint conj() {
    Constraint c = primary();
    if (!accept("&&"))
      return c;
    Constraint out;
    out.kind = Constraint::Kind::conj;
    out.children.push_back(std::move(c));
    do
      out.children.push_back(primary());
    while (accept("&&"));
    return out;
  }
  Constraint primary() {
    if (accept("(")) {
      Constraint c = disj();
      if (!accept(")"))
        fail("expected ')'");
      return c;
    }
    if (!accept("#"))
      fail("expected '#<location>' or '('");
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    if (name.empty())
      fail("expected location name");
    auto q = a_.find_location(name);
    if (!q)
      throw ConstraintError("unknown location '" + name + "'");
    if (accept(">=")) {
      skip();
      if (!accept("1"))
        fail("only '>= 1' is supported");
      return Constraint::atom(*q, true);
    }
    if (accept("==")) {
      if (!accept("0"))
        fail("only '== 0' is supported");
      return Constraint::atom(*q, false);
    }
    fail("expected '>= 1' or '== 0'");
  }

  std::string s_;
  const GuardedTimedAutomaton &a_;
  std::size_t pos_ = 0;
};

} // namespace constraint_detail

inline Constraint parse_constraint(const std::string &text, const GuardedTimedAutomaton &a) {
  return constraint_detail::Parser(text, a).parse();
}

inline bool eval_constraint(const std::vector<bool> &occupied, const Constraint &c) {
  switch (c.kind) {
  case Constraint::Kind::occupied: return occupied[c.location];
  case Constraint::Kind::empty: return !occupied[c.location];
  case Constraint::Kind::conj:
    return std::all_of(c.children.begin(), c.children.end(),
                       [&](const Constraint &x) { return eval_constraint(occupied, x); });
  case Constraint::Kind::disj:
    return std::any_of(c.children.begin(), c.children.end(),
                       [&](const Constraint &x) { return eval_constraint(occupied, x); });
  }
  return false;
}

inline bool eval_constraint(const std::vector<LocalState> &support, std::size_t locations,
                            const Constraint &c) {
  std::vector<bool> occ(locations, false);
  for (const auto &s : support)
    occ[s.loc] = true;
  return eval_constraint(occ, c);
}

inline std::string to_string(const Constraint &c, const GuardedTimedAutomaton &a) {
  switch (c.kind) {
  case Constraint::Kind::occupied: return "#" + a.locations[c.location].name + ">=1";
  case Constraint::Kind::empty: return "#" + a.locations[c.location].name + "==0";
  default: break;
  }
  std::string out;
  const char *sep = c.kind == Constraint::Kind::conj ? " && " : " || ";
  for (const auto &x : c.children) {
    std::string s = to_string(x, a);
    if (c.kind == Constraint::Kind::conj && x.kind == Constraint::Kind::disj)
      s = "(" + s + ")";
    out += (out.empty() ? "" : sep) + s;
  }
  return out;
}

// For a location where time can get stuck, the configurations in which it is occupied and every
// guard location of its outgoing guarded transitions is empty.
inline std::string timelock_constraint(const GuardedTimedAutomaton &a, std::size_t q) {
  std::set<std::size_t> guards;
  for (const auto &t : a.transitions)
    if (t.source == q && t.location_guard && *t.location_guard != q)
      guards.insert(*t.location_guard);
  std::string out = "#" + a.locations[q].name + ">=1";
  for (auto g : guards)
    out += " && #" + a.locations[g].name + "==0";
  return out;
}

// a support is a sorted set of ids of local region states
using Support = std::vector<std::uint32_t>;

struct SupportHash {
  std::size_t operator()(const Support &s) const {
    std::size_t h = s.size();
    for (auto x : s)
      h = (h ^ x) * 0x100000001b3ULL;
    return h;
  }
};

// hash-consed supports; ids are stable for equal contents
class SupportPool {
public:
  std::uint32_t intern(Support s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    auto it = ids_.find(s);
    if (it != ids_.end())
      return it->second;
    auto id = static_cast<std::uint32_t>(sets_.size());
    sets_.push_back(s);
    ids_.emplace(std::move(s), id);
    return id;
  }
  const Support &operator[](std::uint32_t id) const { return sets_[id]; }
  std::size_t size() const { return sets_.size(); }
  void clear() {
    sets_.clear();
    ids_.clear();
  }

private:
  std::deque<Support> sets_;
  std::unordered_map<Support, std::uint32_t, SupportHash> ids_;
};

struct GlobalLayer {
  Slot slot;
  // sorted support ids; equal contents share an id within one engine
  std::vector<std::uint32_t> sets;
  // discovery edges
  std::vector<LayerEdge> edges;
  std::vector<std::pair<std::size_t, std::uint32_t>> boundary;

  std::optional<std::size_t> index_of(std::uint32_t id) const {
    auto it = std::lower_bound(sets.begin(), sets.end(), id);
    if (it == sets.end() || *it != id)
      return std::nullopt;
    return static_cast<std::size_t>(it - sets.begin());
  }
};

struct GlobalOptions {
  // RS'' = RS' \ {(q,r)} even when the step returns to (q,r)
  bool literal_self_loops = true;
  // answer single-atom and statically decided queries without building supports
  bool shortcuts = true;
};

class GlobalEngine {
public:
  GlobalEngine(const GuardedTimedAutomaton &a, EngineOptions opt, GlobalOptions gopt = {},
               bool memoize = true)
      : local_(a, std::move(opt), memoize), gopt_(gopt) {}

  const LayerEngine &local() const { return local_; }
  const GuardedTimedAutomaton &gta() const { return local_.gta(); }
  const GlobalOptions &options() const { return gopt_; }

  std::uint32_t state_id(const LocalState &s) const {
    auto it = state_ids_.find(s);
    if (it != state_ids_.end())
      return it->second;
    auto id = static_cast<std::uint32_t>(states_.size());
    states_.push_back(s);
    info_.emplace_back();
    state_ids_.emplace(s, id);
    return id;
  }
  const LocalState &state(std::uint32_t id) const { return states_[id]; }
  std::uint32_t intern(Support s) const { return pool_.intern(std::move(s)); }
  const Support &support(std::uint32_t id) const { return pool_[id]; }
  std::vector<LocalState> members(std::uint32_t id) const {
    std::vector<LocalState> out;
    for (auto s : pool_[id])
      out.push_back(states_[s]);
    return out;
  }
  std::size_t pool_size() const { return pool_.size(); }

  // forget supports and states; only valid between layers, with the seed carried over by the caller
  void reset_tables() {
    pool_.clear();
    states_.clear();
    info_.clear();
    state_ids_.clear();
  }

  std::uint32_t initial() const { return intern({state_id(local_.graph().initial())}); }

  // positive delays inside the slot, the successor across the slot boundary, discrete steps
  struct StateInfo {
    bool ready = false;
    std::vector<std::uint32_t> delays;
    std::optional<std::uint32_t> boundary;
    std::vector<std::pair<std::size_t, std::uint32_t>> discrete;
  };

  const StateInfo &info(std::uint32_t id, const Slot &slot) const {
    if (info_[id].ready)
      return info_[id];
    StateInfo out;
    const auto &g = local_.graph();
    const LocalState s = states_[id];
    auto succ = g.successors(s);
    if (slot.kind != Slot::Kind::point) {
      if (succ->open)
        out.delays.push_back(id);
      LocalState cur = s;
      auto step = succ;
      while (step->delay && !step->wraps && !(*step->delay == cur)) {
        cur = *step->delay;
        out.delays.push_back(state_id(cur));
        step = g.successors(cur);
      }
      std::sort(out.delays.begin(), out.delays.end());
      out.delays.erase(std::unique(out.delays.begin(), out.delays.end()), out.delays.end());
    }
    if (succ->delay) {
      if (slot.kind == Slot::Kind::point) {
        if (slot.m < local_.tmax())
          out.boundary = state_id(*succ->delay);
        else if (auto u = g.delay_into_unbounded(s))
          out.boundary = state_id(*u);
      } else if (slot.kind == Slot::Kind::open && succ->wraps) {
        out.boundary = state_id(*succ->delay);
      }
    }
    for (const auto &[tr, tgt] : succ->discrete)
      out.discrete.emplace_back(tr, state_id(tgt));
    out.ready = true;
    info_[id] = std::move(out);
    return info_[id];
  }

  // close seeds under Rule 1 and Rule 2; stop early once a support satisfies the predicate
  GlobalLayer close(const Slot &slot, const std::vector<std::uint32_t> &seed,
                    const std::function<bool(std::uint32_t)> &stop = {},
                    std::optional<std::uint32_t> *hit = nullptr) const {
    const auto &opt = local_.options();
    std::vector<std::uint32_t> order;
    std::unordered_map<std::uint32_t, std::size_t> ids;
    std::vector<LayerEdge> edges;
    std::vector<std::pair<std::size_t, std::uint32_t>> boundary;
    std::deque<std::size_t> work;
    bool stopped = false;
    // only the edge that first reaches a support is kept, which is enough for witnesses
    auto add = [&](std::uint32_t id, std::optional<std::size_t> from = std::nullopt,
                   std::optional<std::size_t> tr = std::nullopt) {
      auto it = ids.find(id);
      if (it != ids.end())
        return it->second;
      if (from)
        edges.push_back({*from, order.size(), tr});
      if (order.size() >= opt.max_states)
        throw BudgetExceeded("global layer exceeded " + std::to_string(opt.max_states) + " supports");
      std::size_t k = order.size();
      order.push_back(id);
      ids.emplace(id, k);
      work.push_back(k);
      if (!stopped && stop && stop(id)) {
        stopped = true;
        if (hit)
          *hit = id;
      }
      return k;
    };
    for (auto id : seed)
      add(id);
    const std::size_t nloc = gta().locations.size();
    std::vector<bool> present(nloc);
    while (!work.empty() && !stopped) {
      std::size_t k = work.front();
      work.pop_front();
      const Support rs = pool_[order[k]];

      // Rule 1: every member delays by the same positive amount inside the slot
      if (slot.kind != Slot::Kind::point) {
        std::vector<const std::vector<std::uint32_t> *> choices;
        bool all = true;
        for (auto s : rs) {
          choices.push_back(&info(s, slot).delays);
          if (choices.back()->empty())
            all = false;
        }
        if (all) {
          std::vector<std::size_t> pick(rs.size(), 0);
          Support next(rs.size());
          while (!stopped) {
            for (std::size_t i = 0; i < rs.size(); ++i)
              next[i] = (*choices[i])[pick[i]];
            add(intern(next), k);
            std::size_t i = 0;
            while (i < pick.size() && ++pick[i] == choices[i]->size())
              pick[i++] = 0;
            if (i == pick.size())
              break;
          }
        }
      }
      if (slot.kind != Slot::Kind::unbounded) {
        Support next;
        for (auto s : rs) {
          auto b = info(s, slot).boundary;
          if (!b) {
            next.clear();
            break;
          }
          next.push_back(*b);
        }
        if (!next.empty())
          boundary.emplace_back(k, intern(std::move(next)));
      }

      // Rule 2: one member steps, witnessed by a member at the guard location
      std::fill(present.begin(), present.end(), false);
      for (auto s : rs)
        present[states_[s].loc] = true;
      for (auto s : rs) {
        if (stopped)
          break;
        for (const auto &[tr, tgt] : info(s, slot).discrete) {
          auto guard = local_.location_guard(tr);
          if (guard && !present[*guard])
            continue;
          Support keep = rs;
          keep.push_back(tgt);
          std::uint32_t keep_id = intern(keep);
          add(keep_id, k, tr);
          Support drop;
          bool self = tgt == s;
          for (auto x : pool_[keep_id])
            if (x != s || (self && !gopt_.literal_self_loops))
              drop.push_back(x);
          if (!drop.empty())
            add(intern(std::move(drop)), k, tr);
        }
      }
    }

    GlobalLayer layer;
    layer.slot = slot;
    std::vector<std::size_t> perm(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
      perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](auto x, auto y) { return order[x] < order[y]; });
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      rank[perm[i]] = i;
      layer.sets.push_back(order[perm[i]]);
    }
    for (auto &e : edges)
      layer.edges.push_back({rank[e.source], rank[e.target], e.transition});
    auto same = [](const LayerEdge &x, const LayerEdge &y) {
      return x.source == y.source && x.target == y.target && x.transition == y.transition;
    };
    std::sort(layer.edges.begin(), layer.edges.end(), [](const LayerEdge &x, const LayerEdge &y) {
      return std::tie(x.source, x.target, x.transition) < std::tie(y.source, y.target, y.transition);
    });
    layer.edges.erase(std::unique(layer.edges.begin(), layer.edges.end(), same), layer.edges.end());
    for (auto &[src, tgt] : boundary)
      layer.boundary.emplace_back(rank[src], tgt);
    std::sort(layer.boundary.begin(), layer.boundary.end());
    return layer;
  }

  // members of a support in canonical order, independent of id assignment
  std::vector<LocalState> key(std::uint32_t id) const {
    auto out = members(id);
    std::sort(out.begin(), out.end());
    return out;
  }

  static std::vector<std::uint32_t> next_seed(const GlobalLayer &l) {
    std::vector<std::uint32_t> out;
    for (const auto &[src, tgt] : l.boundary)
      out.push_back(tgt);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<std::vector<LocalState>> layer_key(const GlobalLayer &l) const {
    std::vector<std::vector<LocalState>> out;
    for (auto id : l.sets)
      out.push_back(key(id));
    std::sort(out.begin(), out.end());
    return out;
  }

  Fingerprint fingerprint(const GlobalLayer &l) const {
    std::vector<LocalState> flat;
    LocalState sep{UINT32_MAX, Dbm()};
    for (const auto &s : layer_key(l)) {
      flat.insert(flat.end(), s.begin(), s.end());
      flat.push_back(sep);
    }
    return dtnmc::fingerprint(flat);
  }

  std::string describe(std::uint32_t id) const {
    std::string out;
    for (const auto &s : key(id))
      out += (out.empty() ? "" : "; ") + local_.describe(s);
    return "{" + out + "}";
  }

private:
  LayerEngine local_;
  GlobalOptions gopt_;
  mutable SupportPool pool_;
  mutable std::deque<LocalState> states_;
  mutable std::deque<StateInfo> info_;
  mutable std::unordered_map<LocalState, std::uint32_t, LocalStateHash> state_ids_;
};

struct GlobalBuild {
  std::vector<GlobalLayer> layers;
  std::optional<std::size_t> i0, l0;
  // support satisfying the stop predicate, found in the last layer
  std::optional<std::uint32_t> hit;
};

inline GlobalBuild build_global_layers(const GlobalEngine &eng,
                                       const std::function<bool(std::uint32_t)> &stop = {}) {
  GlobalBuild out;
  std::map<std::vector<std::uint32_t>, std::size_t> seen;
  Slot slot = Slot::point(0);
  std::vector<std::uint32_t> seed{eng.initial()};
  while (true) {
    eng.local().check_cap(out.layers.size() + 1);
    out.layers.push_back(eng.close(slot, seed, stop, &out.hit));
    if (out.hit)
      return out;
    const GlobalLayer &w = out.layers.back();
    std::size_t l = out.layers.size() - 1;
    if (slot.kind == Slot::Kind::point) {
      auto [it, fresh] = seen.emplace(w.sets, l);
      if (!fresh) {
        out.i0 = it->second;
        out.l0 = l;
        return out;
      }
    }
    if (slot.kind == Slot::Kind::unbounded)
      return out;
    seed = GlobalEngine::next_seed(w);
    slot = eng.local().next(slot);
  }
}

struct GlobalAutomaton {
  std::vector<GlobalLayer> layers;
  std::vector<std::size_t> offset;
  std::vector<DraEdge> edges;
  std::optional<std::size_t> i0, l0;
  std::size_t initial = 0;

  std::size_t size() const { return offset.empty() ? 0 : offset.back() + layers.back().sets.size(); }
  std::pair<std::size_t, std::size_t> locate(std::size_t id) const {
    std::size_t l = static_cast<std::size_t>(std::upper_bound(offset.begin(), offset.end(), id) -
                                             offset.begin()) - 1;
    return {l, id - offset[l]};
  }
  std::uint32_t support(std::size_t id) const {
    auto [l, k] = locate(id);
    return layers[l].sets[k];
  }
  const Slot &slot(std::size_t id) const { return layers[locate(id).first].slot; }
};

inline GlobalAutomaton apply_global_loopback(const GlobalEngine &eng, const GlobalBuild &b) {
  GlobalAutomaton d;
  d.i0 = b.i0;
  d.l0 = b.l0;
  std::size_t count = b.l0 ? *b.l0 : b.layers.size();
  d.layers.assign(b.layers.begin(), b.layers.begin() + static_cast<std::ptrdiff_t>(count));
  std::size_t off = 0;
  for (const auto &l : d.layers) {
    d.offset.push_back(off);
    off += l.sets.size();
  }
  d.initial = *d.layers[0].index_of(eng.initial());
  for (std::size_t l = 0; l < count; ++l) {
    const GlobalLayer &w = d.layers[l];
    for (const auto &e : w.edges)
      d.edges.push_back({d.offset[l] + e.source, d.offset[l] + e.target,
                         e.transition ? DraEdge::Kind::discrete : DraEdge::Kind::delay, e.transition});
    if (l + 1 < count) {
      for (const auto &[src, tgt] : w.boundary)
        d.edges.push_back({d.offset[l] + src, d.offset[l + 1] + *d.layers[l + 1].index_of(tgt),
                           DraEdge::Kind::boundary, std::nullopt});
    } else if (b.i0) {
      const GlobalLayer &back = d.layers[*b.i0];
      for (const auto &[src, tgt] : w.boundary)
        d.edges.push_back({d.offset[l] + src, d.offset[*b.i0] + *back.index_of(tgt),
                           DraEdge::Kind::loopback, std::nullopt});
    }
  }
  return d;
}

inline std::string to_dot(const GlobalEngine &eng, const GlobalAutomaton &d) {
  std::string out = "digraph global {\n  compound=true;\n  node [shape=box];\n";
  for (std::size_t l = 0; l < d.layers.size(); ++l) {
    out += "  subgraph cluster_" + std::to_string(l) + " {\n    label=\"W" + std::to_string(l) + " " +
           d.layers[l].slot.to_string() + "\";\n";
    for (std::size_t k = 0; k < d.layers[l].sets.size(); ++k)
      out += "    s" + std::to_string(d.offset[l] + k) + " [label=\"" +
             dot_detail::escape(eng.describe(d.layers[l].sets[k])) + "\"];\n";
    out += "  }\n";
  }
  for (const auto &e : d.edges) {
    out += "  s" + std::to_string(e.source) + " -> s" + std::to_string(e.target);
    if (e.transition)
      out += " [label=\"" +
             dot_detail::escape(eng.local().labels().user(eng.gta().transitions[*e.transition].label)) + "\"]";
    else if (e.kind == DraEdge::Kind::loopback)
      out += " [style=dashed, color=blue]";
    else
      out += " [style=dashed]";
    out += ";\n";
  }
  return out + "}\n";
}

// disjunctive normal form as (occupied, empty) location sets; nullopt when it grows too large
inline std::optional<std::vector<std::pair<std::set<std::size_t>, std::set<std::size_t>>>>
constraint_dnf(const Constraint &c, std::size_t limit = 4096) {
  using Term = std::pair<std::set<std::size_t>, std::set<std::size_t>>;
  using Dnf = std::vector<Term>;
  switch (c.kind) {
  case Constraint::Kind::occupied: return Dnf{{{c.location}, {}}};
  case Constraint::Kind::empty: return Dnf{{{}, {c.location}}};
  case Constraint::Kind::disj: {
    Dnf out;
    for (const auto &x : c.children) {
      auto d = constraint_dnf(x, limit);
      if (!d || out.size() + d->size() > limit)
        return std::nullopt;
      out.insert(out.end(), d->begin(), d->end());
    }
    return out;
  }
  case Constraint::Kind::conj: {
    Dnf out{{}};
    for (const auto &x : c.children) {
      auto d = constraint_dnf(x, limit);
      if (!d || out.size() * d->size() > limit)
        return std::nullopt;
      Dnf next;
      for (const auto &a : out)
        for (const auto &b : *d) {
          Term t = a;
          t.first.insert(b.first.begin(), b.first.end());
          t.second.insert(b.second.begin(), b.second.end());
          next.push_back(std::move(t));
        }
      out = std::move(next);
    }
    return out;
  }
  }
  return std::nullopt;
}

struct GlobalResult {
  std::string query;
  bool streaming = false;
  bool reachable = false;
  // static, local or supports
  std::string method = "supports";
  std::size_t layers_built = 0;
  std::optional<std::size_t> i0, l0;
  // satisfying support and its slot
  std::vector<LocalState> support;
  Slot slot;
  std::vector<WitnessStep> witness;
  StreamingStats stats;
};

namespace global_detail {

// decide from local reachability alone when possible
inline bool shortcut(const GlobalEngine &eng, const Constraint &phi, GlobalResult &res) {
  auto dnf = constraint_dnf(phi);
  if (!dnf)
    return false;
  auto build = build_layers(eng.local());
  std::set<std::size_t> reach;
  for (const auto &l : build.layers)
    for (const auto &s : l.states)
      reach.insert(s.loc);
  bool feasible = false;
  for (const auto &[pos, neg] : *dnf) {
    bool ok = std::all_of(pos.begin(), pos.end(), [&](auto q) { return reach.count(q) && !neg.count(q); });
    ok = ok && std::any_of(reach.begin(), reach.end(), [&](auto q) { return !neg.count(q); });
    if (!ok)
      continue;
    feasible = true;
    if (!neg.empty() || pos.size() > 1)
      continue;
    res.reachable = true;
    res.method = "local";
    res.layers_built = build.layers.size();
    res.i0 = build.i0;
    res.l0 = build.l0;
    for (const auto &l : build.layers)
      for (const auto &s : l.states)
        if (pos.empty() || s.loc == *pos.begin()) {
          res.support = {s};
          res.slot = l.slot;
          return true;
        }
  }
  if (!feasible) {
    res.method = "static";
    res.layers_built = build.layers.size();
    return true;
  }
  return false;
}

} // namespace global_detail

inline GlobalResult check_global(const GuardedTimedAutomaton &a, const std::string &query,
                                 const EngineOptions &opt = {}, bool streaming = false,
                                 GlobalOptions gopt = {}, std::string *dot = nullptr) {
  GlobalResult res;
  res.query = query;
  res.streaming = streaming;
  GlobalEngine eng(a, opt, gopt, !streaming);
  Constraint phi = parse_constraint(query, eng.gta());
  if (gopt.shortcuts && global_detail::shortcut(eng, phi, res))
    return res;
  const std::size_t nloc = eng.gta().locations.size();
  std::vector<bool> occ(nloc);
  auto sat = [&](std::uint32_t id) {
    std::fill(occ.begin(), occ.end(), false);
    for (auto s : eng.support(id))
      occ[eng.state(s).loc] = true;
    return eval_constraint(occ, phi);
  };

  if (!streaming) {
    auto build = build_global_layers(eng, sat);
    res.layers_built = build.layers.size();
    res.i0 = build.i0;
    res.l0 = build.l0;
    if (dot)
      *dot = to_dot(eng, apply_global_loopback(eng, build));
    if (!build.hit)
      return res;
    res.reachable = true;
    auto d = apply_global_loopback(eng, build);
    res.support = eng.key(*build.hit);
    res.slot = build.layers.back().slot;
    const std::size_t n = d.size();
    std::size_t target = d.offset.back() + *d.layers.back().index_of(*build.hit);
    std::vector<std::vector<std::size_t>> in(n);
    for (std::size_t e = 0; e < d.edges.size(); ++e)
      in[d.edges[e].target].push_back(e);
    // backward BFS gives the shortest path from the initial support
    std::vector<std::optional<std::size_t>> via(n);
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{target};
    seen[target] = true;
    while (!queue.empty() && !seen[d.initial]) {
      std::size_t v = queue.front();
      queue.pop_front();
      for (std::size_t e : in[v])
        if (!seen[d.edges[e].source]) {
          seen[d.edges[e].source] = true;
          via[d.edges[e].source] = e;
          queue.push_back(d.edges[e].source);
        }
    }
    for (std::size_t v = d.initial; v != target && via[v]; v = d.edges[*via[v]].target) {
      const auto &edge = d.edges[*via[v]];
      WitnessStep w;
      w.kind = edge.kind;
      if (edge.transition) {
        w.internal_label = eng.gta().transitions[*edge.transition].label;
        w.label = eng.local().labels().user(w.internal_label);
      }
      w.from = eng.describe(d.support(edge.source));
      w.to = eng.describe(d.support(edge.target));
      w.slot_from = d.slot(edge.source).to_string();
      w.slot_to = d.slot(edge.target).to_string();
      res.witness.push_back(std::move(w));
    }
    return res;
  }

  std::map<Fingerprint, std::size_t> seen;
  Slot slot = Slot::point(0);
  std::vector<std::uint32_t> seed{eng.initial()};
  std::size_t held = 0;
  for (std::size_t l = 0;; ++l) {
    eng.local().check_cap(l + 1);
    std::optional<GlobalLayer> current;
    std::optional<std::uint32_t> hit;
    current.emplace(eng.close(slot, seed, sat, &hit));
    ++held;
    res.stats.peak_layers_held = std::max(res.stats.peak_layers_held, held);
    res.layers_built = l + 1;
    if (hit) {
      res.reachable = true;
      res.support = eng.key(*hit);
      res.slot = slot;
      return res;
    }
    if (slot.kind == Slot::Kind::point) {
      auto [it, fresh] = seen.emplace(eng.fingerprint(*current), l);
      res.stats.fingerprints = seen.size();
      if (!fresh) {
        res.i0 = it->second;
        res.l0 = l;
        return res;
      }
    }
    if (slot.kind == Slot::Kind::unbounded)
      return res;
    std::vector<std::vector<LocalState>> carry;
    for (auto id : GlobalEngine::next_seed(*current))
      carry.push_back(eng.members(id));
    current.reset();
    --held;
    eng.reset_tables();
    seed.clear();
    for (const auto &members : carry) {
      Support s;
      for (const auto &m : members)
        s.push_back(eng.state_id(m));
      seed.push_back(eng.intern(std::move(s)));
    }
    slot = eng.local().next(slot);
  }
}

} // namespace dtnmc
