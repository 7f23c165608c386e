#pragma once

#include <array>
#include <atomic>
#include <thread>
#include <unordered_set>

#include <sodium.h>

#include "validation.hpp"

namespace dtnmc {

class QueryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  // safety cap on the number of layers; unset means the theoretical bound
  std::optional<BigInt> max_layers;
  std::size_t max_states = 1000000;
  unsigned threads = 1;
};

// number of region states of A, bounded from above, used for the layer and slot caps
inline BigInt region_state_bound(const GuardedTimedAutomaton &a) {
  auto m = max_constants(a);
  std::size_t n = a.clocks.size();
  BigInt r = a.locations.size();
  for (std::size_t i = 1; i <= n; ++i)
    r *= 2 * i;
  for (auto x : m)
    r *= 2 * x + 2;
  if (auto d = max_diagonal_constant(a); d >= 0)
    for (std::size_t i = 0; i < n * (n - 1) / 2; ++i)
      r *= 4 * d + 3;
  return r;
}

// 2^(N_A+1), with the exponent clamped so the number stays representable
inline BigInt theoretical_cap(const GuardedTimedAutomaton &a) {
  BigInt n = region_state_bound(a);
  unsigned e = n > 4096 ? 4097u : static_cast<unsigned>(n) + 1;
  return BigInt(1) << e;
}

using Fingerprint = std::array<unsigned char, 16>;

inline Fingerprint fingerprint(const std::vector<LocalState> &states) {
  static const bool ready = sodium_init() >= 0;
  (void)ready;
  std::string bytes;
  for (const auto &s : states) {
    bytes.append(reinterpret_cast<const char *>(&s.loc), sizeof s.loc);
    s.region.append_bytes(bytes);
  }
  Fingerprint f{};
  crypto_generichash(f.data(), f.size(), reinterpret_cast<const unsigned char *>(bytes.data()),
                     bytes.size(), nullptr, 0);
  return f;
}

struct LayerEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  // nullopt for delay (silent) edges
  std::optional<std::size_t> transition;
};

struct Layer {
  Slot slot;
  std::vector<LocalState> states;
  std::vector<LayerEdge> edges;
  // silent edges into the next slot
  std::vector<std::pair<std::size_t, LocalState>> boundary;

  std::optional<std::size_t> index_of(const LocalState &s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || !(*it == s))
      return std::nullopt;
    return static_cast<std::size_t>(it - states.begin());
  }
};

inline std::optional<BigInt> approx_equal(const Layer &a, const Layer &b) {
  if (a.slot.kind != b.slot.kind || a.states != b.states)
    return std::nullopt;
  return BigInt(b.slot.m - a.slot.m);
}

// the gTA with unique labels, its region graph over C and t, and the layer rules
class LayerEngine {
public:
  LayerEngine(const GuardedTimedAutomaton &a, EngineOptions opt, bool memoize = true)
      : relabeled_(relabel_unique(a)), gta_(relabeled_.first),
        graph_(unguard(gta_), memoize), opt_(std::move(opt)), tmax_(theoretical_cap(a)) {
    if (!opt_.max_layers)
      opt_.max_layers = 2 * tmax_ + 2;
  }
  LayerEngine(const LayerEngine &) = delete;
  LayerEngine &operator=(const LayerEngine &) = delete;

  const GuardedTimedAutomaton &gta() const { return gta_; }
  const RelabelMap &labels() const { return relabeled_.second; }
  const RegionGraph &graph() const { return graph_; }
  const EngineOptions &options() const { return opt_; }
  const BigInt &tmax() const { return tmax_; }
  std::size_t t_clock() const { return *graph_.global(); }

  std::vector<std::string> clock_names() const { return gta_.clocks; }

  std::optional<std::size_t> location_guard(std::size_t transition) const {
    return gta_.transitions[transition].location_guard;
  }

  void prefetch(const std::vector<LocalState> &batch) const {
    if (opt_.threads <= 1 || batch.size() < 32)
      return;
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < opt_.threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < batch.size();)
          graph_.successors(batch[i]);
      });
    for (auto &th : pool)
      th.join();
  }

  // close a seed set under same-slot delays and guard-witnessed discrete steps
  Layer close(const Slot &slot, const std::vector<LocalState> &seed) const {
    std::vector<LocalState> order;
    std::unordered_map<LocalState, std::size_t, LocalStateHash> ids;
    std::vector<bool> present(gta_.locations.size(), false);
    std::vector<std::vector<std::tuple<std::size_t, std::size_t, LocalState>>> waiting(
        gta_.locations.size());
    std::vector<LayerEdge> edges;
    std::vector<std::pair<std::size_t, LocalState>> boundary;
    std::deque<std::size_t> work;

    std::function<std::size_t(const LocalState &)> add = [&](const LocalState &s) -> std::size_t {
      auto it = ids.find(s);
      if (it != ids.end())
        return it->second;
      if (order.size() >= opt_.max_states)
        throw BudgetExceeded("layer exceeded " + std::to_string(opt_.max_states) + " region states");
      std::size_t id = order.size();
      order.push_back(s);
      ids.emplace(s, id);
      work.push_back(id);
      if (!present[s.loc]) {
        present[s.loc] = true;
        auto pending = std::move(waiting[s.loc]);
        waiting[s.loc].clear();
        for (auto &[src, tr, tgt] : pending) {
          std::size_t to = add(tgt);
          edges.push_back({src, to, tr});
        }
      }
      return id;
    };

    for (const auto &s : seed)
      add(s);
    while (!work.empty()) {
      if (opt_.threads > 1 && work.size() >= 32) {
        std::vector<LocalState> batch;
        for (auto id : work)
          batch.push_back(order[id]);
        prefetch(batch);
      }
      std::size_t id = work.front();
      work.pop_front();
      LocalState cur = order[id];
      auto succ = graph_.successors(cur);
      if (succ->delay) {
        switch (slot.kind) {
        case Slot::Kind::point:
          if (slot.m < tmax_)
            boundary.emplace_back(id, *succ->delay);
          else if (auto u = graph_.delay_into_unbounded(cur))
            boundary.emplace_back(id, *u);
          break;
        case Slot::Kind::open:
          if (succ->wraps) {
            boundary.emplace_back(id, *succ->delay);
          } else {
            std::size_t to = add(*succ->delay);
            edges.push_back({id, to, std::nullopt});
          }
          break;
        case Slot::Kind::unbounded: {
          std::size_t to = add(*succ->delay);
          edges.push_back({id, to, std::nullopt});
          break;
        }
        }
      }
      for (const auto &[tr, tgt] : succ->discrete) {
        auto g = location_guard(tr);
        if (!g || present[*g]) {
          std::size_t to = add(tgt);
          edges.push_back({id, to, tr});
        } else {
          waiting[*g].emplace_back(id, tr, tgt);
        }
      }
    }

    // renumber in sorted order
    Layer layer;
    layer.slot = slot;
    std::vector<std::size_t> perm(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
      perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](auto x, auto y) { return order[x] < order[y]; });
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      rank[perm[i]] = i;
      layer.states.push_back(order[perm[i]]);
    }
    for (auto &e : edges)
      layer.edges.push_back({rank[e.source], rank[e.target], e.transition});
    auto edge_less = [](const LayerEdge &x, const LayerEdge &y) {
      return std::tie(x.source, x.target, x.transition) < std::tie(y.source, y.target, y.transition);
    };
    std::sort(layer.edges.begin(), layer.edges.end(), edge_less);
    for (auto &[src, tgt] : boundary)
      layer.boundary.emplace_back(rank[src], tgt);
    std::sort(layer.boundary.begin(), layer.boundary.end());
    return layer;
  }

  static std::vector<LocalState> next_seed(const Layer &l) {
    std::vector<LocalState> out;
    for (const auto &[src, tgt] : l.boundary)
      out.push_back(tgt);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Slot next(const Slot &s) const { return next_slot(s, tmax_); }

  void check_cap(std::size_t layers) const {
    if (BigInt(layers) > *opt_.max_layers)
      throw BudgetExceeded("layer cap " + opt_.max_layers->str() + " exceeded");
  }

  std::string describe(const LocalState &s) const {
    Dbm c = eliminate_clock(s.region, t_clock());
    return gta_.locations[s.loc].name + ", " + c.to_string(gta_.clocks);
  }

private:
  std::pair<GuardedTimedAutomaton, RelabelMap> relabeled_;
  const GuardedTimedAutomaton &gta_;
  RegionGraph graph_;
  EngineOptions opt_;
  BigInt tmax_;
};

struct LayerBuild {
  // W_0 .. W_l0
  std::vector<Layer> layers;
  std::optional<std::size_t> i0, l0;
  LocalState initial;
};

inline LayerBuild build_layers(const LayerEngine &eng) {
  LayerBuild out;
  std::map<std::vector<LocalState>, std::size_t> seen;
  Slot slot = Slot::point(0);
  out.initial = eng.graph().initial();
  std::vector<LocalState> seed{out.initial};
  while (true) {
    eng.check_cap(out.layers.size() + 1);
    out.layers.push_back(eng.close(slot, seed));
    const Layer &w = out.layers.back();
    std::size_t l = out.layers.size() - 1;
    if (slot.kind == Slot::Kind::point) {
      auto [it, fresh] = seen.emplace(w.states, l);
      if (!fresh) {
        out.i0 = it->second;
        out.l0 = l;
        return out;
      }
    }
    if (slot.kind == Slot::Kind::unbounded)
      return out;
    seed = LayerEngine::next_seed(w);
    slot = eng.next(slot);
  }
}

struct DraEdge {
  enum class Kind { delay, discrete, boundary, loopback };
  std::size_t source = 0;
  std::size_t target = 0;
  Kind kind = Kind::delay;
  std::optional<std::size_t> transition;
};

struct DtnRegionAutomaton {
  std::vector<Layer> layers;
  std::vector<std::size_t> offset;
  std::vector<DraEdge> edges;
  std::optional<std::size_t> i0, l0;
  std::size_t initial = 0;

  std::size_t size() const { return offset.empty() ? 0 : offset.back() + layers.back().states.size(); }
  std::pair<std::size_t, std::size_t> locate(std::size_t id) const {
    std::size_t l = static_cast<std::size_t>(std::upper_bound(offset.begin(), offset.end(), id) -
                                             offset.begin()) - 1;
    return {l, id - offset[l]};
  }
  const LocalState &state(std::size_t id) const {
    auto [l, k] = locate(id);
    return layers[l].states[k];
  }
  const Slot &slot(std::size_t id) const { return layers[locate(id).first].slot; }
};

inline DtnRegionAutomaton apply_loopback(const LayerBuild &b) {
  DtnRegionAutomaton d;
  d.i0 = b.i0;
  d.l0 = b.l0;
  std::size_t count = b.l0 ? *b.l0 : b.layers.size();
  d.layers.assign(b.layers.begin(), b.layers.begin() + static_cast<std::ptrdiff_t>(count));
  std::size_t off = 0;
  for (const auto &l : d.layers) {
    d.offset.push_back(off);
    off += l.states.size();
  }
  d.initial = *d.layers[0].index_of(b.initial);
  for (std::size_t l = 0; l < count; ++l) {
    const Layer &w = d.layers[l];
    for (const auto &e : w.edges)
      d.edges.push_back({d.offset[l] + e.source, d.offset[l] + e.target,
                         e.transition ? DraEdge::Kind::discrete : DraEdge::Kind::delay, e.transition});
    if (l + 1 < count) {
      for (const auto &[src, tgt] : w.boundary)
        d.edges.push_back({d.offset[l] + src, d.offset[l + 1] + *d.layers[l + 1].index_of(tgt),
                           DraEdge::Kind::boundary, std::nullopt});
    } else if (b.i0) {
      const Layer &back = d.layers[*b.i0];
      for (const auto &[src, tgt] : w.boundary)
        d.edges.push_back({d.offset[l] + src, d.offset[*b.i0] + *back.index_of(tgt),
                           DraEdge::Kind::loopback, std::nullopt});
    }
  }
  return d;
}

struct WitnessStep {
  // empty for silent steps
  std::string label;
  std::string internal_label;
  DraEdge::Kind kind = DraEdge::Kind::delay;
  std::string from, to;
  std::string slot_from, slot_to;
};

struct StreamingStats {
  std::size_t peak_layers_held = 0;
  std::size_t fingerprints = 0;
};

struct LocalResult {
  std::string query;
  bool streaming = false;
  bool reachable = false;
  std::size_t layers_built = 0;
  std::optional<std::size_t> i0, l0;
  std::vector<WitnessStep> witness;
  StreamingStats stats;
};

inline std::vector<std::string> resolve_label(const LayerEngine &eng, const std::string &label) {
  auto internal = eng.labels().resolve(label);
  if (internal.empty())
    throw QueryError("unknown label '" + label + "'");
  return internal;
}

inline std::vector<WitnessStep> dra_witness(const LayerEngine &eng, const DtnRegionAutomaton &d,
                                            const std::set<std::size_t> &transitions) {
  const std::size_t n = d.size();
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t e = 0; e < d.edges.size(); ++e)
    out[d.edges[e].source].push_back(e);
  std::vector<std::optional<std::size_t>> via(n);
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{d.initial};
  seen[d.initial] = true;
  std::optional<std::size_t> hit;
  while (!queue.empty() && !hit) {
    std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t e : out[v]) {
      const auto &edge = d.edges[e];
      if (edge.transition && transitions.count(*edge.transition)) {
        hit = e;
        break;
      }
      if (!seen[edge.target]) {
        seen[edge.target] = true;
        via[edge.target] = e;
        queue.push_back(edge.target);
      }
    }
  }
  std::vector<WitnessStep> path;
  if (!hit)
    return path;
  std::vector<std::size_t> es{*hit};
  for (std::size_t v = d.edges[*hit].source; via[v]; v = d.edges[*via[v]].source)
    es.push_back(*via[v]);
  std::reverse(es.begin(), es.end());
  for (std::size_t e : es) {
    const auto &edge = d.edges[e];
    WitnessStep w;
    w.kind = edge.kind;
    if (edge.transition) {
      w.internal_label = eng.gta().transitions[*edge.transition].label;
      w.label = eng.labels().user(w.internal_label);
    }
    w.from = eng.describe(d.state(edge.source));
    w.to = eng.describe(d.state(edge.target));
    w.slot_from = d.slot(edge.source).to_string();
    w.slot_to = d.slot(edge.target).to_string();
    path.push_back(std::move(w));
  }
  return path;
}

inline std::set<std::size_t> transitions_with_labels(const LayerEngine &eng,
                                                     const std::vector<std::string> &internal) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < eng.gta().transitions.size(); ++i)
    if (std::find(internal.begin(), internal.end(), eng.gta().transitions[i].label) != internal.end())
      out.insert(i);
  return out;
}

inline LocalResult check_label_reachable(const GuardedTimedAutomaton &a, const std::string &label,
                                         const EngineOptions &opt = {}, bool streaming = false) {
  LocalResult res;
  res.query = label;
  res.streaming = streaming;
  LayerEngine eng(a, opt, !streaming);
  auto targets = transitions_with_labels(eng, resolve_label(eng, label));
  if (!streaming) {
    auto build = build_layers(eng);
    res.layers_built = build.layers.size();
    res.i0 = build.i0;
    res.l0 = build.l0;
    auto dra = apply_loopback(build);
    res.witness = dra_witness(eng, dra, targets);
    res.reachable = !res.witness.empty();
    return res;
  }
  std::map<Fingerprint, std::size_t> seen;
  Slot slot = Slot::point(0);
  std::vector<LocalState> seed{eng.graph().initial()};
  std::size_t held = 0;
  for (std::size_t l = 0;; ++l) {
    eng.check_cap(l + 1);
    std::optional<Layer> current;
    current.emplace(eng.close(slot, seed));
    ++held;
    res.stats.peak_layers_held = std::max(res.stats.peak_layers_held, held);
    res.layers_built = l + 1;
    for (const auto &e : current->edges)
      if (e.transition && targets.count(*e.transition)) {
        res.reachable = true;
        return res;
      }
    if (slot.kind == Slot::Kind::point) {
      auto [it, fresh] = seen.emplace(fingerprint(current->states), l);
      res.stats.fingerprints = seen.size();
      if (!fresh) {
        res.i0 = it->second;
        res.l0 = l;
        return res;
      }
    }
    if (slot.kind == Slot::Kind::unbounded)
      return res;
    seed = LayerEngine::next_seed(*current);
    current.reset();
    --held;
    slot = eng.next(slot);
  }
}

// timed automaton over C whose locations are the DRA states
inline TimedAutomaton summary_automaton(const LayerEngine &eng, const DtnRegionAutomaton &d,
                                        bool user_labels = true) {
  TimedAutomaton s;
  s.name = eng.gta().name + "Summary";
  s.clocks = eng.gta().clocks;
  s.initial = d.initial;
  const std::size_t t = eng.t_clock();
  for (std::size_t i = 0; i < d.size(); ++i)
    s.locations.push_back({"s" + std::to_string(i), {}});
  for (const auto &e : d.edges) {
    Transition tr;
    tr.source = e.source;
    tr.target = e.target;
    if (!e.transition) {
      tr.guard = to_constraint(eliminate_clock(d.state(e.target).region, t));
    } else {
      tr.guard = to_constraint(eliminate_clock(d.state(e.source).region, t));
      const Dbm &r = d.state(e.target).region;
      for (std::size_t c = 0; c < s.clocks.size(); ++c)
        if (r.at(c + 1, 0) == Bound::le(0))
          tr.resets.push_back(c);
      std::string in = eng.gta().transitions[*e.transition].label;
      tr.label = user_labels ? eng.labels().user(in) : in;
    }
    s.transitions.push_back(std::move(tr));
  }
  return s;
}

inline std::string product_label(std::size_t copy, const std::string &label) {
  return "p" + std::to_string(copy) + "_" + label;
}

// asynchronous product of k copies sharing time; copy i uses clocks c_i and labels p<i>_<label>
inline TimedAutomaton k_product(const TimedAutomaton &s, std::size_t k,
                                std::size_t max_locations = 5000000) {
  if (k < 1)
    throw QueryError("k_product needs k >= 1");
  const std::size_t n = s.locations.size(), nc = s.clocks.size();
  BigInt total = 1;
  for (std::size_t i = 0; i < k; ++i)
    total *= n;
  if (total > max_locations)
    throw BudgetExceeded("product has " + total.str() + " locations");
  const std::size_t size = static_cast<std::size_t>(total);
  TimedAutomaton p;
  p.name = s.name + "Product" + std::to_string(k);
  for (std::size_t i = 1; i <= k; ++i)
    for (const auto &c : s.clocks)
      p.clocks.push_back(k == 1 ? c + "_1" : c + "_" + std::to_string(i));
  std::vector<std::size_t> digits(k);
  auto encode = [&](const std::vector<std::size_t> &ds) {
    std::size_t x = 0;
    for (std::size_t i = k; i-- > 0;)
      x = x * n + ds[i];
    return x;
  };
  for (std::size_t x = 0; x < size; ++x) {
    std::size_t y = x;
    std::string name;
    ClockConstraint inv;
    for (std::size_t i = 0; i < k; ++i) {
      digits[i] = y % n;
      y /= n;
      name += (i ? "_" : "") + s.locations[digits[i]].name;
      for (auto a : s.locations[digits[i]].invariant.conjuncts) {
        a.clock += i * nc;
        if (a.other)
          *a.other += i * nc;
        inv.conjuncts.push_back(a);
      }
    }
    p.locations.push_back({name, inv});
  }
  p.initial = encode(std::vector<std::size_t>(k, s.initial));
  for (std::size_t x = 0; x < size; ++x) {
    std::size_t y = x;
    for (std::size_t i = 0; i < k; ++i) {
      digits[i] = y % n;
      y /= n;
    }
    for (std::size_t i = 0; i < k; ++i)
      for (const auto &tr : s.transitions) {
        if (tr.source != digits[i])
          continue;
        Transition c = tr;
        auto ds = digits;
        ds[i] = tr.target;
        c.source = x;
        c.target = encode(ds);
        for (auto &a : c.guard.conjuncts) {
          a.clock += i * nc;
          if (a.other)
            *a.other += i * nc;
        }
        for (auto &r : c.resets)
          r += i * nc;
        if (!c.label.empty())
          c.label = product_label(i + 1, c.label);
        p.transitions.push_back(std::move(c));
      }
  }
  return p;
}

// can all the given labels fire along one run of a timed automaton
inline bool labels_jointly_reachable(const TimedAutomaton &ta, const std::vector<std::string> &labels,
                                     std::size_t max_states = 1000000) {
  if (labels.size() > 63)
    throw QueryError("too many labels in a joint query");
  RegionGraph g(ta);
  std::vector<std::uint64_t> bit(ta.transitions.size(), 0);
  for (std::size_t i = 0; i < ta.transitions.size(); ++i)
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (ta.transitions[i].label == labels[k])
        bit[i] |= std::uint64_t{1} << k;
  const std::uint64_t all = labels.size() == 64 ? ~0ULL : (std::uint64_t{1} << labels.size()) - 1;
  if (all == 0)
    return true;
  std::set<std::pair<std::uint64_t, LocalState>> seen;
  std::deque<std::pair<std::uint64_t, LocalState>> queue;
  auto push = [&](std::uint64_t m, const LocalState &s) {
    if (seen.size() >= max_states)
      throw BudgetExceeded("product exploration exceeded " + std::to_string(max_states) + " states");
    if (seen.emplace(m, s).second)
      queue.emplace_back(m, s);
  };
  push(0, g.initial());
  while (!queue.empty()) {
    auto [m, s] = queue.front();
    queue.pop_front();
    if (m == all)
      return true;
    auto succ = g.successors(s);
    if (succ->delay)
      push(m, *succ->delay);
    for (const auto &[tr, t] : succ->discrete) {
      if ((m | bit[tr]) == all)
        return true;
      push(m | bit[tr], t);
    }
  }
  return false;
}

inline std::string to_dot(const LayerEngine &eng, const DtnRegionAutomaton &d) {
  std::string out = "digraph dra {\n  compound=true;\n  node [shape=box];\n";
  for (std::size_t l = 0; l < d.layers.size(); ++l) {
    out += "  subgraph cluster_" + std::to_string(l) + " {\n    label=\"W" + std::to_string(l) + " " +
           d.layers[l].slot.to_string() + "\";\n";
    for (std::size_t k = 0; k < d.layers[l].states.size(); ++k)
      out += "    s" + std::to_string(d.offset[l] + k) + " [label=\"" +
             dot_detail::escape(eng.describe(d.layers[l].states[k])) + "\"];\n";
    out += "  }\n";
  }
  for (const auto &e : d.edges) {
    out += "  s" + std::to_string(e.source) + " -> s" + std::to_string(e.target);
    if (e.transition)
      out += " [label=\"" + dot_detail::escape(eng.labels().user(eng.gta().transitions[*e.transition].label)) +
             "\"]";
    else if (e.kind == DraEdge::Kind::loopback)
      out += " [style=dashed, color=blue]";
    else
      out += " [style=dashed]";
    out += ";\n";
  }
  return out + "}\n";
}

} // namespace dtnmc
