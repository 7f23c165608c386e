#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "dtn_global.hpp"

namespace dtnmc {

using Exact = boost::multiprecision::cpp_rational;

inline std::string exact_text(const Exact &x) {
  auto n = boost::multiprecision::numerator(x), d = boost::multiprecision::denominator(x);
  return d == 1 ? n.str() : n.str() + "/" + d.str();
}

struct TraceStep {
  Exact delay = 0;
  Exact time = 0;
  // 1-based process index
  std::size_t process = 0;
  // user label, empty for silent steps
  std::string label;
  std::string internal_label;
};

struct OracleOptions {
  std::size_t n = 2;
  std::int64_t slot_cap = 4;
  std::size_t max_states = 1000000;
  bool symmetry = true;
  bool collect_supports = false;
  bool keep_configurations = false;
  // stop at the first step firing this label (user or internal)
  std::optional<std::string> target_label;
  std::optional<Constraint> target_constraint;
};

struct Configuration {
  std::vector<std::uint32_t> locs;
  Dbm region;

  bool operator==(const Configuration &) const = default;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration &c) const {
    std::size_t h = c.region.hash();
    for (auto l : c.locs)
      h = h * 31 + l;
    return h;
  }
};

struct OracleResult {
  std::set<std::string> labels;
  std::set<std::string> internal_labels;
  bool target_found = false;
  std::vector<TraceStep> trace;
  std::size_t states = 0;
  std::map<Slot, std::set<std::vector<LocalState>>> supports;
  std::vector<Configuration> configurations;
};

namespace oracle_detail {

struct Trans {
  std::size_t source = 0, target = 0;
  ClockConstraint guard;
  std::vector<std::size_t> resets;
  std::string internal, user;
  std::optional<std::size_t> location_guard;
  std::optional<Sync> sync;
};

struct Model {
  std::vector<std::string> clocks;
  std::vector<Location> locations;
  std::size_t initial = 0;
  std::vector<Trans> transitions;
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::int64_t> bound;
  std::int64_t diag = -1;
  bool broadcast = false;
};

template <class A> Model make_model(const A &a) {
  auto [u, map] = relabel_unique(a);
  Model m;
  m.clocks = a.clocks;
  m.locations = a.locations;
  m.initial = a.initial;
  m.bound = max_constants(a);
  m.diag = max_diagonal_constant(a);
  m.out.resize(a.locations.size());
  for (std::size_t i = 0; i < u.transitions.size(); ++i) {
    const auto &t = u.transitions[i];
    Trans x;
    x.source = t.source;
    x.target = t.target;
    x.guard = t.guard;
    x.resets = t.resets;
    x.internal = t.label;
    x.user = map.user(t.label);
    if constexpr (std::is_same_v<A, LossyBroadcastAutomaton>) {
      x.sync = t.sync;
      m.broadcast = true;
    } else {
      x.location_guard = t.location_guard;
    }
    m.transitions.push_back(std::move(x));
    m.out[t.source].push_back(i);
  }
  return m;
}

// one step of the network: the first entry moves first, the rest are receivers
using Move = std::vector<std::pair<std::size_t, std::size_t>>;

struct Node {
  Configuration conf;
  std::optional<std::size_t> parent;
  bool delay = false;
  Move move;
  // canonical process k was process perm[k] before canonicalization
  std::vector<std::size_t> perm;
};

inline bool contains_exact(const Dbm &z, const std::vector<Exact> &v) {
  auto val = [&](std::size_t i) { return i == 0 ? Exact(0) : v[i - 1]; };
  for (std::size_t i = 0; i < z.dim(); ++i)
    for (std::size_t j = 0; j < z.dim(); ++j) {
      Bound b = z.at(i, j);
      if (b.is_inf())
        continue;
      Exact lhs = val(i) - val(j), rhs = b.value();
      if (b.strict() ? !(lhs < rhs) : !(lhs <= rhs))
        return false;
    }
  return true;
}

class Explorer {
public:
  Explorer(Model m, const OracleOptions &opt) : m_(std::move(m)), opt_(opt) {
    const std::size_t n = opt_.n, k = m_.clocks.size();
    t_ = n * k;
    ctx_.bound.resize(t_ + 1);
    ctx_.group.resize(t_ + 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c) {
        ctx_.bound[i * k + c] = m_.bound[c];
        ctx_.group[i * k + c] = static_cast<int>(i);
      }
    ctx_.bound[t_] = opt_.slot_cap;
    ctx_.group[t_] = -1;
    ctx_.diag_bound = m_.diag;
    ctx_.global = t_;

    local_ctx_.bound = m_.bound;
    local_ctx_.bound.push_back(1);
    local_ctx_.group.assign(k + 1, 0);
    local_ctx_.group[k] = -1;
    local_ctx_.diag_bound = m_.diag;
    local_ctx_.global = k;
  }

  OracleResult run() {
    OracleResult res;
    Configuration init{std::vector<std::uint32_t>(opt_.n, static_cast<std::uint32_t>(m_.initial)),
                       Dbm::zero(t_ + 2)};
    if (!push(init, std::nullopt, false, {}, res))
      return finish(res);
    for (std::size_t head = 0; head < nodes_.size(); ++head) {
      const Configuration cur = nodes_[head].conf;
      Valuation v = sample(cur.region);
      if (auto w = time_successor_point(v, ctx_); w && ctx_.bounded(*w, t_)) {
        bool ok = true;
        for (std::size_t i = 0; i < opt_.n && ok; ++i)
          ok = satisfies(*w, m_.locations[cur.locs[i]].invariant, block(i));
        if (ok) {
          Configuration next{cur.locs, region_of(*w, ctx_)};
          if (!push(next, head, true, {}, res))
            return finish(res);
        }
      }
      for (auto &[move, next] : discrete(cur, v)) {
        bool hit = false;
        for (auto &[p, tr] : move) {
          const auto &t = m_.transitions[tr];
          if (!t.user.empty())
            res.labels.insert(t.user);
          res.internal_labels.insert(t.internal);
          if (opt_.target_label && (t.internal == *opt_.target_label || t.user == *opt_.target_label))
            hit = true;
        }
        if (!push(next, head, false, move, res, hit))
          return finish(res);
      }
    }
    return finish(res);
  }

private:
  std::size_t block(std::size_t i) const { return i * m_.clocks.size(); }

  std::vector<std::pair<Move, Configuration>> discrete(const Configuration &cur, const Valuation &v) const {
    std::vector<std::pair<Move, Configuration>> out;
    const std::size_t n = opt_.n;
    auto enabled = [&](std::size_t p, std::size_t tr) { return satisfies(v, m_.transitions[tr].guard, block(p)); };
    auto apply = [&](const Move &move) -> std::optional<Configuration> {
      Valuation w = v;
      Configuration next{cur.locs, {}};
      for (auto &[p, tr] : move) {
        const auto &t = m_.transitions[tr];
        for (auto c : t.resets)
          w.num[block(p) + c] = 0;
        next.locs[p] = static_cast<std::uint32_t>(t.target);
      }
      for (auto &[p, tr] : move)
        if (!satisfies(w, m_.locations[next.locs[p]].invariant, block(p)))
          return std::nullopt;
      next.region = region_of(w, ctx_);
      return next;
    };
    for (std::size_t p = 0; p < n; ++p) {
      if (p > 0 && opt_.symmetry && same_block(cur, v, p - 1, p))
        continue;
      for (auto tr : m_.out[cur.locs[p]]) {
        const auto &t = m_.transitions[tr];
        if (!enabled(p, tr))
          continue;
        if (!m_.broadcast) {
          if (t.location_guard) {
            bool witness = false;
            for (std::size_t j = 0; j < n && !witness; ++j)
              witness = j != p && cur.locs[j] == *t.location_guard;
            if (!witness)
              continue;
          }
          if (auto next = apply({{p, tr}}))
            out.emplace_back(Move{{p, tr}}, std::move(*next));
          continue;
        }
        if (t.sync->kind != SyncKind::send)
          continue;
        // each other process either ignores the broadcast or takes one enabled receive
        std::vector<std::vector<std::optional<std::size_t>>> options;
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == p)
            continue;
          others.push_back(j);
          std::vector<std::optional<std::size_t>> o{std::nullopt};
          for (auto r : m_.out[cur.locs[j]]) {
            const auto &rt = m_.transitions[r];
            if (rt.sync->kind == SyncKind::receive && rt.sync->channel == t.sync->channel && enabled(j, r))
              o.push_back(r);
          }
          options.push_back(std::move(o));
        }
        std::vector<std::size_t> pick(others.size(), 0);
        while (true) {
          Move move{{p, tr}};
          for (std::size_t k = 0; k < others.size(); ++k)
            if (options[k][pick[k]])
              move.emplace_back(others[k], *options[k][pick[k]]);
          if (auto next = apply(move))
            out.emplace_back(move, std::move(*next));
          std::size_t k = 0;
          while (k < pick.size() && ++pick[k] == options[k].size())
            pick[k++] = 0;
          if (k == pick.size())
            break;
        }
      }
    }
    return out;
  }

  // processes p and q are interchangeable in this configuration
  bool same_block(const Configuration &c, const Valuation &v, std::size_t p, std::size_t q) const {
    if (c.locs[p] != c.locs[q])
      return false;
    for (std::size_t x = 0; x < m_.clocks.size(); ++x)
      if (v.num[block(p) + x] != v.num[block(q) + x])
        return false;
    return true;
  }

  std::vector<std::size_t> clock_perm(const std::vector<std::size_t> &perm) const {
    const std::size_t k = m_.clocks.size();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t c = 0; c < k; ++c)
        out.push_back(perm[i] * k + c + 1);
    out.push_back(t_ + 1);
    return out;
  }

  std::pair<Configuration, std::vector<std::size_t>> canonical(const Configuration &c) const {
    std::vector<std::size_t> perm(opt_.n);
    std::iota(perm.begin(), perm.end(), 0);
    if (!opt_.symmetry)
      return {c, perm};
    std::optional<Configuration> best;
    std::vector<std::size_t> best_perm;
    // permutations that keep locations sorted
    std::vector<std::size_t> p = perm;
    std::sort(p.begin(), p.end(), [&](auto a, auto b) {
      return c.locs[a] != c.locs[b] ? c.locs[a] < c.locs[b] : a < b;
    });
    do {
      Configuration x;
      for (auto i : p)
        x.locs.push_back(c.locs[i]);
      x.region = c.region.permuted(clock_perm(p));
      if (!best || x.region < best->region) {
        best = std::move(x);
        best_perm = p;
      }
    } while (next_tied(p, c));
    return {*best, best_perm};
  }

  // next permutation that only reorders processes sharing a location
  bool next_tied(std::vector<std::size_t> &p, const Configuration &c) const {
    std::size_t i = p.size();
    // groups are contiguous; advance the last group that has a next permutation
    while (i > 0) {
      std::size_t end = i, begin = i - 1;
      while (begin > 0 && c.locs[p[begin - 1]] == c.locs[p[end - 1]])
        --begin;
      if (std::next_permutation(p.begin() + static_cast<std::ptrdiff_t>(begin),
                                p.begin() + static_cast<std::ptrdiff_t>(end)))
        return true;
      i = begin;
    }
    return false;
  }

  bool push(const Configuration &raw, std::optional<std::size_t> parent, bool delay, Move move,
            OracleResult &res, bool hit = false) {
    auto [conf, perm] = canonical(raw);
    auto [it, fresh] = ids_.emplace(conf, nodes_.size());
    if (fresh) {
      if (nodes_.size() >= opt_.max_states)
        throw BudgetExceeded("oracle exceeded " + std::to_string(opt_.max_states) + " configurations");
      nodes_.push_back({conf, parent, delay, std::move(move), perm});
      record(conf, res);
      if (opt_.target_constraint) {
        std::vector<bool> occ(m_.locations.size(), false);
        for (auto l : conf.locs)
          occ[l] = true;
        if (eval_constraint(occ, *opt_.target_constraint))
          hit = true;
      }
    } else if (hit) {
      // reached again through a firing edge: keep this edge for the trace
      nodes_.push_back({conf, parent, delay, std::move(move), perm});
      found_ = nodes_.size() - 1;
      res.target_found = true;
      return false;
    }
    if (hit) {
      found_ = it->second;
      res.target_found = true;
      return false;
    }
    return true;
  }

  void record(const Configuration &c, OracleResult &res) const {
    if (opt_.keep_configurations)
      res.configurations.push_back(c);
    if (!opt_.collect_supports)
      return;
    Slot slot = slot_of(c.region, t_);
    Valuation v = sample(c.region);
    std::int64_t m = floor_div(v.num[t_], v.den);
    std::vector<LocalState> supp;
    const std::size_t k = m_.clocks.size();
    for (std::size_t i = 0; i < opt_.n; ++i) {
      Valuation w(k + 1);
      w.den = v.den;
      for (std::size_t x = 0; x < k; ++x)
        w.num[x] = v.num[block(i) + x];
      w.num[k] = v.num[t_] - m * v.den;
      supp.push_back({c.locs[i], region_of(w, local_ctx_)});
    }
    std::sort(supp.begin(), supp.end());
    supp.erase(std::unique(supp.begin(), supp.end()), supp.end());
    res.supports[slot].insert(std::move(supp));
  }

  OracleResult &finish(OracleResult &res) {
    res.states = ids_.size();
    if (found_)
      res.trace = replay(*found_);
    return res;
  }

  std::vector<TraceStep> replay(std::size_t target) const {
    std::vector<std::size_t> path;
    for (std::optional<std::size_t> x = target; x; x = nodes_[*x].parent)
      path.push_back(*x);
    std::reverse(path.begin(), path.end());
    const std::size_t k = m_.clocks.size();
    std::vector<Exact> v(t_ + 1, 0);
    std::vector<std::size_t> orig(opt_.n);
    std::iota(orig.begin(), orig.end(), 0);
    std::vector<TraceStep> out;
    Exact now = 0, pending = 0;
    auto permute = [&](const std::vector<std::size_t> &perm) {
      std::vector<Exact> w(v.size());
      std::vector<std::size_t> o(opt_.n);
      for (std::size_t i = 0; i < opt_.n; ++i) {
        for (std::size_t c = 0; c < k; ++c)
          w[block(i) + c] = v[block(perm[i]) + c];
        o[i] = orig[perm[i]];
      }
      w[t_] = v[t_];
      v = std::move(w);
      orig = std::move(o);
    };
    for (std::size_t s = 1; s < path.size(); ++s) {
      const Node &node = nodes_[path[s]];
      if (node.delay) {
        permute(node.perm);
        Exact lo = 0, hi = -1;
        bool lo_strict = true, hi_inf = true, hi_strict = false;
        const Dbm &r = node.conf.region;
        for (std::size_t i = 1; i < r.dim(); ++i) {
          Bound up = r.at(i, 0), down = r.at(0, i);
          if (!up.is_inf()) {
            Exact u = Exact(up.value()) - v[i - 1];
            if (hi_inf || u < hi || (u == hi && up.strict())) {
              hi = u;
              hi_strict = up.strict();
              hi_inf = false;
            }
          }
          Exact l = Exact(-down.value()) - v[i - 1];
          if (l > lo || (l == lo && down.strict())) {
            lo = l;
            lo_strict = down.strict();
          }
        }
        Exact d;
        if (hi_inf)
          d = lo + 1;
        else if (lo == hi && !lo_strict && !hi_strict)
          d = lo;
        else
          d = (lo + hi) / 2;
        for (auto &x : v)
          x += d;
        now += d;
        pending += d;
      } else {
        for (auto &[p, tr] : node.move)
          for (auto c : m_.transitions[tr].resets)
            v[block(p) + c] = 0;
        auto movers = node.move;
        std::sort(movers.begin() + 1, movers.end(),
                  [&](auto &a, auto &b) { return orig[a.first] < orig[b.first]; });
        for (auto &[p, tr] : movers) {
          const auto &t = m_.transitions[tr];
          out.push_back({pending, now, orig[p] + 1, t.user, t.internal});
          pending = 0;
        }
        permute(node.perm);
      }
      if (!contains_exact(node.conf.region, v))
        throw std::logic_error("oracle replay left the region at step " + std::to_string(s));
    }
    return out;
  }

  Model m_;
  OracleOptions opt_;
  std::size_t t_ = 0;
  RegionContext ctx_, local_ctx_;
  std::vector<Node> nodes_;
  std::unordered_map<Configuration, std::size_t, ConfigurationHash> ids_;
  std::optional<std::size_t> found_;
};

} // namespace oracle_detail

inline OracleResult explore_network(const GuardedTimedAutomaton &a, const OracleOptions &opt) {
  if (opt.n < 1)
    throw QueryError("oracle needs n >= 1");
  return oracle_detail::Explorer(oracle_detail::make_model(a), opt).run();
}

inline OracleResult explore_lbta_network(const LossyBroadcastAutomaton &b, const OracleOptions &opt) {
  if (opt.n < 1)
    throw QueryError("oracle needs n >= 1");
  return oracle_detail::Explorer(oracle_detail::make_model(b), opt).run();
}

namespace oracle_detail {

inline bool holds(const ClockConstraint &g, const std::vector<Exact> &v, std::size_t offset) {
  for (const auto &a : g.conjuncts) {
    Exact x = v[offset + a.clock] - (a.other ? v[offset + *a.other] : Exact(0));
    Exact k = a.constant;
    bool ok = false;
    switch (a.op) {
    case Op::lt: ok = x < k; break;
    case Op::le: ok = x <= k; break;
    case Op::eq: ok = x == k; break;
    case Op::ge: ok = x >= k; break;
    case Op::gt: ok = x > k; break;
    }
    if (!ok)
      return false;
  }
  return true;
}

inline bool replay_steps(const Model &m, std::size_t n, const std::vector<TraceStep> &trace, std::size_t at,
                         std::vector<std::size_t> locs, std::vector<Exact> v, std::string &why) {
  if (at == trace.size())
    return true;
  const auto &s = trace[at];
  const std::size_t k = m.clocks.size();
  if (s.delay < 0 || s.process < 1 || s.process > n) {
    why = "step " + std::to_string(at + 1) + " is malformed";
    return false;
  }
  for (auto &x : v)
    x += s.delay;
  for (std::size_t i = 0; i < n; ++i)
    if (!holds(m.locations[locs[i]].invariant, v, i * k)) {
      why = "invariant of process " + std::to_string(i + 1) + " broken before step " + std::to_string(at + 1);
      return false;
    }
  const std::size_t p = s.process - 1;
  const std::string &want = s.internal_label.empty() ? s.label : s.internal_label;
  bool tried = false;
  for (auto tr : m.out[locs[p]]) {
    const auto &t = m.transitions[tr];
    if (t.internal != want && t.user != want)
      continue;
    if (!holds(t.guard, v, p * k))
      continue;
    if (t.location_guard) {
      bool witness = false;
      for (std::size_t j = 0; j < n && !witness; ++j)
        witness = j != p && locs[j] == *t.location_guard;
      if (!witness)
        continue;
    }
    auto w = v;
    for (auto c : t.resets)
      w[p * k + c] = 0;
    if (!holds(m.locations[t.target].invariant, w, p * k))
      continue;
    tried = true;
    auto next = locs;
    next[p] = t.target;
    if (replay_steps(m, n, trace, at + 1, std::move(next), std::move(w), why))
      return true;
  }
  if (!tried)
    why = "step " + std::to_string(at + 1) + " (" + want + " by process " + std::to_string(s.process) +
          ") is not enabled";
  return false;
}

} // namespace oracle_detail

// does the trace describe a computation of the n-process network; silent steps must be listed
inline bool check_trace(const GuardedTimedAutomaton &a, std::size_t n, const std::vector<TraceStep> &trace,
                        std::string *why = nullptr) {
  auto m = oracle_detail::make_model(a);
  std::string reason;
  bool ok = oracle_detail::replay_steps(m, n, trace, 0, std::vector<std::size_t>(n, m.initial),
                                        std::vector<Exact>(n * m.clocks.size(), 0), reason);
  if (why)
    *why = reason;
  return ok;
}

// keep the steps of the given processes, folding removed delays into the next kept step
inline std::vector<TraceStep> project_trace(const std::vector<TraceStep> &trace,
                                            const std::set<std::size_t> &processes) {
  std::vector<TraceStep> out;
  Exact pending = 0;
  for (const auto &s : trace) {
    pending += s.delay;
    if (!processes.count(s.process) || s.label.empty())
      continue;
    TraceStep k = s;
    k.delay = pending;
    pending = 0;
    out.push_back(std::move(k));
  }
  return out;
}

} // namespace dtnmc
