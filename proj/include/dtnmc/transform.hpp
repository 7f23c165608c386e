#pragma once

#include <map>

#include "model.hpp"

namespace dtnmc {

inline TimedAutomaton unguard(const GuardedTimedAutomaton &a, const std::string &global_name = "t") {
  TimedAutomaton ta;
  ta.name = a.name;
  ta.clocks = a.clocks;
  std::string t = global_name;
  while (a.find_clock(t))
    t += "_";
  ta.clocks.push_back(t);
  ta.global_clock = ta.clocks.size() - 1;
  ta.locations = a.locations;
  ta.initial = a.initial;
  for (auto tr : a.transitions) {
    tr.location_guard.reset();
    ta.transitions.push_back(std::move(tr));
  }
  return ta;
}

inline TimedAutomaton strip_guarded(const GuardedTimedAutomaton &a) {
  TimedAutomaton ta;
  ta.name = a.name;
  ta.clocks = a.clocks;
  ta.locations = a.locations;
  ta.initial = a.initial;
  for (const auto &tr : a.transitions)
    if (!tr.location_guard)
      ta.transitions.push_back(tr);
  return ta;
}

struct RelabelMap {
  // internal label -> user label, empty for silent origin
  std::map<std::string, std::string> to_user;

  bool silent(const std::string &internal) const {
    auto it = to_user.find(internal);
    return it != to_user.end() && it->second.empty();
  }
  std::string user(const std::string &internal) const {
    auto it = to_user.find(internal);
    return it == to_user.end() ? internal : it->second;
  }
  // internal labels matching a query given either as internal or as user label
  std::vector<std::string> resolve(const std::string &query) const {
    if (to_user.count(query))
      return {query};
    std::vector<std::string> out;
    for (const auto &[in, us] : to_user)
      if (!us.empty() && us == query)
        out.push_back(in);
    return out;
  }
};

template <class A> std::pair<A, RelabelMap> relabel_unique(const A &a) {
  A out = a;
  RelabelMap map;
  std::map<std::string, std::size_t> count, seen;
  for (const auto &t : a.transitions)
    ++count[t.label];
  for (auto &t : out.transitions) {
    std::string user = t.label;
    if (user.empty())
      t.label = "tau#" + std::to_string(++seen[user]);
    else if (count[user] > 1)
      t.label = user + "#" + std::to_string(++seen[user]);
    map.to_user[t.label] = user;
  }
  return {out, map};
}

} // namespace dtnmc
