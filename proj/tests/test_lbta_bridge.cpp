#include <catch_amalgamated.hpp>

#include "dtnmc/dtn_local.hpp"
#include "dtnmc/lbta_bridge.hpp"
#include "dtnmc/oracle.hpp"
#include "support/generators.hpp"

using namespace dtnmc;
using namespace testsupport;

namespace {

const BroadcastTransition *find(const LossyBroadcastAutomaton &b, const std::string &label, SyncKind kind) {
  for (const auto &t : b.transitions)
    if (t.label == label && t.sync.kind == kind)
      return &t;
  return nullptr;
}

std::set<std::string> engine_labels(const GuardedTimedAutomaton &a) {
  std::set<std::string> out;
  for (const auto &l : user_labels(a))
    if (check_label_reachable(a, l).reachable)
      out.insert(l);
  return out;
}

} // namespace

TEST_CASE("fig1 guards become receptions with one silent sender loop") {
  auto a = load_gta("fig1.gta");
  auto b = gta_to_lbta(a).automaton;
  CHECK(b.broadcasts.size() == a.locations.size());
  auto s4 = find(b, "s4", SyncKind::receive);
  REQUIRE(s4);
  CHECK(s4->sync.channel == "post");
  auto serr = find(b, "serr", SyncKind::receive);
  REQUIRE(serr);
  CHECK(serr->sync.channel == "done");
  auto s0 = find(b, "s0", SyncKind::send);
  REQUIRE(s0);
  CHECK(s0->sync.channel == "init");
  std::size_t loops = 0;
  for (const auto &t : b.transitions)
    if (t.label.empty() && t.sync.kind == SyncKind::send) {
      ++loops;
      CHECK(t.source == t.target);
      CHECK(t.guard.trivial());
      CHECK(t.resets.empty());
    }
  CHECK(loops == 2);
  CHECK(b.transitions.size() == a.transitions.size() + 2);
}

TEST_CASE("an automaton without transitions translates to one without transitions") {
  auto a = parse_gta("gta E\nclocks c\nlocation q initial\n");
  auto b = gta_to_lbta(a).automaton;
  CHECK(b.transitions.empty());
  auto back = lbta_to_gta(b).automaton;
  CHECK(back.transitions.empty());
  CHECK(back.locations.size() == 1);
}

TEST_CASE("one sender and two receivers share one auxiliary location") {
  auto b = parse_lbta("lbta B\nclocks c\nbroadcasts x\nlocation a initial\nlocation b\nlocation d\n"
                      "trans a -> b label: s guard: c >= 1 reset: c sync: x!!\n"
                      "trans a -> d label: r1 sync: x??\n"
                      "trans b -> d label: r2 guard: c < 1 sync: x??\n");
  auto tr = lbta_to_gta(b);
  const auto &a = tr.automaton;
  CHECK(a.clocks.back() == "c_snd");
  REQUIRE(a.locations.size() == 4);
  const auto &aux = a.locations[3];
  CHECK(aux.invariant.conjuncts == std::vector<Atom>{Atom{1, std::nullopt, Op::le, 0}});
  std::size_t receivers = 0;
  for (const auto &t : a.transitions) {
    if (t.label == "s") {
      CHECK(t.target == 3);
      CHECK(t.resets == std::vector<std::size_t>{1});
    }
    if (t.source == 3) {
      CHECK(t.label.empty());
      CHECK(t.target == *a.find_location("b"));
      CHECK(t.resets == std::vector<std::size_t>{0});
    }
    if (t.label == "r1" || t.label == "r2") {
      ++receivers;
      CHECK(t.location_guard == std::optional<std::size_t>(3));
    }
  }
  CHECK(receivers == 2);
  CHECK(tr.notes.size() == 3);
}

TEST_CASE("receivers without a sender are guarded by a location nobody enters") {
  auto b = parse_lbta("lbta B\nclocks c\nbroadcasts x\nlocation a initial\ntrans a -> a label: r sync: x??\n");
  auto a = lbta_to_gta(b).automaton;
  auto g = a.find_location("nosnd_x");
  REQUIRE(g);
  REQUIRE(a.transitions.size() == 1);
  CHECK(a.transitions[0].location_guard == g);
  CHECK_FALSE(check_label_reachable(a, "r").reachable);
}

TEST_CASE("sender whose target invariant fails after resets is dropped") {
  auto b = parse_lbta("lbta B\nclocks c\nbroadcasts x\nlocation a initial\nlocation b inv: c < 2\n"
                      "trans a -> b label: late guard: c > 2 sync: x!!\n"
                      "trans a -> b label: fine guard: c > 2 reset: c sync: x!!\n");
  auto a = lbta_to_gta(b).automaton;
  CHECK_FALSE(check_label_reachable(a, "late").reachable);
  CHECK(check_label_reachable(a, "fine").reachable);
}

TEST_CASE("annotations name the gadgets") {
  auto tr = gta_to_lbta(load_gta("fig1.gta"));
  std::string text = annotated(tr, true);
  CHECK(text.rfind("# ", 0) == 0);
  CHECK(text.find("silent loop post!!") != std::string::npos);
  CHECK(annotated(tr, false).rfind("lbta ", 0) == 0);
  CHECK(parse_lbta(annotated(tr, true)).transitions.size() == tr.automaton.transitions.size());
}

TEST_CASE("round trip keeps reachable labels on the suite") {
  for (auto name : {"fig1.gta", "fig1_guarded.gta", "fig1_guarded_noinv.gta", "fig3.gta", "fig4.gta"}) {
    auto a = load_gta(name);
    auto back = lbta_to_gta(gta_to_lbta(a).automaton).automaton;
    INFO(name);
    CHECK(engine_labels(back) == engine_labels(a));
  }
}

TEST_CASE("broadcast network agrees with its translation at small n") {
  auto b = parse_lbta(read_file(model_path("broadcast.lbta")));
  auto a = lbta_to_gta(b).automaton;
  for (std::size_t n = 1; n <= 3; ++n) {
    OracleOptions o;
    o.n = n;
    o.slot_cap = 3;
    auto direct = explore_lbta_network(b, o);
    auto translated = explore_network(a, o);
    INFO("n=" << n);
    CHECK(direct.labels == translated.labels);
  }
}

TEST_CASE("random automata keep their labels through both translations") {
  std::mt19937 rng(23);
  for (int i = 0; i < 10; ++i) {
    auto a = random_gta(rng);
    auto want = engine_labels(a);
    auto b = gta_to_lbta(a).automaton;
    std::set<std::string> lb;
    for (std::size_t n = 1; n <= 3; ++n) {
      OracleOptions o;
      o.n = n;
      o.slot_cap = 5;
      auto r = explore_lbta_network(b, o);
      lb.insert(r.labels.begin(), r.labels.end());
    }
    INFO(print_model(a));
    CHECK(lb == want);
    CHECK(engine_labels(lbta_to_gta(b).automaton) == want);
  }
}
