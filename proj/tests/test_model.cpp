#include <catch_amalgamated.hpp>

#include "dtnmc/transform.hpp"
#include "support/generators.hpp"

using namespace dtnmc;
using namespace testsupport;

TEST_CASE("fig1 parses with its structure") {
  auto a = load_gta("fig1.gta");
  CHECK(a.name == "Posting");
  CHECK(a.clocks == std::vector<std::string>{"c"});
  CHECK(a.locations.size() == 6);
  CHECK(a.transitions.size() == 8);
  CHECK(a.locations[a.initial].name == "init");
  auto post = a.find_location("post");
  REQUIRE(post);
  CHECK(a.locations[*post].invariant.conjuncts.size() == 1);
  std::size_t guarded = 0;
  for (const auto &t : a.transitions)
    guarded += t.location_guard.has_value();
  CHECK(guarded == 2);
}

TEST_CASE("printing is stable and round trips") {
  for (auto name : {"fig1.gta", "fig1_guarded.gta", "fig3.gta", "fig4.gta", "broadcast.lbta"}) {
    auto m = parse_model(read_file(model_path(name)));
    std::string text = print_model(m);
    auto again = parse_model(text);
    CHECK(print_model(again) == text);
  }
}

TEST_CASE("lbta models keep their broadcasts") {
  auto b = parse_lbta(read_file(model_path("broadcast.lbta")));
  CHECK(b.broadcasts.size() == 2);
  std::size_t sends = 0;
  for (const auto &t : b.transitions)
    sends += t.sync.kind == SyncKind::send;
  CHECK(sends == 2);
}

TEST_CASE("malformed models are rejected with a position") {
  auto fails = [](const std::string &text, const std::string &needle) {
    try {
      parse_model(text);
    } catch (const ModelError &e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
      return;
    }
    FAIL("accepted: " << text);
  };
  fails("", "empty model");
  fails("clocks c\n", "must start");
  fails("gta A\nclocks c\nlocation a\n", "no initial location");
  fails("gta A\nclocks c\nlocation a initial\ntrans a -> b\n", "undeclared location 'b'");
  fails("gta A\nclocks c\nlocation a initial\ntrans a -> a reset: d\n", "undeclared clock 'd'");
  fails("gta A\nclocks c\nlocation a initial\ntrans a -> a sync: x!!\n", "only allowed in lbta");
  fails("lbta A\nclocks c\nbroadcasts x\nlocation a initial\ntrans a -> a locguard: a\n", "only allowed in gta");
  fails("lbta A\nclocks c\nbroadcasts x\nlocation a initial\ntrans a -> a sync: y!!\n", "undeclared broadcast");
  fails("gta A\nclocks c, c\nlocation a initial\n", "duplicate clock");
  fails("gta A\nclocks c\nlocation a initial\nlocation a\n", "duplicate location");
  fails("gta A\nclocks c\nlocation a initial inv: c <=\n", "3:");
}

TEST_CASE("max constants are per clock") {
  auto a = parse_gta("gta A\nclocks x, y\nlocation a initial inv: x <= 4\n"
                     "trans a -> a guard: y > 2 && x >= 1\n");
  CHECK(max_constants(a) == std::vector<std::int64_t>{4, 2});
}

TEST_CASE("relabeling makes labels unique and remembers the user label") {
  auto a = load_gta("fig1.gta");
  auto [u, map] = relabel_unique(a);
  std::set<std::string> seen;
  for (const auto &t : u.transitions)
    CHECK(seen.insert(t.label).second);
  CHECK(map.user("s4#1") == "s4");
  CHECK(map.user("s4#2") == "s4");
  CHECK(map.resolve("s4").size() == 2);
  CHECK(map.resolve("s4#2") == std::vector<std::string>{"s4#2"});
  CHECK(map.resolve("serr") == std::vector<std::string>{"serr"});
  CHECK(map.resolve("nosuch").empty());

  auto s = parse_gta("gta S\nclocks c\nlocation a initial\ntrans a -> a\ntrans a -> a\n");
  auto [su, smap] = relabel_unique(s);
  CHECK(su.transitions[0].label == "tau#1");
  CHECK(smap.silent("tau#2"));
}

TEST_CASE("unguard drops location guards and adds t") {
  auto a = load_gta("fig1.gta");
  auto ta = unguard(a);
  REQUIRE(ta.global_clock);
  CHECK(ta.clocks[*ta.global_clock] == "t");
  for (const auto &t : ta.transitions)
    CHECK_FALSE(t.location_guard);
  auto clash = parse_gta("gta C\nclocks t\nlocation a initial\n");
  CHECK(unguard(clash).clocks.back() == "t_");
  CHECK(strip_guarded(a).transitions.size() == 6);
}

TEST_CASE("timelock check on the suite") {
  CHECK(validate(load_gta("fig1.gta")).timelock.verdict == TimelockVerdict::proved);
  auto r = validate(load_gta("fig3.gta"));
  CHECK(r.timelock.verdict == TimelockVerdict::refuted);
  CHECK(r.timelock.witness_text == "q1, c == 1");
  CHECK(std::find(r.diagnostics.begin(), r.diagnostics.end(), "Assumption 1 refuted at (q1, c == 1)") !=
        r.diagnostics.end());
  ValidationOptions skip;
  skip.skip_timelock = true;
  CHECK(validate(load_gta("fig3.gta"), skip).timelock.verdict == TimelockVerdict::skipped);
}

TEST_CASE("timelock check distinguishes simple automata") {
  auto ok = parse_gta("gta A\nclocks c\nlocation a initial inv: c <= 1\ntrans a -> a guard: c == 1 reset: c\n");
  CHECK(check_timelock_free(ok).verdict == TimelockVerdict::proved);
  auto stuck = parse_gta("gta A\nclocks c\nlocation a initial inv: c <= 1\n");
  CHECK(check_timelock_free(stuck).verdict == TimelockVerdict::refuted);
  auto zeno = parse_gta("gta A\nclocks c\nlocation a initial inv: c <= 0\ntrans a -> a\n");
  CHECK(check_timelock_free(zeno).verdict == TimelockVerdict::refuted);
}

TEST_CASE("lbta validation warns about receivers without senders") {
  auto b = parse_lbta("lbta B\nclocks c\nbroadcasts x, y\nlocation a initial\n"
                      "trans a -> a label: s sync: x!!\ntrans a -> a label: r sync: y??\n");
  auto r = validate(b);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0] == "receiver y?? has no matching sender");
}

TEST_CASE("generated automata meet the requested shape") {
  std::mt19937 rng(3);
  for (int i = 0; i < 40; ++i) {
    auto a = random_gta(rng);
    CHECK(a.locations.size() <= 4);
    CHECK(a.transitions.size() <= 6);
    CHECK(a.clocks.size() == 1);
    for (auto m : max_constants(a))
      CHECK(m <= 2);
    CHECK(check_timelock_free(a).verdict == TimelockVerdict::proved);
  }
}
