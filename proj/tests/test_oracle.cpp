#include <catch_amalgamated.hpp>

#include "dtnmc/lbta_bridge.hpp"
#include "dtnmc/oracle.hpp"
#include "support/generators.hpp"

using namespace dtnmc;
using namespace testsupport;

namespace {

TraceStep step(int delay, std::size_t process, const std::string &label) {
  TraceStep s;
  s.delay = delay;
  s.process = process;
  s.label = label;
  return s;
}

std::vector<TraceStep> three_reader_run() {
  return {step(1, 1, "s0"), step(0, 1, "s1"), step(0, 2, "s4"),
          step(0, 3, "s4"), step(1, 2, "s5"), step(0, 3, "serr")};
}

OracleResult run(const GuardedTimedAutomaton &a, std::size_t n, std::int64_t cap,
                 std::optional<std::string> target = std::nullopt) {
  OracleOptions o;
  o.n = n;
  o.slot_cap = cap;
  o.target_label = std::move(target);
  return explore_network(a, o);
}

} // namespace

TEST_CASE("fig1 error needs three processes") {
  auto a = load_gta("fig1.gta");
  CHECK_FALSE(run(a, 1, 4).labels.count("serr"));
  CHECK_FALSE(run(a, 2, 4).labels.count("serr"));
  auto r = run(a, 3, 2, "serr");
  CHECK(r.target_found);
  REQUIRE_FALSE(r.trace.empty());
  CHECK(r.trace.back().label == "serr");
  std::string why;
  CHECK(check_trace(a, 3, r.trace, &why));
  INFO(why);
  Exact total = 0;
  for (const auto &s : r.trace)
    total += s.delay;
  CHECK(total == r.trace.back().time);
  CHECK(total == 2);
}

TEST_CASE("the three reader run replays on fig1") {
  auto a = load_gta("fig1.gta");
  std::string why;
  CHECK(check_trace(a, 3, three_reader_run(), &why));
  INFO(why);
  auto broken = three_reader_run();
  broken[4].delay = 0;
  CHECK_FALSE(check_trace(a, 3, broken));
  CHECK_FALSE(check_trace(a, 2, three_reader_run()));
}

TEST_CASE("projection folds the delays of removed steps") {
  auto p3 = project_trace(three_reader_run(), {3});
  REQUIRE(p3.size() == 2);
  CHECK(p3[0].delay == 1);
  CHECK(p3[0].label == "s4");
  CHECK(p3[1].delay == 1);
  CHECK(p3[1].label == "serr");

  auto all = project_trace(three_reader_run(), {1, 2, 3});
  REQUIRE(all.size() == 6);
  for (std::size_t i = 0; i < all.size(); ++i)
    CHECK(all[i].delay == three_reader_run()[i].delay);

  std::vector<TraceStep> silent{step(1, 1, ""), step(2, 1, "")};
  CHECK(project_trace(silent, {1}).empty());
}

TEST_CASE("translated fig1 broadcast network also reaches the error") {
  auto b = gta_to_lbta(load_gta("fig1.gta")).automaton;
  OracleOptions o;
  o.n = 3;
  o.slot_cap = 2;
  o.target_label = "serr";
  CHECK(explore_lbta_network(b, o).target_found);
}

TEST_CASE("broadcasts need another process to be received") {
  auto b = parse_lbta("lbta B\nclocks c\nbroadcasts x\nlocation a initial\nlocation b\n"
                      "trans a -> b label: snd sync: x!!\ntrans a -> b label: rcv sync: x??\n");
  OracleOptions o;
  o.n = 1;
  o.slot_cap = 2;
  auto one = explore_lbta_network(b, o);
  CHECK(one.labels == std::set<std::string>{"snd"});
  o.n = 2;
  auto two = explore_lbta_network(b, o);
  CHECK(two.labels == std::set<std::string>{"rcv", "snd"});
}

TEST_CASE("fired labels grow with the number of processes") {
  std::mt19937 rng(31);
  for (int i = 0; i < 12; ++i) {
    auto a = random_gta(rng);
    std::set<std::string> prev;
    for (std::size_t n = 1; n <= 3; ++n) {
      auto r = run(a, n, 3);
      INFO(print_model(a) << "n=" << n);
      CHECK(std::includes(r.labels.begin(), r.labels.end(), prev.begin(), prev.end()));
      prev = r.labels;
    }
  }
}

TEST_CASE("symmetry reduction keeps the fired labels") {
  std::mt19937 rng(37);
  for (int i = 0; i < 12; ++i) {
    auto a = random_gta(rng);
    OracleOptions on, off;
    on.n = off.n = 3;
    on.slot_cap = off.slot_cap = 3;
    off.symmetry = false;
    auto x = explore_network(a, on), y = explore_network(a, off);
    INFO(print_model(a));
    CHECK(x.labels == y.labels);
    CHECK(x.states <= y.states);
  }
}

TEST_CASE("oracle traces replay exactly") {
  std::mt19937 rng(43);
  for (int i = 0; i < 12; ++i) {
    auto a = random_gta(rng);
    auto all = run(a, 2, 3);
    for (const auto &l : all.labels) {
      auto r = run(a, 2, 3, l);
      REQUIRE(r.target_found);
      std::string why;
      INFO(print_model(a) << l);
      CHECK(check_trace(a, 2, r.trace, &why));
      INFO(why);
      CHECK(r.trace.back().label == l);
    }
  }
}

TEST_CASE("oracle budget and arguments") {
  auto a = load_gta("fig1.gta");
  OracleOptions o;
  o.n = 3;
  o.slot_cap = 4;
  o.max_states = 50;
  CHECK_THROWS_AS(explore_network(a, o), BudgetExceeded);
  o.n = 0;
  CHECK_THROWS_AS(explore_network(a, o), QueryError);
}
