#include <catch_amalgamated.hpp>

#include "dtnmc/dtn_local.hpp"
#include "support/generators.hpp"

using namespace dtnmc;
using namespace testsupport;

namespace {

std::set<std::string> projection(const LayerEngine &eng, const Layer &l) {
  std::set<std::string> out;
  for (const auto &s : l.states)
    out.insert(eng.describe(s));
  return out;
}

const std::set<std::string> fig3_w0 = {"init, c == 0", "q1, c == 0"};
const std::set<std::string> fig3_w1 = {"init, c == 0", "init, c > 0 && c < 1", "q1, c == 0", "q1, c > 0 && c < 1"};
const std::set<std::string> fig3_w2 = {"init, c == 0", "init, c > 0 && c < 1", "init, c == 1",
                                       "q1, c == 0",   "q1, c > 0 && c < 1",   "q1, c == 1"};

} // namespace

TEST_CASE("fig3 first three layers") {
  auto a = load_gta("fig3.gta");
  LayerEngine eng(a, {});
  auto b = build_layers(eng);
  REQUIRE(b.layers.size() >= 3);
  CHECK(b.layers[0].slot == Slot::point(0));
  CHECK(b.layers[1].slot == Slot::open(0));
  CHECK(b.layers[2].slot == Slot::point(1));
  CHECK(projection(eng, b.layers[0]) == fig3_w0);
  CHECK(projection(eng, b.layers[1]) == fig3_w1);
  CHECK(projection(eng, b.layers[2]) == fig3_w2);
}

TEST_CASE("layer invariants hold on the suite") {
  for (auto name : {"fig1.gta", "fig1_guarded.gta", "fig1_guarded_noinv.gta", "fig3.gta", "fig4.gta"}) {
    INFO(name);
    LayerEngine eng(load_gta(name), {});
    auto b = build_layers(eng);
    REQUIRE(b.i0);
    REQUIRE(b.l0);
    CHECK(b.layers[*b.i0].slot.singleton());
    CHECK(approx_equal(b.layers[*b.i0], b.layers[*b.l0]));
    for (std::size_t l = 0; l < b.layers.size(); ++l) {
      const auto &layer = b.layers[l];
      CHECK(std::is_sorted(layer.states.begin(), layer.states.end()));
      for (const auto &s : layer.states)
        CHECK(normalized_kind(s.region, eng.t_clock()) == layer.slot.kind);
      for (const auto &e : layer.edges) {
        REQUIRE(e.source < layer.states.size());
        REQUIRE(e.target < layer.states.size());
        if (!e.transition)
          continue;
        // discrete edges are witnessed inside the same layer
        if (auto g = eng.location_guard(*e.transition)) {
          bool witness = std::any_of(layer.states.begin(), layer.states.end(), [&](auto &s) { return s.loc == *g; });
          CHECK(witness);
        }
      }
      if (l + 1 < b.layers.size())
        for (const auto &[src, tgt] : layer.boundary)
          CHECK(b.layers[l + 1].index_of(tgt));
    }
  }
}

TEST_CASE("fixpoint does not depend on the seed order") {
  auto a = load_gta("fig1.gta");
  LayerEngine eng(a, {});
  auto b = build_layers(eng);
  for (std::size_t l = 1; l < b.layers.size(); ++l) {
    auto seed = LayerEngine::next_seed(b.layers[l - 1]);
    auto reversed = seed;
    std::reverse(reversed.begin(), reversed.end());
    Layer x = eng.close(b.layers[l].slot, seed), y = eng.close(b.layers[l].slot, reversed);
    CHECK(x.states == y.states);
    CHECK(x.states == b.layers[l].states);
  }
}

TEST_CASE("single location without transitions stops at the first repeat") {
  auto a = parse_gta("gta Idle\nclocks c\nlocation q initial\n");
  LayerEngine eng(a, {});
  auto b = build_layers(eng);
  CHECK(b.layers[0].states.size() == 1);
  REQUIRE(b.i0);
  REQUIRE(b.l0);
  CHECK(*b.l0 - *b.i0 == 2);
}

TEST_CASE("fig1 reaches error with c = 0 in a singleton slot from [2,2] on") {
  LayerEngine eng(load_gta("fig1.gta"), {});
  auto b = build_layers(eng);
  bool found = false;
  for (const auto &l : b.layers)
    if (l.slot.singleton() && l.slot.m >= 2 && projection(eng, l).count("error, c == 0"))
      found = true;
  CHECK(found);
  CHECK_FALSE(projection(eng, b.layers[0]).count("error, c == 0"));
}

TEST_CASE("approx_equal") {
  Layer a, b;
  a.slot = Slot::point(3);
  b.slot = Slot::point(7);
  a.states = b.states = {LocalState{0, Dbm::zero(3)}};
  REQUIRE(approx_equal(a, b));
  CHECK(*approx_equal(a, b) == 4);
  b.states.push_back(LocalState{1, Dbm::zero(3)});
  CHECK_FALSE(approx_equal(a, b));

  LayerEngine eng(load_gta("fig3.gta"), {});
  auto built = build_layers(eng);
  REQUIRE(built.layers.size() > 6);
  CHECK(approx_equal(built.layers[4], built.layers[6]) == BigInt(1));
}

TEST_CASE("loopback redirects the last boundary into the repeated layer") {
  LayerEngine eng(load_gta("fig3.gta"), {});
  auto b = build_layers(eng);
  auto d = apply_loopback(b);
  CHECK(d.layers.size() == *b.l0);
  std::size_t back = 0;
  for (const auto &e : d.edges) {
    REQUIRE(e.source < d.size());
    REQUIRE(e.target < d.size());
    if (e.kind == DraEdge::Kind::loopback) {
      ++back;
      CHECK(d.locate(e.source).first == *b.l0 - 1);
      CHECK(d.locate(e.target).first == *b.i0);
    }
  }
  CHECK(back == b.layers[*b.l0 - 1].boundary.size());
  for (const auto &s : b.layers[*b.l0].states)
    CHECK(b.layers[*b.i0].index_of(s));

  auto idle = parse_gta("gta Idle\nclocks c\nlocation q initial\n");
  LayerEngine e2(idle, {});
  auto d2 = apply_loopback(build_layers(e2));
  bool back_to_one = false;
  for (const auto &e : d2.edges)
    back_to_one = back_to_one || (e.kind == DraEdge::Kind::loopback && d2.slot(e.target) == Slot::point(1));
  CHECK(back_to_one);
}

TEST_CASE("label reachability on the posting examples") {
  CHECK(check_label_reachable(load_gta("fig1.gta"), "serr").reachable);
  CHECK(check_label_reachable(load_gta("fig1_guarded_noinv.gta"), "serr").reachable);
  CHECK(check_label_reachable(load_gta("fig1.gta"), "s4#1").reachable);
  CHECK_FALSE(check_label_reachable(load_gta("fig1.gta"), "s4#2").reachable);
  CHECK_THROWS_AS(check_label_reachable(load_gta("fig1.gta"), "nosuch"), QueryError);
}

TEST_CASE("witness path ends with the queried label") {
  auto r = check_label_reachable(load_gta("fig1.gta"), "serr");
  REQUIRE_FALSE(r.witness.empty());
  CHECK(r.witness.back().label == "serr");
  CHECK(r.witness.back().kind == DraEdge::Kind::discrete);
  CHECK(r.witness.front().from.find("init") != std::string::npos);
  for (std::size_t i = 1; i < r.witness.size(); ++i)
    CHECK(r.witness[i].from == r.witness[i - 1].to);
}

TEST_CASE("streaming holds one layer and agrees with the full build") {
  for (auto name : {"fig1.gta", "fig1_guarded.gta", "fig1_guarded_noinv.gta", "fig3.gta", "fig4.gta"}) {
    auto a = load_gta(name);
    for (const auto &l : user_labels(a)) {
      auto full = check_label_reachable(a, l);
      auto lean = check_label_reachable(a, l, {}, true);
      INFO(name << " " << l);
      CHECK(full.reachable == lean.reachable);
      CHECK(lean.stats.peak_layers_held == 1);
      if (!lean.reachable)
        CHECK(lean.stats.fingerprints > 0);
    }
  }
}

TEST_CASE("layer cap is reported, never silent") {
  EngineOptions o;
  o.max_layers = 2;
  CHECK_THROWS_AS(check_label_reachable(load_gta("fig1.gta"), "serr", o), BudgetExceeded);
}

TEST_CASE("threads do not change the layers") {
  auto a = load_gta("fig1.gta");
  EngineOptions many;
  many.threads = 4;
  LayerEngine one(a, {}), four(a, many);
  auto b1 = build_layers(one), b4 = build_layers(four);
  REQUIRE(b1.layers.size() == b4.layers.size());
  for (std::size_t i = 0; i < b1.layers.size(); ++i)
    CHECK(b1.layers[i].states == b4.layers[i].states);
}

TEST_CASE("summary automaton guards and resets") {
  auto check_edge = [](const std::string &model, const std::string &label, const std::string &guard, bool reset) {
    auto a = load_gta(model);
    LayerEngine eng(a, {});
    auto d = apply_loopback(build_layers(eng));
    auto s = summary_automaton(eng, d);
    for (const auto &l : s.locations)
      CHECK(l.invariant.trivial());
    bool found = false;
    for (const auto &t : s.transitions)
      if (t.label == label && constraint_text(s, t.guard) == guard)
        found = found || (t.resets == std::vector<std::size_t>{0}) == reset;
    INFO(model << " " << label << " " << guard);
    CHECK(found);
  };
  check_edge("fig1.gta", "s5", "c == 1", true);
  check_edge("fig3.gta", "loop", "c == 1", true);
}

TEST_CASE("summary epsilon edge into an unconstrained region has a trivial guard") {
  auto a = parse_gta("gta Free\nlocation q initial\ntrans q -> q label: a\n");
  LayerEngine eng(a, {});
  auto d = apply_loopback(build_layers(eng));
  auto s = summary_automaton(eng, d);
  std::size_t silent = 0;
  for (const auto &t : s.transitions)
    if (t.label.empty()) {
      ++silent;
      CHECK(t.guard.trivial());
    }
  CHECK(silent > 0);
}

TEST_CASE("k-fold product") {
  auto a = load_gta("fig1.gta");
  LayerEngine eng(a, {});
  auto s = summary_automaton(eng, apply_loopback(build_layers(eng)));
  auto p1 = k_product(s, 1);
  CHECK(p1.locations.size() == s.locations.size());
  CHECK(p1.transitions.size() == s.transitions.size());
  for (const auto &t : p1.transitions)
    if (!t.label.empty())
      CHECK(t.label.rfind("p1_", 0) == 0);
  auto p2 = k_product(s, 2);
  CHECK(p2.clocks.size() == 2 * s.clocks.size());
  CHECK(labels_jointly_reachable(p2, {product_label(1, "serr"), product_label(2, "serr")}));
  CHECK_THROWS_AS(k_product(s, 3, 100), BudgetExceeded);
}

TEST_CASE("fingerprints identify equal state sets") {
  LayerEngine eng(load_gta("fig3.gta"), {});
  auto b = build_layers(eng);
  CHECK(fingerprint(b.layers[*b.i0].states) == fingerprint(b.layers[*b.l0].states));
  CHECK_FALSE(fingerprint(b.layers[0].states) == fingerprint(b.layers[2].states));
}
