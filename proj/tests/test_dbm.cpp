#include <catch_amalgamated.hpp>

#include "support/generators.hpp"

using namespace dtnmc;
using namespace testsupport;

TEST_CASE("bounds add and order by raw encoding") {
  CHECK((Bound::le(2) + Bound::lt(1)) == Bound::lt(3));
  CHECK((Bound::le(2) + Bound::le(-1)) == Bound::le(1));
  CHECK((Bound::le(2) + Bound::infinity()).is_inf());
  CHECK(Bound::lt(3) < Bound::le(3));
  CHECK(Bound::le(3) < Bound::lt(4));
  CHECK(Bound::le(1).shifted(2) == Bound::le(3));
  CHECK(Bound::lt(-2).to_string() == "<-2");
}

TEST_CASE("canonical form tightens and detects emptiness") {
  Dbm d = Dbm::universal(3);
  d.constrain(1, 0, Bound::le(3));
  d.constrain(2, 1, Bound::le(1));
  d.canonicalize();
  CHECK(d.at(2, 0) == Bound::le(4));

  Dbm e = Dbm::universal(2);
  e.constrain(1, 0, Bound::lt(1));
  e.constrain(0, 1, Bound::le(-1));
  CHECK(e.empty());
}

TEST_CASE("up, reset and eliminate") {
  Dbm z = Dbm::zero(3);
  z.up();
  CHECK(z.at(1, 0).is_inf());
  CHECK(z.at(1, 2) == Bound::le(0));
  z.constrain(1, 0, Bound::le(2));
  z.reset(2);
  CHECK(z.at(2, 0) == Bound::le(0));
  CHECK(z.at(1, 0) == Bound::le(2));
  Dbm p = z.eliminate(2);
  CHECK(p.dim() == 2);
  CHECK(p.at(1, 0) == Bound::le(2));
}

TEST_CASE("permuted swaps clocks") {
  Dbm d = Dbm::universal(3);
  d.constrain(1, 0, Bound::le(1));
  d.constrain(0, 2, Bound::lt(-2));
  d.canonicalize();
  Dbm s = d.permuted({2, 1});
  CHECK(s.at(2, 0) == Bound::le(1));
  CHECK(s.at(0, 1) == Bound::lt(-2));
  CHECK(s.permuted({2, 1}) == d);
}

TEST_CASE("inclusion") {
  Dbm big = Dbm::zero(2);
  big.up();
  Dbm small = Dbm::zero(2);
  CHECK(big.includes(small));
  CHECK_FALSE(small.includes(big));
}

TEST_CASE("to_string prints tight atoms") {
  Dbm d = Dbm::universal(3);
  d.constrain(1, 0, Bound::lt(1));
  d.constrain(0, 1, Bound::lt(0));
  d.constrain(2, 0, Bound::le(0));
  d.constrain(0, 2, Bound::le(0));
  d.canonicalize();
  std::string s = d.to_string({"x", "y"});
  CHECK(s.find("x > 0") != std::string::npos);
  CHECK(s.find("x < 1") != std::string::npos);
  CHECK(s.find("y == 0") != std::string::npos);
}

TEST_CASE("region_of, sample and contains agree") {
  RegionContext ctx;
  ctx.bound = {2, 2};
  ctx.group = {0, 0};
  ctx.diag_bound = 2;
  std::mt19937 rng(7);
  for (int i = 0; i < 300; ++i) {
    Valuation v(2);
    v.den = 8;
    for (auto &x : v.num)
      x = rng() % 32;
    Dbm r = region_of(v, ctx);
    CHECK(contains(r, v));
    Valuation s = sample(r);
    CHECK(contains(r, s));
    CHECK(region_of(s, ctx) == r);
  }
}

TEST_CASE("time successor leaves the region once") {
  RegionContext ctx;
  ctx.bound = {1};
  ctx.group = {0};
  Valuation v(1);
  Dbm r0 = region_of(v, ctx);
  auto w = time_successor_point(v, ctx);
  REQUIRE(w);
  Dbm r1 = region_of(*w, ctx);
  CHECK(r1.to_string({"c"}) == "c > 0 && c < 1");
  auto w2 = time_successor_point(*w, ctx);
  CHECK(region_of(*w2, ctx).to_string({"c"}) == "c == 1");
  auto w3 = time_successor_point(*w2, ctx);
  CHECK(region_of(*w3, ctx).to_string({"c"}) == "c > 1");
  CHECK_FALSE(time_successor_point(*w3, ctx));
  CHECK(!(r0 == r1));
}

TEST_CASE("slots and next") {
  CHECK(next_slot(Slot::point(0), 3) == Slot::open(0));
  CHECK(next_slot(Slot::open(0), 3) == Slot::point(1));
  CHECK(next_slot(Slot::point(3), 3) == Slot::unbounded(3));
  CHECK(Slot::open(2).to_string() == "(2,3)");
  CHECK(Slot::point(2).to_string() == "[2,2]");
  CHECK(Slot::unbounded(4).to_string() == "(4,inf)");
  CHECK(Slot::point(1) < Slot::open(1));
  CHECK(Slot::open(1) < Slot::point(2));
}

TEST_CASE("shift_slot rejects improper regions and out-of-range shifts") {
  Dbm r = Dbm::zero(3);
  CHECK(is_proper(r, 1));
  CHECK_THROWS_AS(shift_slot(r, 1, -1, 4), PreconditionError);
  Dbm improper = Dbm::zero(3);
  improper.up();
  improper.constrain(2, 0, Bound::lt(1));
  improper.constrain(0, 2, Bound::lt(0));
  CHECK_FALSE(is_proper(improper, 1));
  CHECK_THROWS_AS(shift_slot(improper, 1, 1, 4), PreconditionError);
}

TEST_CASE("shift kernel on random proper regions") {
  std::mt19937 rng(11);
  for (int i = 0; i < 300; ++i) {
    auto p = random_proper_region(rng, 1 + rng() % 2, 2, 6);
    REQUIRE(is_proper(p.region, p.t_clock));
    Slot s = slot_of(p.region, p.t_clock);
    std::int64_t room = 5 - static_cast<std::int64_t>(s.m);
    std::int64_t k = static_cast<std::int64_t>(rng() % static_cast<unsigned>(room + 1)) - static_cast<std::int64_t>(s.m);
    Dbm shifted = shift_slot(p.region, p.t_clock, k, p.tmax);
    CHECK(slot_of(shifted, p.t_clock) == s.shifted(k));
    CHECK(eliminate_clock(shifted, p.t_clock) == eliminate_clock(p.region, p.t_clock));
    CHECK(shift_slot(shifted, p.t_clock, -k, p.tmax) == p.region);
  }
}

TEST_CASE("to_constraint round trips through constrain") {
  RegionContext ctx;
  ctx.bound = {2, 1};
  ctx.group = {0, 0};
  ctx.diag_bound = 1;
  Valuation v(2);
  v.den = 4;
  v.num = {5, 2};
  Dbm r = region_of(v, ctx);
  Dbm back = Dbm::universal(3);
  constrain(back, to_constraint(r));
  back.canonicalize();
  CHECK(back == r);
}

TEST_CASE("zone post operators") {
  Dbm z = Dbm::zero(2);
  ClockConstraint inv;
  inv.conjuncts.push_back(Atom{0, std::nullopt, Op::le, 3});
  Dbm d = zone_post_delay(z, inv);
  CHECK(d.at(1, 0) == Bound::le(3));
  Transition tr;
  tr.guard.conjuncts.push_back(Atom{0, std::nullopt, Op::ge, 2});
  tr.resets = {0};
  Dbm t = zone_post_trans(d, tr, {});
  CHECK(t == Dbm::zero(2));
}
