#include <catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <json.hpp>

#include "support/generators.hpp"

using testsupport::model_path;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string &args) {
  std::string cmd = std::string(DTNMC_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE *p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::array<char, 4096> buf{};
  while (auto n = fread(buf.data(), 1, buf.size(), p))
    r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string m(const std::string &name) { return "'" + model_path(name) + "'"; }

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("check-local reports the error of fig1") {
  auto r = cli("check-local " + m("fig1.gta") + " --label serr");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["result"] == "reachable");
  CHECK(j["witness"].back()["label"] == "serr");
}

TEST_CASE("unreachable answers set the exit code only on request") {
  auto plain = cli("check-global " + m("fig3.gta") + " '#init==0 && #q1==0'");
  CHECK(plain.code == 0);
  CHECK(nlohmann::json::parse(plain.out)["result"] == "unreachable");
  CHECK(cli("check-global " + m("fig3.gta") + " '#init==0 && #q1==0' --fail-on-unreachable").code == 1);
}

TEST_CASE("usage and model errors exit with 2") {
  CHECK(cli("check-local " + m("fig1.gta") + " --label nosuch").code == 2);
  CHECK(cli("check-local " + m("fig1.gta")).code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("validate /nonexistent/model.gta").code == 2);
  CHECK(cli("check-global " + m("fig1.gta") + " '#nosuch>=1'").code == 2);
}

TEST_CASE("budget exhaustion exits with 3") {
  CHECK(cli("check-local " + m("fig1.gta") + " --label serr --max-layers 2").code == 3);
  CHECK(cli("oracle " + m("fig1.gta") + " -n 3 --label serr --max-states 10").code == 3);
}

TEST_CASE("validate reports the timelock of fig3") {
  auto r = cli("validate " + m("fig3.gta"));
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["timelock"] == "refuted");
  CHECK(j["diagnostics"][0] == "Assumption 1 refuted at (q1, c == 1)");
  CHECK(cli("validate " + m("fig3.gta") + " --strict").code == 2);
  CHECK(nlohmann::json::parse(cli("validate " + m("fig1.gta")).out)["timelock"] == "proved");
}

TEST_CASE("check-global on fig3 finds an all-q1 support") {
  auto r = cli("check-global " + m("fig3.gta") + " --constraint '#q1>=1 && #init==0'");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["result"] == "reachable");
  CHECK(j["method"] == "supports");
  for (const auto &s : j["support"])
    CHECK(s["location"] == "q1");
}

TEST_CASE("oracle prints one json line per step") {
  auto r = cli("oracle " + m("fig1.gta") + " -n 3 --label serr --slot-cap 2");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::vector<nlohmann::json> lines;
  for (std::string l; std::getline(in, l);)
    lines.push_back(nlohmann::json::parse(l));
  REQUIRE(lines.size() >= 2);
  CHECK(lines.back()["result"] == "reachable");
  CHECK(lines[lines.size() - 2]["label"] == "serr");
  CHECK(lines[lines.size() - 2]["process"].is_number());
}

TEST_CASE("json and dot files are written") {
  auto dir = std::filesystem::temp_directory_path() / ("dtnmc_cli_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto json = dir / "out.json", dot = dir / "out.dot";
  auto r = cli("build-dra " + m("fig3.gta") + " --json '" + json.string() + "' --dot '" + dot.string() + "'");
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(slurp(json));
  CHECK(j["layers_built"] == 7);
  CHECK(slurp(dot).rfind("digraph", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("translate round trips through the parser") {
  auto r = cli("translate " + m("fig1.gta") + " --to lbta");
  REQUIRE(r.code == 0);
  auto b = dtnmc::parse_lbta(r.out);
  CHECK(b.broadcasts.size() == 6);
  auto annotated = cli("translate " + m("fig1.gta") + " --to lbta --annotate");
  CHECK(annotated.out.rfind("# ", 0) == 0);
  auto back = cli("translate " + m("broadcast.lbta") + " --to gta");
  REQUIRE(back.code == 0);
  auto clocks = dtnmc::parse_gta(back.out).clocks;
  CHECK(std::find(clocks.begin(), clocks.end(), "c_snd") != clocks.end());
}

TEST_CASE("product requires labels of distinct copies") {
  auto r = cli("product " + m("fig1.gta") + " -k 2 --require 1:s4 --require 2:serr");
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["result"] == "reachable");
}

TEST_CASE("summary prints a parsable automaton") {
  auto r = cli("summary " + m("fig3.gta"));
  REQUIRE(r.code == 0);
  CHECK_NOTHROW(dtnmc::parse_gta(r.out));
}
