#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtnmc/dsl.hpp"
#include "dtnmc/dtn_global.hpp"
#include "dtnmc/lbta_bridge.hpp"
#include "dtnmc/oracle.hpp"

using namespace dtnmc;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string model;
  std::string max_layers;
  std::size_t max_states = 1000000;
  unsigned threads = 1;
  std::string json_path, dot_path;
  bool streaming = false;
  bool fail_on_unreachable = false;
  bool skip_timelock = false;
  bool strict = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App *sub, Common &c) {
  sub->add_option("model", c.model, "model file (.gta or .lbta)")->required();
  sub->add_option("--max-layers", c.max_layers, "cap on the number of layers");
  sub->add_option("--max-states", c.max_states, "state budget")->envname("DTNMC_MAX_STATES");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--json", c.json_path, "write the JSON result to this file");
  sub->add_option("--dot", c.dot_path, "write a DOT graph to this file");
  sub->add_flag("--streaming", c.streaming, "keep one layer plus fingerprints");
  sub->add_flag("--fail-on-unreachable", c.fail_on_unreachable, "exit 1 when the query is unreachable");
  sub->add_flag("--skip-timelock-check", c.skip_timelock, "do not check timelock freedom");
  sub->add_flag("--strict", c.strict, "treat a refuted timelock check as an error");
}

EngineOptions engine_options(const Common &c) {
  EngineOptions o;
  o.max_states = c.max_states;
  o.threads = c.threads;
  if (!c.max_layers.empty()) {
    try {
      o.max_layers = BigInt(c.max_layers);
    } catch (const std::exception &) {
      throw UsageError("--max-layers expects an integer");
    }
  }
  return o;
}

void write_file(const std::string &path, const std::string &text) {
  if (path.empty())
    return;
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write " + path);
  out << text;
}

void emit(const Common &c, const json &j) {
  std::string text = j.dump(2) + "\n";
  std::cout << text;
  write_file(c.json_path, text);
}

Automaton load(const Common &c) { return parse_model(read_file(c.model)); }

// engines work on guarded automata; broadcast models go through the translation first
GuardedTimedAutomaton as_gta(const Automaton &m) {
  if (auto *a = std::get_if<GuardedTimedAutomaton>(&m))
    return *a;
  if (auto *b = std::get_if<LossyBroadcastAutomaton>(&m))
    return lbta_to_gta(*b).automaton;
  throw UsageError("expected a gta or lbta model");
}

json validation_json(const ValidationReport &r) {
  json j;
  j["timelock"] = verdict_text(r.timelock.verdict);
  if (!r.timelock.witness_text.empty())
    j["timelock_witness"] = r.timelock.witness_text;
  json rel = json::object();
  for (const auto &[in, user] : r.relabel_map.to_user)
    if (in != user)
      rel[in] = user;
  j["relabeled"] = rel;
  j["diagnostics"] = r.diagnostics;
  return j;
}

// warn about violated assumptions before running an engine
void precheck(const Common &c, const GuardedTimedAutomaton &a) {
  ValidationOptions vo;
  vo.skip_timelock = c.skip_timelock;
  vo.max_states = c.max_states;
  auto rep = validate(a, vo);
  for (const auto &d : rep.diagnostics)
    if (d.rfind("Assumption", 0) == 0)
      std::cerr << "warning: " << d << "\n";
  if (c.strict && !rep.ok())
    throw UsageError("timelock check refuted (" + rep.timelock.witness_text + ")");
}

const char *kind_text(DraEdge::Kind k) {
  switch (k) {
  case DraEdge::Kind::delay: return "delay";
  case DraEdge::Kind::discrete: return "discrete";
  case DraEdge::Kind::boundary: return "boundary";
  case DraEdge::Kind::loopback: return "loopback";
  }
  return "?";
}

json witness_json(const std::vector<WitnessStep> &w) {
  json out = json::array();
  for (const auto &s : w) {
    json e;
    e["kind"] = kind_text(s.kind);
    if (s.kind == DraEdge::Kind::discrete) {
      e["label"] = s.label;
      e["internal_label"] = s.internal_label;
    }
    e["from"] = s.from;
    e["to"] = s.to;
    e["slot_from"] = s.slot_from;
    e["slot_to"] = s.slot_to;
    out.push_back(e);
  }
  return out;
}

template <class R> void common_result(json &j, const R &r) {
  j["query"] = r.query;
  j["mode"] = r.streaming ? "streaming" : "dra";
  j["result"] = r.reachable ? "reachable" : "unreachable";
  j["layers_built"] = r.layers_built;
  j["i0"] = r.i0 ? json(*r.i0) : json(nullptr);
  j["l0"] = r.l0 ? json(*r.l0) : json(nullptr);
}

int answered(const Common &c, bool reachable) { return !reachable && c.fail_on_unreachable ? 1 : 0; }

int cmd_validate(const Common &c) {
  auto m = load(c);
  ValidationOptions vo;
  vo.skip_timelock = c.skip_timelock;
  vo.max_states = c.max_states;
  ValidationReport rep;
  std::string kind;
  if (auto *b = std::get_if<LossyBroadcastAutomaton>(&m)) {
    rep = validate(*b, vo);
    kind = "lbta";
  } else if (auto *a = std::get_if<GuardedTimedAutomaton>(&m)) {
    rep = validate(*a, vo);
    kind = "gta";
  } else {
    throw UsageError("validate expects a gta or lbta model");
  }
  for (const auto &d : rep.diagnostics)
    std::cerr << d << "\n";
  json j;
  j["model"] = c.model;
  j["kind"] = kind;
  j.update(validation_json(rep));
  emit(c, j);
  if (c.strict && !rep.ok())
    return 2;
  return 0;
}

int cmd_check_local(const Common &c, const std::string &label) {
  auto a = as_gta(load(c));
  precheck(c, a);
  auto opt = engine_options(c);
  auto r = check_label_reachable(a, label, opt, c.streaming);
  json j;
  common_result(j, r);
  j["witness"] = witness_json(r.witness);
  if (c.streaming)
    j["peak_layers_held"] = r.stats.peak_layers_held;
  emit(c, j);
  if (!c.dot_path.empty()) {
    LayerEngine eng(a, opt);
    write_file(c.dot_path, to_dot(eng, apply_loopback(build_layers(eng))));
  }
  return answered(c, r.reachable);
}

json support_json(const GuardedTimedAutomaton &a, const EngineOptions &opt, const GlobalResult &r) {
  json out = json::array();
  if (r.support.empty())
    return out;
  LayerEngine eng(a, opt, false);
  for (const auto &s : r.support) {
    json e;
    e["location"] = eng.gta().locations[s.loc].name;
    e["region"] = eliminate_clock(s.region, eng.t_clock()).to_string(eng.gta().clocks);
    e["slot"] = r.slot.to_string();
    out.push_back(e);
  }
  return out;
}

int cmd_check_global(const Common &c, const std::string &query, bool no_shortcuts) {
  auto a = as_gta(load(c));
  precheck(c, a);
  auto opt = engine_options(c);
  GlobalOptions g;
  g.shortcuts = !no_shortcuts;
  std::string dot;
  auto r = check_global(a, query, opt, c.streaming, g, c.dot_path.empty() ? nullptr : &dot);
  json j;
  common_result(j, r);
  j["method"] = r.method;
  j["support"] = support_json(a, opt, r);
  j["witness"] = witness_json(r.witness);
  if (c.streaming)
    j["peak_layers_held"] = r.stats.peak_layers_held;
  emit(c, j);
  if (!c.dot_path.empty()) {
    if (dot.empty()) {
      LayerEngine eng(a, opt);
      dot = to_dot(eng, apply_loopback(build_layers(eng)));
    }
    write_file(c.dot_path, dot);
  }
  return answered(c, r.reachable);
}

int cmd_build_dra(const Common &c) {
  auto a = as_gta(load(c));
  precheck(c, a);
  LayerEngine eng(a, engine_options(c));
  auto b = build_layers(eng);
  auto d = apply_loopback(b);
  json j;
  j["layers_built"] = b.layers.size();
  j["i0"] = b.i0 ? json(*b.i0) : json(nullptr);
  j["l0"] = b.l0 ? json(*b.l0) : json(nullptr);
  j["states"] = d.size();
  j["edges"] = d.edges.size();
  json layers = json::array();
  for (const auto &l : d.layers) {
    std::set<std::string> proj;
    for (const auto &s : l.states)
      proj.insert(eng.describe(s));
    json e;
    e["slot"] = l.slot.to_string();
    e["states"] = proj;
    layers.push_back(e);
  }
  j["layers"] = layers;
  emit(c, j);
  write_file(c.dot_path, to_dot(eng, d));
  return 0;
}

int cmd_summary(const Common &c) {
  auto a = as_gta(load(c));
  precheck(c, a);
  LayerEngine eng(a, engine_options(c));
  auto d = apply_loopback(build_layers(eng));
  auto s = summary_automaton(eng, d);
  std::string text = print_model(s);
  std::cout << text;
  if (!c.json_path.empty()) {
    json j;
    j["locations"] = s.locations.size();
    j["transitions"] = s.transitions.size();
    j["model"] = text;
    write_file(c.json_path, j.dump(2) + "\n");
  }
  write_file(c.dot_path, to_dot(eng, d));
  return 0;
}

int cmd_product(const Common &c, std::size_t k, const std::vector<std::string> &require) {
  auto a = as_gta(load(c));
  precheck(c, a);
  LayerEngine eng(a, engine_options(c));
  auto d = apply_loopback(build_layers(eng));
  auto s = summary_automaton(eng, d);
  auto p = k_product(s, k, c.max_states);
  if (require.empty()) {
    std::string text = print_model(p);
    std::cout << text;
    write_file(c.json_path, json{{"k", k}, {"locations", p.locations.size()}, {"model", text}}.dump(2) + "\n");
    return 0;
  }
  std::vector<std::string> labels;
  for (const auto &r : require) {
    auto colon = r.find(':');
    if (colon == std::string::npos)
      throw UsageError("--require expects <copy>:<label>");
    std::size_t i = 0;
    try {
      i = std::stoul(r.substr(0, colon));
    } catch (const std::exception &) {
      throw UsageError("--require expects <copy>:<label>");
    }
    if (i < 1 || i > k)
      throw UsageError("copy index out of range in --require " + r);
    std::string label = r.substr(colon + 1);
    auto internal = resolve_label(eng, label);
    // the summary keeps user labels, so match on the user name
    labels.push_back(product_label(i, eng.labels().user(internal.front())));
  }
  bool ok = labels_jointly_reachable(p, labels, c.max_states);
  json j;
  j["query"] = require;
  j["k"] = k;
  j["result"] = ok ? "reachable" : "unreachable";
  emit(c, j);
  return answered(c, ok);
}

int cmd_translate(const Common &c, const std::string &to, bool annotate) {
  auto m = load(c);
  std::string text;
  if (to == "lbta") {
    auto *a = std::get_if<GuardedTimedAutomaton>(&m);
    if (!a)
      throw UsageError("translate --to lbta expects a gta model");
    text = annotated(gta_to_lbta(*a), annotate);
  } else {
    auto *b = std::get_if<LossyBroadcastAutomaton>(&m);
    if (!b)
      throw UsageError("translate --to gta expects an lbta model");
    text = annotated(lbta_to_gta(*b), annotate);
  }
  std::cout << text;
  if (!c.json_path.empty())
    write_file(c.json_path, json{{"to", to}, {"model", text}}.dump(2) + "\n");
  return 0;
}

int cmd_oracle(const Common &c, std::size_t n, const std::string &label, const std::string &constraint,
               std::int64_t slot_cap, bool no_symmetry) {
  auto m = load(c);
  OracleOptions o;
  o.n = n;
  o.slot_cap = slot_cap;
  o.max_states = c.max_states;
  o.symmetry = !no_symmetry;
  if (!label.empty())
    o.target_label = label;
  OracleResult r;
  if (auto *b = std::get_if<LossyBroadcastAutomaton>(&m)) {
    if (!constraint.empty())
      o.target_constraint = parse_constraint(constraint, lbta_to_gta(*b).automaton);
    if (!label.empty() && relabel_unique(*b).second.resolve(label).empty())
      throw QueryError("unknown label '" + label + "'");
    r = explore_lbta_network(*b, o);
  } else {
    auto a = as_gta(m);
    if (!constraint.empty())
      o.target_constraint = parse_constraint(constraint, a);
    if (!label.empty() && relabel_unique(a).second.resolve(label).empty())
      throw QueryError("unknown label '" + label + "'");
    r = explore_network(a, o);
  }
  json trace = json::array();
  for (const auto &s : r.trace) {
    json e;
    e["delay"] = exact_text(s.delay);
    e["process"] = s.process;
    e["label"] = s.label;
    std::cout << e.dump() << "\n";
    e["internal_label"] = s.internal_label;
    e["time"] = exact_text(s.time);
    trace.push_back(e);
  }
  json j;
  j["query"] = !label.empty() ? label : constraint;
  j["n"] = n;
  j["slot_cap"] = slot_cap;
  bool targeted = !label.empty() || !constraint.empty();
  if (targeted)
    j["result"] = r.target_found ? "reachable" : "unreachable";
  j["states"] = r.states;
  j["labels"] = r.labels;
  std::cout << j.dump() << "\n";
  j["trace"] = trace;
  write_file(c.json_path, j.dump(2) + "\n");
  return targeted ? answered(c, r.target_found) : 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"dtnmc: reachability for disjunctive timed networks"};
  app.require_subcommand(1);
  Common c;

  auto *validate_cmd = app.add_subcommand("validate", "check model assumptions");
  add_common(validate_cmd, c);

  std::string label, constraint;
  auto *local = app.add_subcommand("check-local", "is a transition label reachable for some network size");
  add_common(local, c);
  local->add_option("--label", label, "user or internal label")->required();

  bool no_shortcuts = false;
  auto *global = app.add_subcommand("check-global", "is a location constraint reachable for some network size");
  add_common(global, c);
  global->add_option("query", constraint, "location constraint, e.g. \"#q1>=1 && #init==0\"");
  global->add_option("--constraint", constraint, "location constraint");
  global->add_flag("--no-shortcuts", no_shortcuts, "always explore support sets");

  auto *dra = app.add_subcommand("build-dra", "build the layered region automaton");
  add_common(dra, c);

  auto *summary = app.add_subcommand("summary", "print the summary timed automaton");
  add_common(summary, c);

  std::size_t k = 1;
  std::vector<std::string> require;
  auto *product = app.add_subcommand("product", "k-fold product of the summary automaton");
  add_common(product, c);
  product->add_option("-k", k, "number of copies")->required()->check(CLI::PositiveNumber);
  product->add_option("--require", require, "<copy>:<label>, all must fire along one run");

  std::string to;
  bool annotate = false;
  auto *translate = app.add_subcommand("translate", "translate between gta and lbta");
  add_common(translate, c);
  translate->add_option("--to", to, "target formalism")->required()->check(CLI::IsMember({"gta", "lbta"}));
  translate->add_flag("--annotate", annotate, "comment gadget elements with their source");

  std::size_t n = 2;
  std::int64_t slot_cap = 4;
  bool no_symmetry = false;
  auto *oracle = app.add_subcommand("oracle", "explicit exploration of the n-process network");
  add_common(oracle, c);
  oracle->add_option("-n", n, "number of processes")->required()->check(CLI::PositiveNumber);
  auto *lopt = oracle->add_option("--label", label, "stop at the first step firing this label");
  oracle->add_option("--constraint", constraint, "stop at the first configuration satisfying this")
      ->excludes(lopt);
  oracle->add_option("--slot-cap", slot_cap, "explore while t <= cap")->check(CLI::NonNegativeNumber);
  oracle->add_flag("--no-symmetry", no_symmetry, "disable symmetry reduction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate_cmd)
      return cmd_validate(c);
    if (*local)
      return cmd_check_local(c, label);
    if (*global) {
      if (constraint.empty())
        throw UsageError("check-global needs a constraint");
      return cmd_check_global(c, constraint, no_shortcuts);
    }
    if (*dra)
      return cmd_build_dra(c);
    if (*summary)
      return cmd_summary(c);
    if (*product)
      return cmd_product(c, k, require);
    if (*translate)
      return cmd_translate(c, to, annotate);
    if (*oracle)
      return cmd_oracle(c, n, label, constraint, slot_cap, no_symmetry);
  } catch (const BudgetExceeded &e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
