#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <type_traits>

#include "model.hpp"

namespace dtnmc {

namespace dsl_detail {

struct Token {
  enum Kind { ident, number, symbol, end } kind = end;
  std::string text;
  std::size_t column = 0;
};

inline std::vector<Token> tokenize(const std::string &line, std::size_t lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '#')
      break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.column = i + 1;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_'))
        ++j;
      t.kind = Token::ident;
      t.text = line.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j])))
        ++j;
      t.kind = Token::number;
      t.text = line.substr(i, j - i);
      i = j;
    } else {
      static const char *two[] = {"->", "<=", ">=", "==", "&&", "!!", "??"};
      t.kind = Token::symbol;
      bool matched = false;
      for (const char *s : two)
        if (line.compare(i, 2, s) == 0) {
          t.text = s;
          i += 2;
          matched = true;
          break;
        }
      if (!matched) {
        if (std::string(",:<>+").find(c) == std::string::npos)
          throw ModelError(std::string("unexpected character '") + c + "'", lineno, i + 1);
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token e;
  e.column = line.size() + 1;
  out.push_back(e);
  return out;
}

struct RawAtom {
  std::string clock, other;
  Op op = Op::le;
  std::int64_t constant = 0;
  std::size_t line = 0, column = 0;
};

struct RawTransition {
  std::string source, target, label, locguard;
  std::vector<RawAtom> guard;
  std::vector<std::pair<std::string, std::size_t>> resets;
  std::optional<Sync> sync;
  std::size_t line = 0, source_col = 0, target_col = 0, locguard_col = 0, sync_col = 0;
};

struct RawLocation {
  std::string name;
  bool initial = false;
  std::vector<RawAtom> invariant;
  std::size_t line = 0, column = 0;
};

class LineParser {
public:
  LineParser(std::vector<Token> toks, std::size_t line) : toks_(std::move(toks)), line_(line) {}

  const Token &peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::end; }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string &msg, const Token &t) const {
    throw ModelError(msg, line_, t.column);
  }
  [[noreturn]] void fail(const std::string &msg) const { fail(msg, peek()); }

  Token expect_ident(const char *what) {
    if (peek().kind != Token::ident)
      fail(std::string("expected ") + what);
    return next();
  }
  void expect_symbol(const std::string &s) {
    if (peek().kind != Token::symbol || peek().text != s)
      fail("expected '" + s + "'");
    next();
  }
  bool accept_symbol(const std::string &s) {
    if (peek().kind == Token::symbol && peek().text == s) {
      next();
      return true;
    }
    return false;
  }
  bool keyword_ahead() const {
    return peek().kind == Token::ident && peek(1).kind == Token::symbol && peek(1).text == ":";
  }

  std::int64_t number() {
    if (peek().kind != Token::number)
      fail("expected a non-negative integer");
    Token t = next();
    try {
      return std::stoll(t.text);
    } catch (const std::out_of_range &) {
      fail("integer constant out of range", t);
    }
  }

  RawAtom atom() {
    RawAtom a;
    Token c = expect_ident("clock name");
    a.clock = c.text;
    a.line = line_;
    a.column = c.column;
    Token op = next();
    if (op.kind != Token::symbol)
      fail("expected comparison operator", op);
    if (op.text == "<") a.op = Op::lt;
    else if (op.text == "<=") a.op = Op::le;
    else if (op.text == "==") a.op = Op::eq;
    else if (op.text == ">=") a.op = Op::ge;
    else if (op.text == ">") a.op = Op::gt;
    else fail("expected comparison operator", op);
    if (peek().kind == Token::ident) {
      a.other = next().text;
      expect_symbol("+");
    }
    a.constant = number();
    return a;
  }

  std::vector<RawAtom> atoms() {
    std::vector<RawAtom> out{atom()};
    while (accept_symbol("&&"))
      out.push_back(atom());
    return out;
  }

  std::vector<std::pair<std::string, std::size_t>> ident_list(const char *what) {
    std::vector<std::pair<std::string, std::size_t>> out;
    if (at_end() || keyword_ahead())
      return out;
    do {
      Token t = expect_ident(what);
      out.emplace_back(t.text, t.column);
    } while (accept_symbol(","));
    return out;
  }

  std::size_t line() const { return line_; }

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

template <class A> ClockConstraint resolve(const A &a, const std::vector<RawAtom> &raw) {
  ClockConstraint g;
  for (const auto &r : raw) {
    Atom at;
    auto c = a.find_clock(r.clock);
    if (!c)
      throw ModelError("undeclared clock '" + r.clock + "'", r.line, r.column);
    at.clock = *c;
    if (!r.other.empty()) {
      auto o = a.find_clock(r.other);
      if (!o)
        throw ModelError("undeclared clock '" + r.other + "'", r.line, r.column);
      at.other = *o;
    }
    at.op = r.op;
    at.constant = r.constant;
    g.conjuncts.push_back(at);
  }
  return g;
}

} // namespace dsl_detail

inline Automaton parse_model(const std::string &text) {
  using namespace dsl_detail;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  enum { none, gta, lbta } kind = none;
  std::string name;
  std::vector<std::pair<std::string, std::size_t>> clocks, broadcasts;
  std::vector<RawLocation> locs;
  std::vector<RawTransition> trans;

  while (std::getline(in, line)) {
    ++lineno;
    LineParser p(tokenize(line, lineno), lineno);
    if (p.at_end())
      continue;
    Token kw = p.expect_ident("a declaration keyword");
    if (kw.text == "gta" || kw.text == "lbta") {
      if (kind != none)
        p.fail("automaton header declared twice", kw);
      kind = kw.text == "gta" ? gta : lbta;
      name = p.expect_ident("automaton name").text;
    } else if (kind == none) {
      p.fail("model must start with 'gta <Name>' or 'lbta <Name>'", kw);
    } else if (kw.text == "clocks") {
      for (auto &c : p.ident_list("clock name"))
        clocks.push_back(c);
    } else if (kw.text == "broadcasts") {
      if (kind != lbta)
        p.fail("'broadcasts' is only allowed in lbta models", kw);
      for (auto &c : p.ident_list("broadcast name"))
        broadcasts.push_back(c);
    } else if (kw.text == "location") {
      RawLocation l;
      Token id = p.expect_ident("location name");
      l.name = id.text;
      l.line = lineno;
      l.column = id.column;
      while (!p.at_end()) {
        Token t = p.expect_ident("'initial' or 'inv:'");
        if (t.text == "initial") {
          l.initial = true;
        } else if (t.text == "inv") {
          p.expect_symbol(":");
          for (auto &a : p.atoms()) {
            if (!a.other.empty())
              throw ModelError("diagonal atom in invariant", lineno, a.column);
            if (a.op != Op::lt && a.op != Op::le)
              throw ModelError("lower bound in invariant: move lower bounds into guards of "
                               "incoming transitions",
                               lineno, a.column);
            l.invariant.push_back(a);
          }
        } else {
          p.fail("unexpected '" + t.text + "' in location declaration", t);
        }
      }
      locs.push_back(std::move(l));
    } else if (kw.text == "trans") {
      RawTransition t;
      t.line = lineno;
      Token s = p.expect_ident("source location");
      t.source = s.text;
      t.source_col = s.column;
      p.expect_symbol("->");
      Token d = p.expect_ident("target location");
      t.target = d.text;
      t.target_col = d.column;
      std::set<std::string> seen;
      while (!p.at_end()) {
        Token k = p.expect_ident("a transition attribute");
        if (!seen.insert(k.text).second)
          p.fail("duplicate attribute '" + k.text + "'", k);
        p.expect_symbol(":");
        if (k.text == "label") {
          t.label = p.expect_ident("label").text;
        } else if (k.text == "guard") {
          t.guard = p.atoms();
        } else if (k.text == "reset") {
          t.resets = p.ident_list("clock name");
        } else if (k.text == "locguard") {
          if (kind != gta)
            p.fail("'locguard' is only allowed in gta models", k);
          Token g = p.expect_ident("guard location");
          t.locguard = g.text;
          t.locguard_col = g.column;
        } else if (k.text == "sync") {
          if (kind != lbta)
            p.fail("'sync' is only allowed in lbta models", k);
          Token a = p.expect_ident("broadcast name");
          t.sync_col = a.column;
          Sync sy;
          sy.channel = a.text;
          if (p.accept_symbol("!!"))
            sy.kind = SyncKind::send;
          else if (p.accept_symbol("??"))
            sy.kind = SyncKind::receive;
          else
            p.fail("expected '!!' or '?" "?'");
          t.sync = sy;
        } else {
          p.fail("unknown transition attribute '" + k.text + "'", k);
        }
      }
      if (kind == lbta && !t.sync)
        throw ModelError("lbta transition requires 'sync:'", lineno, s.column);
      trans.push_back(std::move(t));
    } else {
      p.fail("unknown declaration '" + kw.text + "'", kw);
    }
  }
  if (kind == none)
    throw ModelError("empty model: expected 'gta <Name>' or 'lbta <Name>'", lineno ? lineno : 1, 1);

  auto build = [&](auto &a) {
    a.name = name;
    std::set<std::string> cs;
    for (auto &[c, col] : clocks) {
      (void)col;
      if (!cs.insert(c).second)
        throw ModelError("duplicate clock '" + c + "'");
      a.clocks.push_back(c);
    }
    std::optional<std::size_t> init;
    for (auto &l : locs) {
      if (a.find_location(l.name))
        throw ModelError("duplicate location '" + l.name + "'", l.line, l.column);
      Location loc;
      loc.name = l.name;
      loc.invariant = resolve(a, l.invariant);
      if (l.initial) {
        if (init)
          throw ModelError("more than one initial location", l.line, l.column);
        init = a.locations.size();
      }
      a.locations.push_back(std::move(loc));
    }
    if (!init)
      throw ModelError("no initial location declared");
    a.initial = *init;
    auto loc_of = [&](const std::string &n, std::size_t line, std::size_t col) {
      auto i = a.find_location(n);
      if (!i)
        throw ModelError("undeclared location '" + n + "'", line, col);
      return *i;
    };
    for (auto &r : trans) {
      typename std::decay_t<decltype(a.transitions)>::value_type t;
      t.source = loc_of(r.source, r.line, r.source_col);
      t.target = loc_of(r.target, r.line, r.target_col);
      t.label = r.label;
      t.guard = resolve(a, r.guard);
      for (auto &[c, col] : r.resets) {
        auto ci = a.find_clock(c);
        if (!ci)
          throw ModelError("undeclared clock '" + c + "'", r.line, col);
        if (std::find(t.resets.begin(), t.resets.end(), *ci) == t.resets.end())
          t.resets.push_back(*ci);
      }
      if constexpr (std::is_same_v<decltype(t), Transition>) {
        if (!r.locguard.empty())
          t.location_guard = loc_of(r.locguard, r.line, r.locguard_col);
      } else {
        t.sync = *r.sync;
        bool found = false;
        for (auto &b : broadcasts)
          found = found || b.first == t.sync.channel;
        if (!found)
          throw ModelError("undeclared broadcast '" + t.sync.channel + "'", r.line, r.sync_col);
      }
      a.transitions.push_back(std::move(t));
    }
  };

  if (kind == gta) {
    GuardedTimedAutomaton a;
    build(a);
    return a;
  }
  LossyBroadcastAutomaton b;
  for (auto &[c, col] : broadcasts)
    b.broadcasts.push_back(c);
  build(b);
  return b;
}

inline GuardedTimedAutomaton parse_gta(const std::string &text) {
  auto m = parse_model(text);
  if (auto *g = std::get_if<GuardedTimedAutomaton>(&m))
    return *g;
  throw ModelError("expected a gta model");
}

inline LossyBroadcastAutomaton parse_lbta(const std::string &text) {
  auto m = parse_model(text);
  if (auto *b = std::get_if<LossyBroadcastAutomaton>(&m))
    return *b;
  throw ModelError("expected an lbta model");
}

inline std::string read_file(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw ModelError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// printing

template <class A> std::string atom_text(const A &a, const Atom &at) {
  std::string s = a.clocks[at.clock] + " " + op_text(at.op) + " ";
  if (at.other)
    s += a.clocks[*at.other] + " + ";
  return s + std::to_string(at.constant);
}

template <class A> std::string constraint_text(const A &a, const ClockConstraint &g) {
  std::vector<std::string> parts;
  for (const auto &at : g.conjuncts)
    parts.push_back(atom_text(a, at));
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i)
    out += (i ? " && " : "") + parts[i];
  return out;
}

namespace dsl_detail {

inline std::string joined(std::vector<std::string> v, const char *sep = ", ") {
  std::sort(v.begin(), v.end());
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? sep : "") + v[i];
  return out;
}

template <class A> std::string header_and_locations(const A &a, const char *kw,
                                                    const std::vector<std::string> &extra_decls) {
  std::string out = std::string(kw) + " " + a.name + "\n";
  if (!a.clocks.empty())
    out += "clocks " + joined(a.clocks) + "\n";
  for (const auto &d : extra_decls)
    out += d + "\n";
  std::vector<std::string> locs;
  for (std::size_t i = 0; i < a.locations.size(); ++i) {
    const auto &l = a.locations[i];
    std::string s = "location " + l.name;
    if (i == a.initial)
      s += " initial";
    if (!l.invariant.trivial())
      s += " inv: " + constraint_text(a, l.invariant);
    locs.push_back(s);
  }
  std::sort(locs.begin(), locs.end());
  for (auto &s : locs)
    out += s + "\n";
  return out;
}

template <class A, class T> std::string transition_common(const A &a, const T &t) {
  std::string s = "trans " + a.locations[t.source].name + " -> " + a.locations[t.target].name;
  if (!t.label.empty())
    s += " label: " + t.label;
  if (!t.guard.trivial())
    s += " guard: " + constraint_text(a, t.guard);
  if (!t.resets.empty()) {
    std::vector<std::string> r;
    for (auto c : t.resets)
      r.push_back(a.clocks[c]);
    s += " reset: " + joined(r);
  }
  return s;
}

} // namespace dsl_detail

template <class A> std::string print_model(const A &a) {
  using namespace dsl_detail;
  std::vector<std::string> ts;
  std::string out;
  if constexpr (std::is_same_v<A, LossyBroadcastAutomaton>) {
    std::vector<std::string> extra;
    if (!a.broadcasts.empty())
      extra.push_back("broadcasts " + joined(a.broadcasts));
    out = header_and_locations(a, "lbta", extra);
    for (const auto &t : a.transitions)
      ts.push_back(transition_common(a, t) + " sync: " + t.sync.channel +
                   (t.sync.kind == SyncKind::send ? "!!" : "??"));
  } else {
    out = header_and_locations(a, "gta", {});
    for (const auto &t : a.transitions) {
      std::string s = transition_common(a, t);
      if (t.location_guard)
        s += " locguard: " + a.locations[*t.location_guard].name;
      ts.push_back(s);
    }
  }
  std::sort(ts.begin(), ts.end());
  for (auto &s : ts)
    out += s + "\n";
  return out;
}

inline std::string print_model(const Automaton &m) {
  return std::visit([](const auto &a) { return print_model(a); }, m);
}

// structural equality modulo declaration order
template <class A> bool equivalent(const A &a, const A &b) { return print_model(a) == print_model(b); }

} // namespace dtnmc
