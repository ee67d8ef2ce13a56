#include "costcal/analysis/metric.hpp"

#include <set>

#include "costcal/error.hpp"
#include "costcal/lang/parser.hpp"

namespace costcal::analysis {

std::string Metric::str() const {
  switch (kind) {
    case MetricKind::Step: return "step";
    case MetricKind::Nargs: return "nargs";
    case MetricKind::Giunif: return "giunif";
    case MetricKind::Gounif: return "gounif";
    case MetricKind::Viunif: return "viunif";
    case MetricKind::Vounif: return "vounif";
    case MetricKind::Builtin:
      return "builtin(" + name + "/" + std::to_string(arity) + ")";
    case MetricKind::ArithOp:
      return "arith(" + name + "/" + std::to_string(arity) + ")";
  }
  return "?";
}

Metric Metric::from_term(const lang::Term& t) {
  auto bad = [&] {
    throw Error(ErrorKind::Input, "unknown metric " + lang::to_string(t));
  };
  if (t.is_atom()) {
    const auto& n = t.as_atom().name;
    if (n == "step") return step();
    if (n == "nargs") return nargs();
    if (n == "giunif") return giunif();
    if (n == "gounif") return gounif();
    if (n == "viunif") return viunif();
    if (n == "vounif") return vounif();
    bad();
  }
  if (t.is_compound() && t.arity() == 1 &&
      (t.functor() == "builtin" || t.functor() == "arith")) {
    const auto& pi = t.arg(0);
    if (pi.is_compound() && pi.functor() == "/" && pi.arity() == 2 &&
        pi.arg(0).is_atom() && pi.arg(1).is_int()) {
      auto name = pi.arg(0).as_atom().name;
      int ar = static_cast<int>(pi.arg(1).as_int());
      return t.functor() == "builtin" ? builtin(name, ar) : arith(name, ar);
    }
  }
  bad();
  return {};
}

Metric Metric::parse(std::string_view text) {
  // builtin(Name/N) and arith(Op/N) are split by hand: "*/" would lex as
  // one symbol atom.
  std::string s(text);
  for (const char* kind : {"builtin(", "arith("}) {
    std::string k(kind);
    auto slash = s.rfind('/');
    if (s.rfind(k, 0) == 0 && s.back() == ')' && slash != std::string::npos &&
        slash > k.size()) {
      std::string name = s.substr(k.size(), slash - k.size());
      std::string ar = s.substr(slash + 1, s.size() - slash - 2);
      while (!name.empty() && name.back() == ' ') name.pop_back();
      while (!name.empty() && name.front() == ' ') name.erase(0, 1);
      if (name.size() > 1 && name.front() == '\'' && name.back() == '\'')
        name = name.substr(1, name.size() - 2);
      try {
        int n = std::stoi(ar);
        return k == "builtin(" ? builtin(name, n) : arith(name, n);
      } catch (const std::exception&) {
      }
    }
  }
  return from_term(lang::parse_term(text).term);
}

CostModel::CostModel(std::vector<Metric> components)
    : components_(std::move(components)) {
  if (components_.empty())
    throw Error(ErrorKind::Input, "a cost model needs at least one component");
  std::set<Metric> seen;
  for (const auto& m : components_)
    if (!seen.insert(m).second)
      throw Error(ErrorKind::Input,
                  "duplicate cost model component " + m.str());
}

int CostModel::index_of(const Metric& m) const {
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (components_[i] == m) return static_cast<int>(i);
  return -1;
}

std::string CostModel::signature() const {
  std::string out;
  for (const auto& m : components_) {
    if (!out.empty()) out += ',';
    out += m.str();
  }
  return out;
}

CostModel CostModel::parse(std::string_view sig) {
  std::vector<Metric> out;
  std::string cur;
  int depth = 0;
  auto flush = [&] {
    if (cur.empty()) return;
    if (cur == "all") {
      CostModel all = all_head();
      for (const auto& m : all.components()) out.push_back(m);
    } else {
      out.push_back(Metric::parse(cur));
    }
    cur.clear();
  };
  for (char c : sig) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && (c == ',' || c == ' ' || c == '\t')) {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return CostModel(std::move(out));
}

CostModel CostModel::all_head() {
  return CostModel({Metric::step(), Metric::nargs(), Metric::giunif(),
                    Metric::gounif(), Metric::viunif(), Metric::vounif()});
}

CostModel CostModel::no_nargs() {
  return CostModel({Metric::step(), Metric::giunif(), Metric::gounif(),
                    Metric::viunif(), Metric::vounif()});
}

CostModel CostModel::no_nargs_viunif() {
  return CostModel({Metric::step(), Metric::giunif(), Metric::gounif(),
                    Metric::vounif()});
}

CostModel CostModel::step_only() { return CostModel({Metric::step()}); }

std::vector<CostModel> CostModel::standard_models() {
  return {all_head(), no_nargs(), no_nargs_viunif(), step_only()};
}

}  // namespace costcal::analysis
