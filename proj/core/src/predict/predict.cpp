#include "costcal/predict/predict.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "costcal/error.hpp"
#include "costcal/lang/parser.hpp"
#include "costcal/vm/timing.hpp"

namespace costcal::predict {

using analysis::CostModel;
using analysis::Metric;
using calibrate::CalibrationProgram;
using calibrate::DataKind;

double predict_time(const std::vector<double>& k, const std::vector<double>& c) {
  if (k.size() != c.size())
    throw Error(ErrorKind::Input, "constant vector has " + std::to_string(k.size()) +
                                      " entries but the cost vector has " +
                                      std::to_string(c.size()));
  double t = 0;
  for (std::size_t i = 0; i < k.size(); ++i) t += k[i] * c[i];
  return t;
}

double predict_time(const std::vector<double>& k,
                    const std::vector<analysis::CostFunction>& costs,
                    const std::vector<std::int64_t>& sizes) {
  std::vector<double> c;
  for (const auto& f : costs) c.push_back(static_cast<double>(analysis::eval_cost(f, sizes)));
  return predict_time(k, c);
}

double relative_error(double estimate, double observed) {
  if (!(observed > 0))
    throw Error(ErrorKind::Domain, "relative error needs a positive observed time");
  return 100.0 * std::abs(estimate - observed) / observed;
}

double global_error(const std::vector<double>& errors) {
  if (errors.empty()) throw Error(ErrorKind::Domain, "global error of an empty suite");
  double s = 0;
  for (double e : errors) s += e * e;
  return std::sqrt(s / static_cast<double>(errors.size()));
}

std::vector<calibrate::ModelFit> rank_models(std::vector<calibrate::ModelFit> fits) {
  std::stable_sort(fits.begin(), fits.end(), [](const auto& a, const auto& b) {
    if (a.s != b.s) return a.s < b.s;
    return a.model.size() < b.model.size();
  });
  return fits;
}

const std::vector<Benchmark>& benchmark_suite() {
  static const std::vector<Benchmark> suite = [] {
    struct Spec {
      const char* id;
      const char* description;
      const char* goal;
      calibrate::DataRule rule;
      int size;
    };
    const Spec specs[] = {
        {"append", "concatenate a list with a 3-element list", "app(In, [1,2,3], Z)",
         {DataKind::IntList, 0}, 100},
        {"nrev", "naive reverse", "nrev(In, R)", {DataKind::IntList, 0}, 30},
        {"hanoi", "towers of Hanoi, list of moves", "hanoi(In, a, b, c, M)",
         {DataKind::Nat, 1}, 10},
        {"palindrome", "list followed by its reverse", "palindrome(In, P)",
         {DataKind::IntList, 0}, 30},
        {"powset", "all sublists", "powset(In, P)", {DataKind::IntList, 0}, 10},
        {"evpol", "polynomial evaluation at 2", "evpol(In, 2, V)", {DataKind::IntList, 0}, 50},
    };
    std::vector<Benchmark> out;
    for (const auto& sp : specs) {
      const auto& src = benchmark_sources();
      auto it = std::find_if(src.begin(), src.end(), [&](const auto& s) {
        return std::string(s.id) == sp.id;
      });
      if (it == src.end()) throw Error(ErrorKind::Runtime, "missing source for " + std::string(sp.id));
      out.push_back({CalibrationProgram(sp.id, sp.description, it->text, sp.goal, sp.rule),
                     sp.size});
    }
    return out;
  }();
  return suite;
}

CostModel with_builtins(const CostModel& model, const lang::Program& p,
                        const lang::PredKey& entry) {
  std::set<lang::PredKey> seen;
  std::vector<lang::PredKey> todo{entry};
  std::set<Metric> extra;
  while (!todo.empty()) {
    auto k = todo.back();
    todo.pop_back();
    if (!seen.insert(k).second) continue;
    const auto* pred = p.find(k);
    if (!pred) continue;
    for (const auto& c : pred->clauses) {
      for (const auto& [m, n] : analysis::body_metrics(c, p))
        if (!m.is_head_metric() && n > 0) extra.insert(m);
      for (const auto& l : c.body)
        if (l.kind == lang::LiteralKind::Call) todo.push_back(l.key());
    }
  }
  auto comps = model.components();
  for (const auto& m : extra)
    if (!model.contains(m)) comps.push_back(m);
  return CostModel(comps);
}

AccuracyReport evaluate(const std::vector<Benchmark>& suite,
                        const calibrate::PlatformProfile& profile,
                        const std::vector<CostModel>& models, const Protocol& protocol) {
  if (suite.empty()) throw Error(ErrorKind::Domain, "empty benchmark suite");
  if (models.empty()) throw Error(ErrorKind::Input, "no cost models to evaluate");
  if (protocol.inputs < 1 || protocol.runs < 1)
    throw Error(ErrorKind::Input, "inputs and runs must be >= 1");
  calibrate::Timer timer = protocol.timer
                               ? protocol.timer
                               : calibrate::Timer([](const lang::Program& p, const lang::Term& g,
                                                     int reps, int inner) {
                                   return vm::profile(p, g, reps, inner);
                                 });
  AccuracyReport rep;
  rep.seed = protocol.seed;
  rep.host = profile.host;
  for (const auto& m : models) rep.models.push_back(m.signature());

  for (const auto& b : suite) {
    const auto& w = b.workload;
    ProgramReport pr;
    pr.id = w.id();
    pr.size = std::max(protocol.size > 0 ? protocol.size : b.size, w.rule().min_size);

    std::vector<CostModel> full;
    for (const auto& m : models)
      full.push_back(protocol.include_builtins ? with_builtins(m, w.program(), w.entry()) : m);

    // Static analysis from source text, as a user would run it.
    auto t0 = std::chrono::steady_clock::now();
    auto session = analysis::Analyzer::create(lang::parse_program(w.source()));
    std::vector<std::vector<analysis::CostFunction>> costs;
    for (const auto& m : full)
      costs.push_back(session->predicate_cost(w.entry(), m, analysis::Bound::Exact));
    pr.analysis_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<double> sums(models.size(), 0.0);
    double observed = 0;
    for (int i = 0; i < protocol.inputs; ++i) {
      std::uint64_t seed = protocol.seed + static_cast<std::uint64_t>(i);
      auto g = w.goal(calibrate::gen_input(w.rule(), pr.size, seed));
      auto sv = w.sizes(g);
      if (i == 0) pr.sizes = sv;
      for (std::size_t j = 0; j < full.size(); ++j)
        sums[j] += predict_time(profile.constants(full[j]), costs[j], sv);

      auto probe = timer(w.program(), g, 3, 1);
      double once = std::max(vm::median(probe.samples_ns), 1.0);
      int inner = static_cast<int>(std::clamp(std::ceil(protocol.min_loop_ns / once), 1.0, 1e6));
      auto tr = timer(w.program(), g, protocol.runs, inner);
      observed += tr.mean_ns;
    }
    pr.observed_ns = observed / protocol.inputs;
    if (!(pr.observed_ns > 0))
      throw Error(ErrorKind::Numeric, pr.id + ": observed time is not positive");
    for (std::size_t j = 0; j < full.size(); ++j) {
      Estimate e;
      e.label = rep.models[j];
      e.model = full[j];
      e.estimate_ns = sums[j] / protocol.inputs;
      e.error_pct = relative_error(e.estimate_ns, pr.observed_ns);
      pr.estimates.push_back(std::move(e));
    }
    rep.programs.push_back(std::move(pr));
  }

  for (std::size_t j = 0; j < models.size(); ++j) {
    std::vector<double> errs;
    for (const auto& pr : rep.programs) errs.push_back(pr.estimates[j].error_pct);
    rep.global_error_pct.push_back(global_error(errs));
  }
  std::vector<std::size_t> order(models.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rep.global_error_pct[a] != rep.global_error_pct[b])
      return rep.global_error_pct[a] < rep.global_error_pct[b];
    return models[a].size() < models[b].size();
  });
  for (auto j : order) rep.ranking.push_back(rep.models[j]);
  return rep;
}

namespace {

std::string fixed(double x, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

}  // namespace

std::string render_table(const AccuracyReport& r) {
  std::ostringstream os;
  os << "host " << r.host << ", seed " << r.seed << "\n\n";
  os << std::left << std::setw(12) << "program" << std::right << std::setw(6) << "size"
     << std::setw(14) << "observed_ns" << std::setw(10) << "T_ca_s";
  for (std::size_t j = 0; j < r.models.size(); ++j)
    os << std::setw(14) << ("est" + std::to_string(j + 1)) << std::setw(9)
       << ("err" + std::to_string(j + 1) + "%");
  os << "\n";
  for (const auto& p : r.programs) {
    os << std::left << std::setw(12) << p.id << std::right << std::setw(6) << p.size
       << std::setw(14) << fixed(p.observed_ns, 1) << std::setw(10) << fixed(p.analysis_s, 4);
    for (const auto& e : p.estimates)
      os << std::setw(14) << fixed(e.estimate_ns, 1) << std::setw(9) << fixed(e.error_pct, 1);
    os << "\n";
  }
  os << "\nmodels:\n";
  for (std::size_t j = 0; j < r.models.size(); ++j)
    os << "  " << (j + 1) << ": {" << r.models[j] << "}  global error "
       << fixed(r.global_error_pct[j], 1) << "%\n";
  os << "ranking:";
  for (const auto& m : r.ranking) os << " {" << m << "}";
  os << "\n";
  return os.str();
}

std::string to_json(const AccuracyReport& r) {
  nlohmann::json j;
  j["host"] = r.host;
  j["seed"] = r.seed;
  j["models"] = r.models;
  j["global_error_pct"] = r.global_error_pct;
  j["ranking"] = r.ranking;
  j["programs"] = nlohmann::json::array();
  for (const auto& p : r.programs) {
    nlohmann::json pj;
    pj["program"] = p.id;
    pj["size"] = p.size;
    pj["sizes"] = p.sizes;
    pj["observed_ns"] = p.observed_ns;
    pj["analysis_s"] = p.analysis_s;
    pj["estimates"] = nlohmann::json::array();
    for (const auto& e : p.estimates)
      pj["estimates"].push_back({{"model", e.label},
                                 {"components", e.model.signature()},
                                 {"estimate_ns", e.estimate_ns},
                                 {"error_pct", e.error_pct}});
    j["programs"].push_back(pj);
  }
  return j.dump(2);
}

}  // namespace costcal::predict
