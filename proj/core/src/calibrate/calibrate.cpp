#include "costcal/calibrate/calibrate.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "costcal/error.hpp"

namespace costcal::calibrate {

using analysis::CostModel;
using analysis::Metric;

std::vector<int> default_sizes() {
  std::vector<int> s;
  for (int n = 4; n <= 100; n += 4) s.push_back(n);
  return s;
}

SampleMatrix SampleMatrix::project(const CostModel& sub) const {
  std::vector<std::size_t> cols;
  for (const auto& m : sub.components()) {
    int j = model.index_of(m);
    if (j < 0) throw Error(ErrorKind::Input, "sample matrix has no column " + m.str());
    cols.push_back(static_cast<std::size_t>(j));
  }
  SampleMatrix out;
  out.model = sub;
  out.c = Matrix(m(), cols.size());
  for (std::size_t i = 0; i < m(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out.c(i, j) = c(i, cols[j]);
  out.t = t;
  out.meta = meta;
  out.dropped = dropped;
  out.diagnostics = diagnostics;
  return out;
}

SampleMatrix collect_samples(const std::vector<CalibrationProgram>& suite,
                             const CostModel& model, const SampleOptions& opts) {
  if (suite.empty()) throw Error(ErrorKind::Input, "empty calibration suite");
  if (model.size() == 0) throw Error(ErrorKind::Input, "empty cost model");
  Timer timer = opts.timer ? opts.timer : Timer([](const lang::Program& p, const lang::Term& g,
                                                   int reps, int inner) {
    return vm::profile(p, g, reps, inner);
  });
  auto sizes = opts.sizes.empty() ? default_sizes() : opts.sizes;
  auto log = [&](const std::string& s) {
    if (opts.log) opts.log(s);
  };

  std::vector<std::vector<double>> rows;
  SampleMatrix out;
  out.model = model;
  for (const auto& prog : suite) {
    auto costs = prog.costs(model);  // exactness checked here
    for (int n : sizes) {
      int size = std::max(n, prog.rule().min_size);
      std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(rows.size() + out.dropped);
      auto g = prog.goal(gen_input(prog.rule(), size, seed));
      auto sv = prog.sizes(g);
      std::vector<double> row;
      for (const auto& f : costs) row.push_back(static_cast<double>(analysis::eval_cost(f, sv)));

      int inner = opts.inner_iters;
      if (inner <= 0) {
        auto probe = timer(prog.program(), g, 3, 1);
        double once = std::max(vm::median(probe.samples_ns), 1.0);
        inner = static_cast<int>(std::clamp(std::ceil(opts.min_loop_ns / once), 1.0, 1e6));
      }
      auto tr = timer(prog.program(), g, opts.reps, inner);
      if (tr.resolution_limited) {
        ++out.dropped;
        out.diagnostics.push_back(prog.id() + " size " + std::to_string(size) +
                                  ": dropped (timer resolution)");
        continue;
      }
      rows.push_back(std::move(row));
      out.t.push_back(tr.median_ns);
      out.meta.push_back({prog.id(), size, seed});
    }
    log(prog.id() + ": " + std::to_string(sizes.size()) + " sizes timed");
  }
  const std::size_t v = model.size();
  if (rows.size() <= v)
    throw Error(ErrorKind::Numeric, "only " + std::to_string(rows.size()) +
                                        " usable rows for " + std::to_string(v) +
                                        " components (" + std::to_string(out.dropped) +
                                        " dropped)");
  if (out.dropped > 0 && rows.size() <= 4 * v)
    throw Error(ErrorKind::Numeric, "after dropping " + std::to_string(out.dropped) +
                                        " rows only " + std::to_string(rows.size()) +
                                        " remain; need more than " + std::to_string(4 * v));
  out.c = Matrix::from_rows(rows);
  return out;
}

std::string to_csv(const SampleMatrix& s) {
  std::ostringstream o;
  o.precision(17);
  for (const auto& m : s.model.components()) o << m.str() << ',';
  o << "duration_ns\n";
  for (std::size_t i = 0; i < s.m(); ++i) {
    for (std::size_t j = 0; j < s.v(); ++j) o << s.c(i, j) << ',';
    o << s.t[i] << '\n';
  }
  return o.str();
}

namespace {

// Splits on commas that are not inside parentheses.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : line) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

SampleMatrix from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Input, "empty CSV");
  auto head = split_csv(line);
  if (head.size() < 2 || head.back() != "duration_ns")
    throw Error(ErrorKind::Input, "CSV header must end with duration_ns");
  std::vector<Metric> ms;
  for (std::size_t j = 0; j + 1 < head.size(); ++j) ms.push_back(Metric::parse(head[j]));
  SampleMatrix s;
  s.model = CostModel(ms);
  std::vector<std::vector<double>> rows;
  int ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != head.size())
      throw Error(ErrorKind::Input, "CSV line " + std::to_string(ln) + ": wrong field count");
    std::vector<double> row;
    try {
      for (std::size_t j = 0; j + 1 < cells.size(); ++j) row.push_back(std::stod(cells[j]));
      s.t.push_back(std::stod(cells.back()));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Input, "CSV line " + std::to_string(ln) + ": bad number");
    }
    rows.push_back(std::move(row));
    s.meta.push_back({"csv", 0, 0});
  }
  s.c = rows.empty() ? Matrix(0, ms.size()) : Matrix::from_rows(rows);
  return s;
}

CostModel head_part(const CostModel& model) {
  std::vector<Metric> ms;
  for (const auto& m : model.components())
    if (m.is_head_metric()) ms.push_back(m);
  return CostModel(ms);
}

ModelFit fit_model(const SampleMatrix& samples, const CostModel& model) {
  for (const auto& m : model.components())
    if (!m.is_head_metric())
      throw Error(ErrorKind::Input, "component " + m.str() +
                                        " is measured by builtin calibration, not fitted");
  auto sub = samples.project(model);
  std::vector<std::string> names;
  for (const auto& m : model.components()) names.push_back(m.str());
  ModelFit f;
  f.model = model;
  f.k = least_squares(sub.c, sub.t, names);
  auto st = residual_stats(sub.c, sub.t, f.k);
  f.rss = st.rss;
  f.mrss = st.mrss;
  f.s = st.s;
  f.m = sub.m();
  f.v = sub.v();
  auto dinv = inverse_gram_diagonal(householder_qr(sub.c));
  for (std::size_t j = 0; j < f.k.size(); ++j) {
    double cn = norm2(sub.c.column(j));
    f.std_err.push_back(f.s * std::sqrt(dinv[j]));
    // Uncentered VIF: 1 / (1 - R^2) of column j regressed on the others.
    f.vif.push_back(cn * cn * dinv[j]);
  }
  for (std::size_t j = 0; j < f.k.size(); ++j) {
    if (f.k[j] < 0)
      f.warnings.push_back("negative constant for " + names[j] + " (" +
                           std::to_string(f.k[j]) + " ns): the model may be misspecified");
    if (f.vif[j] > 10)
      f.warnings.push_back(names[j] + " is nearly collinear with the other components (VIF " +
                           std::to_string(f.vif[j]) + "): its constant is poorly determined");
    if (f.s > 0 && std::abs(f.k[j]) < 2 * f.std_err[j])
      f.warnings.push_back("constant for " + names[j] +
                           " is within two standard errors of zero: the component may be redundant");
  }
  return f;
}

std::string builtin_key(const Metric& m) {
  if (m.is_head_metric()) throw Error(ErrorKind::Input, m.str() + " is not a builtin metric");
  return m.name + "/" + std::to_string(m.arity);
}

std::map<std::string, double> calibrate_builtins(long reps, std::vector<std::string> names) {
  if (reps < 100000)
    throw Error(ErrorKind::Input, "builtin calibration needs reps >= 100000");
  if (names.empty()) names = vm::registered_builtins();
  std::map<std::string, double> out;
  for (const auto& n : names) out[n] = vm::time_builtin(n, reps);
  return out;
}

const ModelFit* PlatformProfile::find(const CostModel& model) const {
  auto head = head_part(model);
  for (const auto& f : fits)
    if (f.model == head) return &f;
  return nullptr;
}

std::vector<double> PlatformProfile::constants(const CostModel& model) const {
  auto head = head_part(model);
  const ModelFit* fit = head.size() ? find(model) : nullptr;
  if (head.size() && !fit)
    throw Error(ErrorKind::Input, "profile has no fit for model {" + head.signature() + "}");
  std::vector<double> k;
  for (const auto& m : model.components()) {
    if (m.is_head_metric()) {
      k.push_back(fit->k[static_cast<std::size_t>(fit->model.index_of(m))]);
    } else {
      auto it = builtins.find(builtin_key(m));
      if (it == builtins.end())
        throw Error(ErrorKind::Input, "profile has no measured constant for " + m.str());
      k.push_back(it->second);
    }
  }
  return k;
}

std::string PlatformProfile::to_json() const {
  nlohmann::json j;
  j["host"] = host;
  j["timestamp"] = timestamp;
  j["seed"] = seed;
  j["calibration_s"] = calibration_s;
  j["models"] = nlohmann::json::array();
  for (const auto& f : fits) {
    nlohmann::json m;
    m["signature"] = f.model.signature();
    m["K_ns"] = f.k;
    m["m"] = f.m;
    m["v"] = f.v;
    m["RSS"] = f.rss;
    m["MRSS"] = f.mrss;
    m["S_ns"] = f.s;
    m["std_err_ns"] = f.std_err;
    m["VIF"] = f.vif;
    m["warnings"] = f.warnings;
    j["models"].push_back(m);
  }
  j["builtins_ns"] = builtins;
  return j.dump(2) + "\n";
}

PlatformProfile PlatformProfile::from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    PlatformProfile p;
    p.host = j.value("host", "");
    p.timestamp = j.value("timestamp", "");
    p.seed = j.value("seed", std::uint64_t{0});
    p.calibration_s = j.value("calibration_s", 0.0);
    for (const auto& m : j.at("models")) {
      ModelFit f;
      f.model = CostModel::parse(m.at("signature").get<std::string>());
      f.k = m.at("K_ns").get<std::vector<double>>();
      if (f.k.size() != f.model.size())
        throw Error(ErrorKind::Input, "profile: K length does not match {" +
                                          f.model.signature() + "}");
      f.m = m.value("m", std::size_t{0});
      f.v = m.value("v", f.model.size());
      f.rss = m.value("RSS", 0.0);
      f.mrss = m.value("MRSS", 0.0);
      f.s = m.value("S_ns", 0.0);
      f.std_err = m.value("std_err_ns", std::vector<double>{});
      f.vif = m.value("VIF", std::vector<double>{});
      f.warnings = m.value("warnings", std::vector<std::string>{});
      p.fits.push_back(std::move(f));
    }
    if (j.contains("builtins_ns")) p.builtins = j["builtins_ns"].get<std::map<std::string, double>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad platform profile: ") + e.what());
  }
}

void PlatformProfile::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path);
  out << to_json();
}

PlatformProfile PlatformProfile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot read profile " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string host_label() {
  char buf[256] = {0};
  if (gethostname(buf, sizeof buf - 1) != 0) return "unknown";
  return buf;
}

std::string utc_timestamp() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace costcal::calibrate
