#include "cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <sstream>

#include "costcal/analysis/analyzer.hpp"
#include "costcal/calibrate/calibrate.hpp"
#include "costcal/error.hpp"
#include "costcal/lang/parser.hpp"
#include "costcal/lang/validate.hpp"
#include "costcal/predict/predict.hpp"
#include "costcal/vm/machine.hpp"
#include "costcal/vm/timing.hpp"

namespace costcal::cli {

using analysis::CostModel;
using calibrate::PlatformProfile;

namespace {

struct Config {
  std::string program;
  std::string goal;
  std::vector<std::string> models;
  std::string profile;
  std::string sizes;
  std::string programs;
  std::string entry;
  std::optional<std::uint64_t> seed;
  int reps = 0;
  int inner = 0;
  int inputs = 10;
  int size = 0;
  long builtin_reps = 100000;
  std::string out;
  std::string samples;
  std::string format = "table";
  bool upper = false;
  bool no_builtins = false;
};

// Advisory lock held for the duration of a timing command.
class TimingLock {
 public:
  TimingLock() {
    const char* env = std::getenv("COSTCAL_LOCK_FILE");
    path_ = env && *env ? env : "/tmp/costcal-timing.lock";
    fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0666);
    if (fd_ < 0) throw Error(ErrorKind::Runtime, "cannot open lock file " + path_);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorKind::Concurrency,
                  "another timing command is running (lock " + path_ + " is held)");
    }
  }
  ~TimingLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  TimingLock(const TimingLock&) = delete;
  TimingLock& operator=(const TimingLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path);
  out << text;
}

lang::Program load_program(const std::string& path, std::ostream& err) {
  auto p = lang::parse_program(read_text(path));
  auto diags = lang::validate_program(p);
  for (const auto& d : diags)
    err << path << ": " << (d.severity == lang::Severity::Error ? "error: " : "warning: ")
        << d.message << "\n";
  if (lang::has_errors(diags))
    throw Error(ErrorKind::Input, path + ": " + std::to_string(diags.size()) +
                                      " diagnostic(s); see above");
  return p;
}

std::uint64_t resolve_seed(const Config& c, std::ostream& err) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << s << " (generated)\n";
  return s;
}

void check_format(const Config& c) {
  if (c.format != "table" && c.format != "records")
    throw Error(ErrorKind::Input, "--format must be 'table' or 'records'");
}

// Writes to --out when given, stdout otherwise.
void emit(const Config& c, const std::string& text, std::ostream& out) {
  if (c.out.empty())
    out << text;
  else
    write_text(c.out, text);
}

lang::PredKey pick_entry(const lang::Program& p, const std::string& text) {
  if (!text.empty()) {
    auto slash = text.rfind('/');
    if (slash == std::string::npos) throw Error(ErrorKind::Input, "--entry must be name/arity");
    lang::PredKey k{text.substr(0, slash), std::stoi(text.substr(slash + 1))};
    if (!p.find(k)) throw Error(ErrorKind::Input, "no predicate " + k.str());
    return k;
  }
  if (p.entry_points().empty())
    throw Error(ErrorKind::Input, "program declares no entry point; use --entry");
  return p.entry_points().front();
}

std::string fmt(double x, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

// ------------------------------------------------------------- analyze

int cmd_analyze(const Config& c, std::ostream& out, std::ostream& err) {
  check_format(c);
  auto p = load_program(c.program, err);
  auto session = analysis::Analyzer::create(p);
  auto bound = c.upper ? analysis::Bound::Upper : analysis::Bound::Exact;
  std::ostringstream text;
  for (const auto& entry : p.entry_points()) {
    CostModel model = c.models.empty()
                          ? predict::with_builtins(CostModel::all_head(), p, entry)
                          : CostModel::parse(c.models.front());
    auto fs = session->predicate_cost(entry, model, bound);
    if (c.format == "table") {
      text << analysis::export_costs(fs);
    } else {
      for (const auto& f : fs) {
        nlohmann::json j{{"pred", f.pred().str()},
                         {"metric", f.quantity().str()},
                         {"cost", f.str()},
                         {"domain", f.domain()},
                         {"form", f.form() == analysis::CostFunction::Form::Closed ? "closed"
                                                                                   : "evaluator"}};
        text << j.dump() << "\n";
      }
    }
  }
  emit(c, text.str(), out);
  return 0;
}

// ----------------------------------------------------------- calibrate

int cmd_calibrate(const Config& c, std::ostream& out, std::ostream& err) {
  check_format(c);
  std::vector<CostModel> models;
  for (const auto& m : c.models) models.push_back(CostModel::parse(m));
  if (models.empty()) models = CostModel::standard_models();
  for (const auto& m : models)
    for (const auto& x : m.components())
      if (!x.is_head_metric())
        throw Error(ErrorKind::Input, "--model: " + x.str() +
                                          " is measured separately, not fitted; use head metrics");

  std::vector<calibrate::CalibrationProgram> suite;
  if (c.programs.empty()) {
    suite = calibrate::builtin_calibration_suite();
  } else {
    std::stringstream ss(c.programs);
    std::string id;
    while (std::getline(ss, id, ',')) {
      bool found = false;
      for (const auto& p : calibrate::builtin_calibration_suite())
        if (p.id() == id) {
          suite.push_back(p);
          found = true;
        }
      if (!found) throw Error(ErrorKind::Input, "unknown calibration program " + id);
    }
  }

  calibrate::SampleOptions so;
  for (const auto& v : parse_sizes(c.sizes)) so.sizes.push_back(static_cast<int>(v.at(0)));
  if (c.reps > 0) so.reps = c.reps;
  so.inner_iters = c.inner;
  so.seed = resolve_seed(c, err);
  so.log = [&](const std::string& s) { err << s << "\n"; };

  TimingLock lock;
  auto t0 = std::chrono::steady_clock::now();
  auto samples = calibrate::collect_samples(suite, CostModel::all_head(), so);
  for (const auto& d : samples.diagnostics) err << "warning: " << d << "\n";
  if (!c.samples.empty()) write_text(c.samples, calibrate::to_csv(samples));

  PlatformProfile prof;
  prof.host = calibrate::host_label();
  prof.timestamp = calibrate::utc_timestamp();
  prof.seed = so.seed;
  for (const auto& m : models) {
    try {
      prof.fits.push_back(calibrate::fit_model(samples, m));
    } catch (const Error& e) {
      if (models.size() == 1) throw;
      err << "warning: model {" << m.signature() << "} not fitted: " << e.what() << "\n";
    }
  }
  if (prof.fits.empty()) throw Error(ErrorKind::Numeric, "no model could be fitted");
  prof.calibration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  err << "timing builtins (" << c.builtin_reps << " reps each)\n";
  prof.builtins = calibrate::calibrate_builtins(c.builtin_reps);

  std::string path = c.out.empty() ? "costcal-profile.json" : c.out;
  prof.save(path);
  if (c.format == "records") {
    out << prof.to_json();
  } else {
    out << "host " << prof.host << ", " << samples.m() << " samples, seed " << prof.seed
        << ", calibration " << fmt(prof.calibration_s, 1) << " s\n";
    for (const auto& f : predict::rank_models(prof.fits)) {
      out << "  S=" << std::setw(10) << fmt(f.s) << " ns  {" << f.model.signature() << "}  K =";
      for (double k : f.k) out << " " << fmt(k);
      out << "\n";
      for (const auto& w : f.warnings) out << "    warning: " << w << "\n";
    }
    out << "profile written to " << path << "\n";
  }
  return 0;
}

// ------------------------------------------------------------- predict

const calibrate::ModelFit& choose_fit(const PlatformProfile& prof, const Config& c) {
  if (prof.fits.empty()) throw Error(ErrorKind::Input, c.profile + " contains no fitted model");
  if (c.models.empty()) {
    // Lowest S, preferring fits without warnings.
    const calibrate::ModelFit* best = nullptr;
    for (const auto& f : prof.fits) {
      if (!best) {
        best = &f;
        continue;
      }
      bool fc = f.warnings.empty(), bc = best->warnings.empty();
      if (fc != bc) {
        if (fc) best = &f;
      } else if (f.s < best->s || (f.s == best->s && f.model.size() < best->model.size())) {
        best = &f;
      }
    }
    return *best;
  }
  auto want = CostModel::parse(c.models.front());
  if (const auto* f = prof.find(want)) return *f;
  std::string have;
  for (const auto& f : prof.fits) have += (have.empty() ? "{" : ", {") + f.model.signature() + "}";
  throw Error(ErrorKind::Input, "model mismatch: requested {" + want.signature() + "} but " +
                                    c.profile + " has " + have);
}

int cmd_predict(const Config& c, std::ostream& out, std::ostream& err) {
  check_format(c);
  auto p = load_program(c.program, err);
  auto prof = PlatformProfile::load(c.profile);
  const auto& fit = choose_fit(prof, c);
  auto entry = pick_entry(p, c.entry);
  const auto& decl = p.at(entry).decl;
  CostModel model = c.no_builtins ? fit.model : predict::with_builtins(fit.model, p, entry);
  auto k = prof.constants(model);
  auto costs = analysis::predicate_cost(p, entry, model,
                                        c.upper ? analysis::Bound::Upper : analysis::Bound::Exact);

  std::vector<int> sized;
  for (int i = 0; i < entry.arity; ++i)
    if (decl.modes[i] == lang::Mode::In && decl.measures[i] != lang::Measure::None)
      sized.push_back(i);
  auto points = parse_sizes(c.sizes);
  if (points.empty()) throw Error(ErrorKind::Input, "--sizes is required");

  std::ostringstream text;
  if (c.format == "table")
    text << "# " << entry.str() << " model {" << model.signature() << "}\n"
         << std::left << std::setw(16) << "sizes" << std::right << std::setw(16)
         << "estimate_ns" << "\n";
  for (const auto& pt : points) {
    if (pt.size() != sized.size())
      throw Error(ErrorKind::Input, entry.str() + " has " + std::to_string(sized.size()) +
                                        " sized input argument(s); got " +
                                        std::to_string(pt.size()) + " size(s)");
    std::vector<std::int64_t> sv(static_cast<std::size_t>(entry.arity), 0);
    std::string label;
    for (std::size_t i = 0; i < sized.size(); ++i) {
      sv[static_cast<std::size_t>(sized[i])] = pt[i];
      label += (i ? ":" : "") + std::to_string(pt[i]);
    }
    double est = predict::predict_time(k, costs, sv);
    if (c.format == "table") {
      text << std::left << std::setw(16) << label << std::right << std::setw(16) << fmt(est, 1)
           << "\n";
    } else {
      nlohmann::json j{{"program", c.program},       {"pred", entry.str()},
                       {"model", model.signature()}, {"sizes", sv},
                       {"estimate_ns", est}};
      text << j.dump() << "\n";
    }
  }
  emit(c, text.str(), out);
  return 0;
}

// ------------------------------------------------------------ evaluate

int cmd_evaluate(const Config& c, std::ostream& out, std::ostream& err) {
  check_format(c);
  auto prof = PlatformProfile::load(c.profile);
  std::vector<CostModel> models;
  for (const auto& m : c.models) models.push_back(CostModel::parse(m));
  if (models.empty())
    for (const auto& m : CostModel::standard_models())
      if (prof.find(m)) models.push_back(m);
  if (models.empty()) throw Error(ErrorKind::Input, c.profile + " has none of the standard models");

  predict::Protocol pr;
  pr.inputs = c.inputs;
  if (c.reps > 0) pr.runs = c.reps;
  pr.size = c.size;
  pr.seed = resolve_seed(c, err);
  pr.include_builtins = !c.no_builtins;

  TimingLock lock;
  auto report = predict::evaluate(predict::benchmark_suite(), prof, models, pr);
  if (!c.out.empty()) write_text(c.out, predict::to_json(report) + "\n");
  out << (c.format == "table" ? predict::render_table(report) : predict::to_json(report) + "\n");
  return 0;
}

// ----------------------------------------------------------------- run

int cmd_run(const Config& c, std::ostream& out, std::ostream& err) {
  check_format(c);
  auto p = load_program(c.program, err);
  auto goal = lang::parse_term(c.goal).term;
  vm::Machine m(p);
  auto r = m.solve(goal);
  std::ostringstream text;
  if (c.format == "table") {
    text << (r.success ? "yes" : "no") << "\n";
    for (const auto& [name, t] : r.bindings) text << name << " = " << lang::to_string(t) << "\n";
    for (const auto& [metric, n] : r.counts) text << "  " << metric.str() << " " << n << "\n";
  }
  if (c.reps > 0) {
    TimingLock lock;
    auto tr = vm::profile(p, goal, c.reps, c.inner > 0 ? c.inner : 1);
    std::vector<std::int64_t> sizes;
    if (const auto* pred = p.find(lang::key_of(goal)); pred && pred->decl.has_modes())
      sizes = analysis::input_sizes(goal, pred->decl);
    if (c.format == "table") {
      text << "median " << fmt(tr.median_ns, 1) << " ns, mean " << fmt(tr.mean_ns, 1)
           << " ns over " << tr.reps << " reps x " << tr.inner_iters << "\n";
      for (const auto& d : tr.diagnostics) text << "warning: " << d << "\n";
    } else {
      for (std::size_t i = 0; i < tr.per_exec_ns.size(); ++i) {
        vm::ProfileRecord rec;
        rec.program = c.program;
        rec.sizes = sizes;
        rec.rep = static_cast<int>(i);
        rec.duration_ns = tr.per_exec_ns[i];
        if (i == 0) rec.counts = r.counts;
        text << vm::to_json_line(rec) << "\n";
      }
    }
  } else if (c.format == "records") {
    nlohmann::json counts;
    for (const auto& [metric, n] : r.counts) counts[metric.str()] = n;
    nlohmann::json bindings;
    for (const auto& [name, t] : r.bindings) bindings[name] = lang::to_string(t);
    text << nlohmann::json{{"success", r.success}, {"bindings", bindings}, {"counts", counts}}.dump()
         << "\n";
  }
  emit(c, text.str(), out);
  return r.success ? 0 : 1;
}

}  // namespace

std::vector<std::vector<long long>> parse_sizes(const std::string& text) {
  std::vector<std::vector<long long>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item.back() == ':') throw Error(ErrorKind::Input, "bad size '" + item + "' in --sizes");
    std::vector<long long> v;
    std::stringstream is(item);
    std::string part;
    while (std::getline(is, part, ':')) {
      std::size_t used = 0;
      long long x = 0;
      try {
        x = std::stoll(part, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != part.size() || part.empty() || x < 0)
        throw Error(ErrorKind::Input, "bad size '" + part + "' in --sizes");
      v.push_back(x);
    }
    out.push_back(std::move(v));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Static cost analysis, calibration and execution-time prediction"};
  app.name("costcal");
  app.require_subcommand(1);
  Config c;

  auto formats = CLI::IsMember({"table", "records"});
  auto common = [&](CLI::App* s) {
    s->add_option("--out", c.out, "Output file");
    s->add_option("--format", c.format, "table or records")->check(formats);
  };

  auto* analyze = app.add_subcommand("analyze", "Infer cost functions of a program's entry points");
  analyze->add_option("program", c.program, "Program file")->required();
  analyze->add_option("--model", c.models, "Cost model signature, e.g. step,giunif");
  analyze->add_flag("--upper", c.upper, "Allow upper bounds for non-exclusive clauses");
  common(analyze);

  auto* calib = app.add_subcommand("calibrate", "Fit platform constants and write a profile");
  calib->add_option("--model", c.models, "Model(s) to fit; default: the four standard models");
  calib->add_option("--reps", c.reps, "Timing repetitions per program and size");
  calib->add_option("--sizes", c.sizes, "Input sizes, e.g. 4,8,16");
  calib->add_option("--seed", c.seed, "Data-generation seed");
  calib->add_option("--inner", c.inner, "Executions per timed loop (default: automatic)");
  calib->add_option("--programs", c.programs, "Subset of calibration programs, e.g. trav,deep");
  calib->add_option("--builtin-reps", c.builtin_reps, "Iterations per builtin timing");
  calib->add_option("--samples", c.samples, "Also write the sample matrix as CSV");
  common(calib);

  auto* pred = app.add_subcommand("predict", "Predict execution times from a profile");
  pred->add_option("program", c.program, "Program file")->required();
  pred->add_option("--profile", c.profile, "Platform profile")->required();
  pred->add_option("--sizes", c.sizes, "Input sizes, e.g. 10,20 or 10:3")->required();
  pred->add_option("--model", c.models, "Model signature (default: lowest S among fits without warnings)");
  pred->add_option("--entry", c.entry, "Predicate name/arity (default: first entry)");
  pred->add_flag("--no-builtins", c.no_builtins, "Ignore builtin and operator costs");
  pred->add_flag("--upper", c.upper, "Allow upper bounds");
  common(pred);

  auto* eval = app.add_subcommand("evaluate", "Compare predictions with observed times");
  eval->add_option("--profile", c.profile, "Platform profile")->required();
  eval->add_option("--model", c.models, "Model(s); default: standard models in the profile");
  eval->add_option("--reps", c.reps, "Timed runs per input (default 5)");
  eval->add_option("--inputs", c.inputs, "Random inputs per benchmark");
  eval->add_option("--size", c.size, "Input size for every benchmark (default: per benchmark)");
  eval->add_option("--seed", c.seed, "Data-generation seed");
  eval->add_flag("--no-builtins", c.no_builtins, "Ignore builtin and operator costs");
  common(eval);

  auto* runc = app.add_subcommand("run", "Run a goal and print bindings and event counts");
  runc->add_option("program", c.program, "Program file")->required();
  runc->add_option("goal", c.goal, "Goal, e.g. 'app([1,2],[3],Z)'")->required();
  runc->add_option("--reps", c.reps, "Also time the goal this many times");
  runc->add_option("--inner", c.inner, "Executions per timed loop");
  common(runc);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "costcal: " << e.what() << "\n";
    return 2;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(c, out, err);
    if (calib->parsed()) return cmd_calibrate(c, out, err);
    if (pred->parsed()) return cmd_predict(c, out, err);
    if (eval->parsed()) return cmd_evaluate(c, out, err);
    if (runc->parsed()) return cmd_run(c, out, err);
  } catch (const Error& e) {
    err << "costcal: " << e.what() << "\n";
    return e.kind() == ErrorKind::Input ? 2 : 1;
  } catch (const std::exception& e) {
    err << "costcal: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace costcal::cli
