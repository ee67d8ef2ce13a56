#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "costcal/calibrate/calibrate.hpp"
#include "costcal/calibrate/linalg.hpp"
#include "costcal/calibrate/suite.hpp"
#include "costcal/error.hpp"
#include "costcal/lang/measure.hpp"
#include "files.hpp"

using namespace costcal;
using namespace costcal::calibrate;
using analysis::CostModel;
using analysis::Metric;

namespace {

ErrorKind kind_of(const std::function<void()>& fn, std::string* what = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (what) *what = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Input;
}

Matrix random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-10, 10);
  Matrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

Eigen::MatrixXd to_eigen(const Matrix& a) {
  Eigen::MatrixXd e(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  return e;
}

const CalibrationProgram& program(const std::string& id) {
  for (const auto& p : builtin_calibration_suite())
    if (p.id() == id) return p;
  throw std::runtime_error("no program " + id);
}

// Stacked cost matrix of the suite at default sizes.
SampleMatrix synthetic(const CostModel& model, const std::vector<double>& k_true,
                       double noise, std::uint64_t seed,
                       const std::vector<CalibrationProgram>& suite = builtin_calibration_suite()) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  SampleMatrix s;
  s.model = model;
  for (const auto& p : suite)
    for (int n : default_sizes()) {
      auto row = p.cost_row(model, p.goal(gen_input(p.rule(), n, 1)));
      double t = 0;
      for (std::size_t j = 0; j < row.size(); ++j) t += row[j] * k_true[j];
      s.t.push_back(t * (1 + noise * g(rng)));
      rows.push_back(row);
      s.meta.push_back({p.id(), n, 1});
    }
  s.c = Matrix::from_rows(rows);
  return s;
}

vm::TimingResult fake_time(double ns, bool limited = false) {
  vm::TimingResult r;
  r.samples_ns = {ns};
  r.per_exec_ns = {ns};
  r.median_ns = r.mean_ns = ns;
  r.reps = 1;
  r.inner_iters = 1;
  r.resolution_limited = limited;
  r.success = true;
  return r;
}

}  // namespace

// ------------------------------------------------------------------ QR

TEST(QR, IdentityStaysIdentity) {
  auto qr = householder_qr(Matrix::identity(2));
  EXPECT_EQ(qr.u().max_abs(), 1.0);
  EXPECT_EQ(qr.u()(0, 0), 1.0);
  EXPECT_EQ(qr.u()(1, 1), 1.0);
  EXPECT_EQ(qr.u()(0, 1), 0.0);
  auto x = qr.apply_qt({3.0, -2.0});
  EXPECT_EQ(x, (std::vector<double>{3.0, -2.0}));
}

TEST(QR, SingleColumnNormIsFive) {
  auto qr = householder_qr(Matrix::from_rows({{3}, {4}}));
  EXPECT_NEAR(std::fabs(qr.u()(0, 0)), 5.0, 1e-12);
  EXPECT_NEAR(qr.u()(1, 0), 0.0, 1e-15);
}

TEST(QR, RandomOrthonormalityAndReconstruction) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = random_matrix(50, 6, seed);
    auto qr = householder_qr(c);
    Matrix q = qr.q();
    Matrix qtq = q.transpose() * q;
    EXPECT_LE((qtq - Matrix::identity(50)).max_abs(), 1e-10);
    EXPECT_LE((q * qr.u() - c).max_abs(), 1e-10 * c.max_abs());
    for (std::size_t i = 0; i < 50; ++i)
      for (std::size_t j = 0; j < std::min<std::size_t>(i, 6); ++j) EXPECT_EQ(qr.u()(i, j), 0.0);
    // apply_qt agrees with the explicit factor.
    std::vector<double> t(50);
    for (std::size_t i = 0; i < 50; ++i) t[i] = static_cast<double>(i % 7) - 3;
    auto a = qr.apply_qt(t);
    auto b = q.transpose() * t;
    for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
  }
}

TEST(QR, NeedsTallMatrix) {
  EXPECT_EQ(kind_of([] { householder_qr(Matrix(2, 3)); }), ErrorKind::Numeric);
}

// ------------------------------------------------------- least squares

TEST(LeastSquares, ConsistentSystem) {
  auto c = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  auto k = least_squares(c, {1, 2, 3});
  EXPECT_NEAR(k[0], 1, 1e-12);
  EXPECT_NEAR(k[1], 2, 1e-12);
  auto st = residual_stats(c, {1, 2, 3}, k);
  EXPECT_NEAR(st.rss, 0, 1e-20);
  EXPECT_NEAR(st.s, 0, 1e-10);
}

TEST(LeastSquares, ConstantRegressorIsMean) {
  auto c = Matrix::from_rows({{1}, {1}});
  auto k = least_squares(c, {2, 4});
  EXPECT_NEAR(k[0], 3, 1e-12);
  auto st = residual_stats(c, {2, 4}, k);
  EXPECT_NEAR(st.rss, 2, 1e-12);
  EXPECT_NEAR(st.mrss, 2, 1e-12);
  EXPECT_NEAR(st.s, std::sqrt(2.0), 1e-12);
}

TEST(LeastSquares, DuplicatedColumnNamesTheColumn) {
  auto c = Matrix::from_rows({{1, 2, 2}, {3, 1, 1}, {0, 5, 5}, {2, 2, 2}});
  std::string what;
  EXPECT_EQ(kind_of([&] { least_squares(c, {1, 2, 3, 4}, {"step", "giunif", "nargs"}); }, &what),
            ErrorKind::Numeric);
  EXPECT_NE(what.find("nargs"), std::string::npos) << what;
  EXPECT_EQ(column_rank(c).rank, 2u);
  EXPECT_EQ(column_rank(c).dependent, (std::vector<std::size_t>{2}));
}

TEST(LeastSquares, Preconditions) {
  EXPECT_EQ(kind_of([] { least_squares(Matrix::identity(2), {1, 2}); }), ErrorKind::Numeric);
  EXPECT_EQ(kind_of([] { least_squares(Matrix(3, 1, 1.0), {1, 2}); }), ErrorKind::Numeric);
  EXPECT_EQ(kind_of([] { residual_stats(Matrix::identity(2), {1, 2}, {1, 2}); }),
            ErrorKind::Numeric);
}

TEST(LeastSquares, AgreesWithEigenOracle) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    auto c = random_matrix(40, 5, seed);
    std::vector<double> t(40);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 5);
    for (auto& x : t) x = g(rng);
    auto k = least_squares(c, t);
    Eigen::VectorXd te = Eigen::Map<Eigen::VectorXd>(t.data(), 40);
    Eigen::VectorXd ke = to_eigen(c).colPivHouseholderQr().solve(te);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(k[j], ke(static_cast<Eigen::Index>(j)), 1e-9);
  }
}

TEST(LeastSquares, NormalEquationsAndOptimality) {
  auto c = random_matrix(60, 6, 99);
  std::vector<double> t(60);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 3);
  for (auto& x : t) x = g(rng);
  auto k = least_squares(c, t);
  auto st = residual_stats(c, t, k);
  // C^T r ~ 0
  auto ctr = c.transpose() * st.r;
  double bound = 1e-8 * c.transpose().max_abs() * norm2(t) * 60;
  for (double x : ctr) EXPECT_LE(std::fabs(x), bound);
  // Any perturbation does no better.
  std::uniform_real_distribution<double> d(-0.1, 0.1);
  double best = norm2(st.r);
  for (int trial = 0; trial < 100; ++trial) {
    auto kk = k;
    for (auto& x : kk) x += d(rng);
    auto ck = c * kk;
    std::vector<double> r(60);
    for (std::size_t i = 0; i < 60; ++i) r[i] = ck[i] - t[i];
    EXPECT_GE(norm2(r), best - 1e-12);
  }
  EXPECT_NEAR(st.s * st.s * (60 - 6), st.rss, 1e-9 * st.rss);
}

TEST(LeastSquares, ScalingTScalesS) {
  auto c = random_matrix(30, 3, 5);
  std::vector<double> t(30);
  for (std::size_t i = 0; i < 30; ++i) t[i] = std::sin(static_cast<double>(i)) * 10;
  auto s1 = residual_stats(c, t, least_squares(c, t)).s;
  for (auto& x : t) x *= 2;
  auto s2 = residual_stats(c, t, least_squares(c, t)).s;
  EXPECT_NEAR(s2, 2 * s1, 1e-9 * s1);
}

// --------------------------------------------------------------- suite

TEST(Suite, HasAtLeastTenProgramsAndFullRank) {
  const auto& suite = builtin_calibration_suite();
  EXPECT_GE(suite.size(), 10u);
  std::vector<std::vector<double>> rows;
  for (const auto& p : suite)
    for (int n = 0; n < 25; ++n)
      rows.push_back(p.cost_row(CostModel::all_head(), p.goal(gen_input(p.rule(), n, 1))));
  EXPECT_EQ(column_rank(Matrix::from_rows(rows)).rank, 6u);
}

TEST(Suite, GounifOnlyProgram) {
  const auto& p = program("gout");
  auto row = p.cost_row(CostModel::all_head(), p.goal(gen_input(p.rule(), 0, 1)));
  // step nargs giunif gounif viunif vounif
  EXPECT_EQ(row[2], 0);
  EXPECT_GT(row[3], 0);
  EXPECT_EQ(row[4], 0);
  EXPECT_EQ(row[5], 0);
}

TEST(Suite, NullaryChainProgram) {
  const auto& p = program("nullary");
  auto row = p.cost_row(CostModel::all_head(), p.goal(gen_input(p.rule(), 0, 1)));
  EXPECT_EQ(row, (std::vector<double>{63, 0, 0, 0, 0, 0}));
}

TEST(Suite, CostsAreExactAndMatchTheMachine) {
  for (const auto& p : builtin_calibration_suite()) {
    SCOPED_TRACE(p.id());
    vm::Machine m(p.program());
    for (int n : {0, 1, 5, 17}) {
      auto g = p.goal(gen_input(p.rule(), n, 3));
      auto r = m.solve(g);
      ASSERT_TRUE(r.success);
      auto row = p.cost_row(CostModel::all_head(), g);
      for (std::size_t j = 0; j < 6; ++j)
        EXPECT_EQ(row[j], static_cast<double>(r.counts.at(CostModel::all_head()[j])));
    }
  }
}

TEST(Suite, EmbeddedSourcesMatchFiles) {
  for (const auto& s : calibration_sources())
    EXPECT_EQ(std::string(s.text),
              costcal::testing::read_file(std::string("programs/calibration/") + s.id + ".pl"))
        << s.id;
}

TEST(Suite, RankCheckNamesDependentColumns) {
  // trav and deep alone: nargs == step on every row.
  std::vector<CalibrationProgram> two = {program("trav"), program("deep")};
  std::string what;
  EXPECT_EQ(kind_of([&] { check_suite_rank(two, CostModel::all_head()); }, &what),
            ErrorKind::Numeric);
  EXPECT_NE(what.find("nargs"), std::string::npos) << what;
}

// ------------------------------------------------------------ gen_input

TEST(GenInput, ListContract) {
  DataRule r{DataKind::IntList, 0};
  auto t = gen_input(r, 3, 42);
  EXPECT_EQ(lang::measure(t, lang::Measure::ListLength), 3);
  for (const auto* x = &t; x->is_cons(); x = &x->arg(1)) {
    ASSERT_TRUE(x->arg(0).is_int());
    EXPECT_GE(x->arg(0).as_int(), 0);
    EXPECT_LE(x->arg(0).as_int(), 9);
  }
  EXPECT_TRUE(gen_input(r, 0, 42).is_nil());
  EXPECT_EQ(gen_input(r, 7, 5), gen_input(r, 7, 5));
  EXPECT_NE(gen_input(r, 30, 5), gen_input(r, 30, 6));
}

TEST(GenInput, OtherRules) {
  EXPECT_EQ(gen_input({DataKind::Nat, 1}, 9, 1), lang::Term::integer(9));
  EXPECT_EQ(lang::measure(gen_input({DataKind::DeepList, 0}, 4, 1), lang::Measure::ListLength), 4);
  EXPECT_EQ(gen_input({DataKind::Unit, 0}, 4, 1), lang::Term::atom("unit"));
  EXPECT_EQ(parse_data_kind("deep_list"), DataKind::DeepList);
  EXPECT_EQ(kind_of([] { gen_input({DataKind::IntList, 0}, -1, 1); }), ErrorKind::Input);
}

TEST(GenInput, MeasuredSizeEqualsN) {
  for (const auto& p : builtin_calibration_suite()) {
    if (p.rule().kind == DataKind::Unit) continue;
    for (int n : {0, 3, 11}) {
      auto s = p.sizes(p.goal(gen_input(p.rule(), n, 9)));
      EXPECT_EQ(s.at(0), n) << p.id();
    }
  }
}

// ------------------------------------------------------------- samples

TEST(Samples, ShapeWithFakeTimer) {
  SampleOptions o;
  o.timer = [](const lang::Program&, const lang::Term&, int, int) { return fake_time(100); };
  auto s = collect_samples(builtin_calibration_suite(), CostModel::all_head(), o);
  EXPECT_EQ(s.m(), builtin_calibration_suite().size() * 25);
  EXPECT_EQ(s.v(), 6u);
  for (std::size_t i = 0; i < s.m(); ++i)
    for (std::size_t j = 0; j < s.v(); ++j) EXPECT_GE(s.c(i, j), 0);
}

TEST(Samples, StepOnlyIsProjection) {
  SampleOptions o;
  o.timer = [](const lang::Program&, const lang::Term&, int, int) { return fake_time(100); };
  auto full = collect_samples(builtin_calibration_suite(), CostModel::all_head(), o);
  auto step = collect_samples(builtin_calibration_suite(), CostModel::step_only(), o);
  ASSERT_EQ(step.v(), 1u);
  ASSERT_EQ(step.m(), full.m());
  for (std::size_t i = 0; i < step.m(); ++i) EXPECT_EQ(step.c(i, 0), full.c(i, 0));
  auto proj = full.project(CostModel::step_only());
  for (std::size_t i = 0; i < step.m(); ++i) EXPECT_EQ(proj.c(i, 0), step.c(i, 0));
}

TEST(Samples, AllRowsDroppedIsAnError) {
  SampleOptions o;
  o.timer = [](const lang::Program&, const lang::Term&, int, int) { return fake_time(1, true); };
  EXPECT_EQ(kind_of([&] { collect_samples(builtin_calibration_suite(), CostModel::all_head(), o); }),
            ErrorKind::Numeric);
}

TEST(Samples, SomeRowsDroppedAreReported) {
  SampleOptions o;
  int calls = 0;
  o.inner_iters = 1;
  o.timer = [&](const lang::Program&, const lang::Term&, int, int) {
    return fake_time(50, ++calls % 10 == 0);
  };
  auto s = collect_samples(builtin_calibration_suite(), CostModel::all_head(), o);
  EXPECT_GT(s.dropped, 0);
  EXPECT_EQ(s.m() + static_cast<std::size_t>(s.dropped), builtin_calibration_suite().size() * 25);
  EXPECT_EQ(s.diagnostics.size(), static_cast<std::size_t>(s.dropped));
}

TEST(Samples, RealTimingSmallRun) {
  SampleOptions o;
  o.sizes = {10, 20, 30};
  o.reps = 3;
  o.min_loop_ns = 5000;
  auto s = collect_samples(builtin_calibration_suite(), CostModel::all_head(), o);
  EXPECT_GT(s.m(), 6u);
  for (double t : s.t) EXPECT_GE(t, 0);
}

TEST(Samples, CsvRoundTrip) {
  SampleMatrix s;
  s.model = CostModel::parse("step,giunif,builtin(is/2)");
  s.c = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  s.t = {10.5, 20.25};
  auto text = to_csv(s);
  EXPECT_EQ(text.substr(0, text.find('\n')), "step,giunif,builtin(is/2),duration_ns");
  auto back = from_csv(text);
  EXPECT_EQ(back.model, s.model);
  EXPECT_EQ(back.t, s.t);
  EXPECT_EQ(back.c(1, 2), 6);
  EXPECT_EQ(kind_of([] { from_csv("a,b\n1,2\n"); }), ErrorKind::Input);
}

// ----------------------------------------------------------------- fit

TEST(Fit, NoiselessRecovery) {
  std::vector<double> k_true{20, 10, 10, 8, 6, 6};
  auto s = synthetic(CostModel::all_head(), k_true, 0.0, 1);
  auto f = fit_model(s, CostModel::all_head());
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(f.k[j], k_true[j], 1e-9 * k_true[j]);
  EXPECT_NEAR(f.s, 0, 1e-6);
  EXPECT_EQ(f.m, s.m());
  EXPECT_EQ(f.v, 6u);
  for (const auto& w : f.warnings) EXPECT_NE(w.find("collinear"), std::string::npos) << w;
}

TEST(Fit, CollinearityDiagnostics) {
  auto s = synthetic(CostModel::all_head(), {20, 10, 10, 8, 6, 6}, 0.01, 7);
  auto five = fit_model(s, CostModel::no_nargs());
  EXPECT_TRUE(five.warnings.empty());
  for (double v : five.vif) EXPECT_LT(v, 10);
  auto six = fit_model(s, CostModel::all_head());
  ASSERT_EQ(six.vif.size(), 6u);
  EXPECT_GT(six.vif[1], 10);
  bool named = false;
  for (const auto& w : six.warnings) named |= w.find("nargs is nearly collinear") == 0;
  EXPECT_TRUE(named);
  // Every VIF is at least 1 (uncentered R^2 lies in [0, 1]).
  for (double v : six.vif) EXPECT_GE(v, 1 - 1e-9);
}

TEST(Fit, StandardErrorsMatchEigen) {
  auto s = synthetic(CostModel::no_nargs(), {20, 10, 8, 6, 6}, 0.01, 3);
  auto f = fit_model(s, CostModel::no_nargs());
  Eigen::MatrixXd c(s.m(), s.v());
  for (std::size_t i = 0; i < s.m(); ++i)
    for (std::size_t j = 0; j < s.v(); ++j) c(i, j) = s.c(i, j);
  Eigen::MatrixXd inv = (c.transpose() * c).inverse();
  for (std::size_t j = 0; j < s.v(); ++j)
    EXPECT_NEAR(f.std_err[j], f.s * std::sqrt(inv(j, j)), 1e-6 * f.std_err[j]);
}

TEST(Fit, NoisyRecoveryWithinFivePercent) {
  std::vector<double> k_true{20, 10, 10, 8, 6, 6};
  auto s = synthetic(CostModel::all_head(), k_true, 0.01, 2024);
  ASSERT_GE(s.m(), 200u);
  auto f = fit_model(s, CostModel::all_head());
  for (std::size_t j = 0; j < 6; ++j)
    EXPECT_NEAR(f.k[j], k_true[j], 0.05 * k_true[j]) << CostModel::all_head()[j].str();
  EXPECT_NEAR(f.s * f.s * static_cast<double>(f.m - f.v), f.rss, 1e-9 * f.rss);
}

TEST(Fit, RedundantNargsSurfaces) {
  // On trav/deep rows nargs equals step, so it cannot be separated.
  std::vector<CalibrationProgram> two = {program("trav"), program("deep")};
  auto s = synthetic(CostModel::all_head(), {20, 0, 10, 0, 0, 0}, 0.0, 1, two);
  std::string what;
  EXPECT_EQ(kind_of([&] { fit_model(s, CostModel::parse("step,nargs,giunif")); }, &what),
            ErrorKind::Numeric);
  EXPECT_NE(what.find("nargs"), std::string::npos);
}

TEST(Fit, NegativeConstantWarns) {
  auto s = synthetic(CostModel::all_head(), {20, -3, 10, 8, 6, 6}, 0.0, 1);
  auto f = fit_model(s, CostModel::all_head());
  int negative = 0;
  for (const auto& w : f.warnings)
    if (w.find("negative constant for nargs") == 0) ++negative;
  EXPECT_EQ(negative, 1);
}

TEST(Fit, BuiltinComponentsAreNotFitted) {
  auto s = synthetic(CostModel::all_head(), {1, 1, 1, 1, 1, 1}, 0.0, 1);
  EXPECT_EQ(kind_of([&] { fit_model(s, CostModel::parse("step,builtin(is/2)")); }),
            ErrorKind::Input);
}

// ------------------------------------------------------------ builtins

TEST(Builtins, ConstantsForRequiredKeys) {
  auto k = calibrate_builtins(100000, {"+/2", "*/2", "is/2", "=:=/2", ">/2"});
  for (const char* key : {"+/2", "*/2", "is/2", "=:=/2", ">/2"}) {
    ASSERT_TRUE(k.count(key)) << key;
    EXPECT_GT(k[key], 0) << key;
  }
  EXPECT_EQ(kind_of([] { calibrate_builtins(10); }), ErrorKind::Input);
}

TEST(Builtins, RepeatedCalibrationIsStable) {
  // Smoke check: on a busy machine this is reported rather than failed.
  double a = calibrate_builtins(100000, {"is/2"}).at("is/2");
  double b = calibrate_builtins(100000, {"is/2"}).at("is/2");
  double ratio = std::max(a, b) / std::min(a, b);
  RecordProperty("is2_ratio", std::to_string(ratio));
  if (ratio > 3) GTEST_SKIP() << "unstable timing environment, ratio " << ratio;
}

// ------------------------------------------------------------- profile

TEST(Profile, JsonRoundTripAndMerge) {
  PlatformProfile p;
  p.host = "h";
  p.timestamp = "2026-01-01T00:00:00Z";
  ModelFit f;
  f.model = CostModel::parse("step,giunif");
  f.k = {26.5, 10.8};
  f.m = 250;
  f.v = 2;
  f.s = 3.5;
  p.fits.push_back(f);
  p.builtins = {{"is/2", 12.0}, {"+/2", 3.0}};
  auto back = PlatformProfile::from_json(p.to_json());
  ASSERT_EQ(back.fits.size(), 1u);
  EXPECT_EQ(back.fits[0].model, f.model);
  EXPECT_EQ(back.fits[0].k, f.k);
  EXPECT_EQ(back.fits[0].m, 250u);
  EXPECT_EQ(back.builtins, p.builtins);

  auto k = back.constants(CostModel::parse("step,builtin(is/2),giunif,arith(+/2)"));
  EXPECT_EQ(k, (std::vector<double>{26.5, 12.0, 10.8, 3.0}));
  EXPECT_EQ(kind_of([&] { back.constants(CostModel::parse("step")); }), ErrorKind::Input);
  EXPECT_EQ(kind_of([&] { back.constants(CostModel::parse("step,giunif,arith(*/2)")); }),
            ErrorKind::Input);
  EXPECT_EQ(kind_of([] { PlatformProfile::from_json("{]"); }), ErrorKind::Input);
}
