// Acceptance checks: one PASS/FAIL/SKIP line per criterion.
// Usage: dpm_acceptance [criterion ...]   (default: all)
// Criterion 11 runs only with DPM_ACCEPTANCE_NIGHTLY=1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "dpm/runner.hpp"
#include "oracles.hpp"

using namespace dpm;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rate(double coarse_err, double fine_err) { return std::log2(coarse_err / fine_err); }

bool within_rel(double value, double target, double tol) {
  return std::abs(value - target) <= tol * std::abs(target);
}

// ---------------------------------------------------------------------------
// Fixed-step Test A runs to t = 1e-6, shared by the spatial criteria.

struct FinalState {
  GridSpec grid;
  PointClassification pc;
  GridField rho, c;
  std::vector<double> max_series;
  double dt = 0.0;
  double wall = 0.0;
  std::string cause;
};

RunConfig test_a_fixed(Partition mode, int n, int n1, int n2, double dt, double t_final) {
  RunConfig cfg;
  cfg.test = TestCase::A;
  cfg.mode = mode;
  cfg.n = n;
  cfg.n1 = n1;
  cfg.n2 = n2;
  cfg.dt_fixed = dt;
  cfg.t_final = t_final;
  return cfg;
}

// Keeps subdomain 0 fields (the whole domain in SD, the inner ball in DD).
FinalState run_and_keep(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Simulation sim(cfg);
  FinalState out;
  const auto rep = sim.run();
  out.cause = rep.cause;
  for (const auto& r : rep.records) out.max_series.push_back(r.max_rho);
  out.dt = rep.records.empty() ? 0.0 : rep.records.back().dt;
  out.grid = sim.setup().grid(0);
  out.pc = sim.setup().points(0);
  out.rho = std::move(sim.state().fields[0].rho);
  out.c = std::move(sim.state().fields[0].c);
  out.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  [run] %s %s n=%d n1=%d n2=%d: %s after %zu steps, %.1fs\n", test_name(cfg.test),
              partition_name(cfg.mode), cfg.n, cfg.n1, cfg.n2, rep.cause.c_str(), rep.records.size(),
              out.wall);
  std::fflush(stdout);
  return out;
}

std::map<std::string, FinalState> g_runs;

const FinalState& cached(const std::string& key, const RunConfig& cfg) {
  auto it = g_runs.find(key);
  if (it == g_runs.end()) it = g_runs.emplace(key, run_and_keep(cfg)).first;
  return it->second;
}

constexpr double kSpaceDt = 1e-8;
constexpr double kSpaceT = 1e-6;
constexpr int kRefN = 260;
const int kSpaceN[] = {36, 68, 132};
const int kDdN1[] = {20, 36, 68};  // inner-ball meshes with h1 equal to the SD h

const FinalState& sd_space(int n) {
  return cached("sd" + std::to_string(n), test_a_fixed(Partition::single, n, 0, 0, kSpaceDt, kSpaceT));
}
const FinalState& dd_space(int n1) {
  return cached("dd" + std::to_string(n1),
                test_a_fixed(Partition::concentric, 36, n1, n1, kSpaceDt, kSpaceT));
}

Outcome spatial(bool for_rho) {
  const double expected_rho[] = {1.4046e+00, 3.6990e-01, 1.2224e-01};
  const double expected_c[] = {5.6759e+00, 1.4766e+00, 3.5615e-01};
  const double* expected = for_rho ? expected_rho : expected_c;
  const auto& ref = sd_space(kRefN);
  double err[3];
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const auto& run = sd_space(kSpaceN[k]);
    err[k] = for_rho ? error_inf(run.rho, run.grid, run.pc, ref.rho, ref.grid, ref.pc)
                     : error_inf(run.c, run.grid, run.pc, ref.c, ref.grid, ref.pc);
    const bool mag = within_rel(err[k], expected[k], 0.25);
    ok = ok && mag;
    detail += fmt("N=%d E=%.4e (expected %.4e%s)", kSpaceN[k], err[k], expected[k], mag ? "" : " off");
    if (k > 0) {
      const double r = rate(err[k - 1], err[k]);
      const bool rok = r >= 1.5 && r <= 2.5;
      ok = ok && rok;
      detail += fmt(" rate %.2f%s", r, rok ? "" : " off");
    }
    detail += k < 2 ? "; " : "";
  }
  return {ok ? Status::pass : Status::fail, detail};
}

Outcome criterion1() { return spatial(true); }
Outcome criterion2() { return spatial(false); }

Outcome criterion3() {
  const double expected[] = {1.0196e-01, 2.6378e-02, 6.3461e-03};
  const auto& ref = sd_space(kRefN);
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const auto& sd = sd_space(kSpaceN[k]);
    const auto& dd = dd_space(kDdN1[k]);
    const double e_sd = error_rel_timeseries(sd.max_series, ref.max_series, kSpaceDt);
    const double e_dd = error_rel_timeseries(dd.max_series, ref.max_series, kSpaceDt);
    const double agree = std::abs(e_sd - e_dd) / e_sd;
    const bool good = agree <= 1e-6 && within_rel(e_sd, expected[k], 0.25);
    ok = ok && good;
    detail += fmt("N=%d SD %.4e DD %.4e (diff %.1e, expected %.4e)%s", kSpaceN[k], e_sd, e_dd, agree,
                  expected[k], k < 2 ? "; " : "");
  }
  return {ok ? Status::pass : Status::fail, detail};
}

Outcome criterion4() {
  const int n = 63;
  const int taus[] = {16, 32, 64, 128};
  const auto& ref = cached("time512", test_a_fixed(Partition::single, n, 0, 0, 1e-7 / 512, 1e-6));
  double er[4], ec[4];
  for (int k = 0; k < 4; ++k) {
    const auto& run = cached("time" + std::to_string(taus[k]),
                             test_a_fixed(Partition::single, n, 0, 0, 1e-7 / taus[k], 1e-6));
    er[k] = error_time(run.rho, ref.rho, ref.pc);
    ec[k] = error_time(run.c, ref.c, ref.pc);
    g_runs.erase("time" + std::to_string(taus[k]));
  }
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 4; ++k) {
    detail += fmt("tau=%d E_rho=%.4e E_c=%.4e", taus[k], er[k], ec[k]);
    if (k > 0) {
      const double rr = rate(er[k - 1], er[k]), rc = rate(ec[k - 1], ec[k]);
      const bool good = rr >= 0.8 && rr <= 1.8 && rc >= 0.8 && rc <= 1.8;
      ok = ok && good;
      detail += fmt(" rates %.2f/%.2f%s", rr, rc, good ? "" : " off");
    }
    detail += k < 3 ? "; " : "";
  }
  g_runs.erase("time512");
  return {ok ? Status::pass : Status::fail, detail};
}

// ---------------------------------------------------------------------------
// Positivity and blow-up runs with the default step policy.

struct PositivityLog {
  std::string label;
  long steps = 0;
  double min_field = INFINITY;     // after the clamp, over N+ of every subdomain
  double min_interior = INFINITY;  // before the clamp, over M+
  double min_f_rho = INFINITY;
  double max_rho = 0.0;
  double max_clamp_ratio = 0.0;
  std::string cause;
  double t = 0.0;
};

std::vector<PositivityLog> g_positivity;

struct BlowUpRun {
  RunReport report;
  Vec3 argmax;
  double h_at_argmax = 0.0;
  std::vector<double> free_energy;
};

BlowUpRun run_tracked(const RunConfig& cfg, const std::string& label) {
  const auto t0 = std::chrono::steady_clock::now();
  Simulation sim(cfg);
  PositivityLog log;
  log.label = label;
  BlowUpRun out;
  auto observe = [&](const Simulation& s, const TimeSeriesRecord& rec) {
    ++log.steps;
    for (std::size_t k = 0; k < s.setup().count(); ++k)
      for (Index i : s.setup().points(k).n_plus)
        log.min_field = std::min({log.min_field, s.state().fields[k].rho[i], s.state().fields[k].c[i]});
    const auto& st = s.last_step();
    log.min_interior = std::min({log.min_interior, st.min_rho_interior, st.min_c_interior});
    log.min_f_rho = std::min(log.min_f_rho, st.min_f_rho);
    log.max_rho = std::max(log.max_rho, rec.max_rho);
    log.max_clamp_ratio = std::max(log.max_clamp_ratio, rec.clamp / rec.max_rho);
    out.free_energy.push_back(rec.free_energy);
  };
  out.report = sim.run(observe);
  log.cause = out.report.cause;
  log.t = out.report.t;
  double best = -INFINITY;
  for (std::size_t k = 0; k < sim.setup().count(); ++k) {
    const auto& g = sim.setup().grid(k);
    for (Index i : sim.setup().points(k).m_plus)
      if (sim.state().fields[k].rho[i] > best) {
        best = sim.state().fields[k].rho[i];
        out.argmax = g.position(i);
        out.h_at_argmax = g.h;
      }
  }
  g_positivity.push_back(log);
  std::printf("  [run] %s: %s at t=%.6e after %ld steps (%d rebuilds), %.1fs%s%s\n", label.c_str(),
              log.cause.c_str(), log.t, log.steps, out.report.refactorizations,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
              out.report.message.empty() ? "" : ": ", out.report.message.c_str());
  std::fflush(stdout);
  return out;
}

RunConfig blowup_config(TestCase test, Partition mode, int n, int n1, int n2, double t_final) {
  RunConfig cfg;
  cfg.test = test;
  cfg.mode = mode;
  cfg.n = n;
  cfg.n1 = n1;
  cfg.n2 = n2;
  cfg.t_final = t_final;
  return cfg;
}

std::optional<BlowUpRun> g_c10;

const BlowUpRun& c10_run() {
  if (!g_c10)
    g_c10 = run_tracked(blowup_config(TestCase::A, Partition::concentric, 0, 127, 63, 1e-3),
                        "A dd-case1 127/63");
  return *g_c10;
}

Outcome criterion5() {
  run_tracked(blowup_config(TestCase::A, Partition::single, 36, 0, 0, 1e-3), "A sd 36");
  run_tracked(blowup_config(TestCase::A, Partition::single, 63, 0, 0, 1e-3), "A sd 63");
  run_tracked(blowup_config(TestCase::A, Partition::single, 127, 0, 0, 1e-3), "A sd 127");
  c10_run();
  run_tracked(blowup_config(TestCase::B, Partition::single, 36, 0, 0, 0.1), "B sd 36");
  run_tracked(blowup_config(TestCase::B, Partition::single, 63, 0, 0, 0.1), "B sd 63");
  run_tracked(blowup_config(TestCase::B, Partition::wedge, 0, 63, 63, 0.1), "B dd-case2 63/63");
  bool ok = true;
  std::string detail;
  for (const auto& p : g_positivity) {
    // Pre-clamp M+ values may carry transform round-off where the solution is ~0.
    const double tol = 1e-10 * p.max_rho;
    const bool good = p.cause != "error" && p.min_field >= 0.0 && p.min_interior >= -tol &&
                      p.min_f_rho >= -tol;
    ok = ok && good;
    detail += fmt("%s: %ld steps, min %.2e, M+ pre-clamp %.2e, min f %.2e, clamp/max %.1e%s; ",
                  p.label.c_str(), p.steps, p.min_field, p.min_interior, p.min_f_rho,
                  p.max_clamp_ratio, good ? "" : " VIOLATED");
  }
  return {ok ? Status::pass : Status::fail, detail};
}

// ---------------------------------------------------------------------------
// Boundary-equation oracles on small grids.

struct SmallProblem {
  GridSpec grid;
  PointClassification pc;
  std::shared_ptr<const SolverPlan> plan;
};

SmallProblem small_problem(int n, double dt) {
  SmallProblem p;
  p.grid = build_grid(0.5, n);
  p.pc = classify_points(p.grid, Sphere{{}, 0.5});
  p.plan = std::make_shared<SolverPlan>(n, p.grid.h, dt);
  return p;
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  std::string detail;
  for (int n : {8, 10, 12})
    for (double dt : {1e-4, 1e-2}) {
      const auto p = small_problem(n, dt);
      for (int trial = 0; trial < 5; ++trial) {
        const GridField f = oracle::random_field(p.grid, p.pc.m_plus, rng);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> ex(p.pc.gamma_ex.size());
        for (double& v : ex) v = u(rng);
        const GridField dense = oracle::constrained_solve(p.grid, p.pc, dt, f, ex);
        const auto u_gamma = trace(dense, p.pc.gamma);
        const GridField green = greens_formula(*p.plan, p.grid, u_gamma, f, p.pc);
        for (Index i : p.pc.m_plus) worst = std::max(worst, std::abs(green[i] - dense[i]));
      }
    }
  return {worst <= 1e-9 ? Status::pass : Status::fail,
          fmt("max |Green - dense| on M+ over 30 trials, N in {8,10,12}: %.2e (tol 1e-9)", worst)};
}

Outcome criterion7() {
  bool ok = true;
  std::string detail;
  for (int n : {10, 12}) {
    const auto p = small_problem(n, 1e-3);
    const Eigen::MatrixXd P = oracle::projection_matrix(*p.plan, p.grid, p.pc);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - P;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    const double thr = 1e-8 * s(0);
    const long rank = (s.array() > thr).count();
    const bool good = rank == static_cast<long>(p.pc.gamma_in.size());
    ok = ok && good;
    detail += fmt("N=%d: rank %ld, |gamma_in| %zu, |gamma| %zu; ", n, rank, p.pc.gamma_in.size(),
                  p.pc.gamma.size());
  }
  return {ok ? Status::pass : Status::fail, detail};
}

Outcome criterion8() {
  std::mt19937_64 rng(8);
  double worst = 0.0, worst_in = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = trial % 2 == 0 ? 10 : 12;
    const double dt = trial % 4 < 2 ? 1e-3 : 1e-2;
    const auto p = small_problem(n, dt);
    const Eigen::MatrixXd P = oracle::projection_matrix(*p.plan, p.grid, p.pc);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - P;
    const GridField f = oracle::random_field(p.grid, p.pc.m_plus, rng);
    const GridField gf = particular_solution(*p.plan, p.grid, f, p.pc);
    std::vector<Eigen::Index> in, ex;
    for (std::size_t g = 0; g < p.pc.gamma.size(); ++g)
      (p.pc.has(p.pc.gamma[g], kMPlus) ? in : ex).push_back(static_cast<Eigen::Index>(g));
    // Random gamma_ex data; gamma_in values from the reduced equations alone.
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd dens(P.rows());
    for (auto g : ex) dens(g) = u(rng);
    Eigen::MatrixXd Aii(in.size(), in.size());
    Eigen::VectorXd b(in.size());
    for (std::size_t r = 0; r < in.size(); ++r) {
      b(r) = gf[p.pc.gamma[in[r]]];
      for (auto g : ex) b(r) -= A(in[r], g) * dens(g);
      for (std::size_t c = 0; c < in.size(); ++c) Aii(r, c) = A(in[r], in[c]);
    }
    const Eigen::VectorXd x = Aii.fullPivLu().solve(b);
    for (std::size_t c = 0; c < in.size(); ++c) dens(in[c]) = x(c);
    Eigen::VectorXd g_gamma(P.rows());
    for (Eigen::Index g = 0; g < P.rows(); ++g) g_gamma(g) = gf[p.pc.gamma[g]];
    const Eigen::VectorXd res = A * dens - g_gamma;
    for (auto g : in) worst_in = std::max(worst_in, std::abs(res(g)));
    for (auto g : ex) worst = std::max(worst, std::abs(res(g)));
  }
  return {worst <= 1e-9 && worst_in <= 1e-9 ? Status::pass : Status::fail,
          fmt("20 trials: gamma_in residual %.2e, gamma_ex residual %.2e (tol 1e-9)", worst_in, worst)};
}

// ---------------------------------------------------------------------------

Outcome criterion9() {
  const auto run = run_tracked(blowup_config(TestCase::A, Partition::concentric, 0, 63, 31, 1e-3),
                               "A dd-case1 63/31");
  // The step that trips the stoppage test is excluded: the solution is no longer resolved there.
  auto e = run.free_energy;
  if (run.report.cause == "blow_up" && !e.empty()) e.pop_back();
  if (e.size() < 2) return {Status::fail, "too few steps"};
  long good = 0, total = 0;
  for (std::size_t i = 0; i + 1 < e.size(); ++i, ++total)
    if (e[i + 1] <= e[i] + 1e-9 * std::abs(e[i])) ++good;
  const double frac = static_cast<double>(good) / total;
  return {frac >= 0.99 ? Status::pass : Status::fail,
          fmt("%ld of %ld steps non-increasing (%.2f%%), E from %.6e to %.6e, stop %s at t=%.4e", good,
              total, 100.0 * frac, e.front(), e.back(), run.report.cause.c_str(), run.report.t)};
}

Outcome criterion10() {
  const auto& run = c10_run();
  const auto& r = run.report;
  const bool ok = r.cause == "blow_up" && r.t_at_stop >= 4e-5 && r.t_at_stop <= 8e-5;
  return {ok ? Status::pass : Status::fail,
          fmt("cause %s, stoppage between t=%.6e and t=%.6e (window [4e-5, 8e-5])", r.cause.c_str(),
              r.t_before_stop, r.t_at_stop)};
}

Outcome criterion11() {
  const char* env = std::getenv("DPM_ACCEPTANCE_NIGHTLY");
  if (!env || std::string(env) != "1")
    return {Status::skip, "long run; set DPM_ACCEPTANCE_NIGHTLY=1"};
  auto cfg = blowup_config(TestCase::B, Partition::wedge, 0, 127, 127, 0.2);
  cfg.harmonics = 299;
  const auto run = run_tracked(cfg, "B dd-case2 127/127");
  const auto& r = run.report;
  const Vec3 pole{0.0, 0.0, 0.5};
  const double dist = (run.argmax - pole).norm();
  const bool ok = r.cause == "blow_up" && r.t_at_stop >= 0.075 && r.t_at_stop <= 0.085 &&
                  dist <= 3.0 * run.h_at_argmax;
  return {ok ? Status::pass : Status::fail,
          fmt("cause %s, stoppage between t=%.6e and t=%.6e, argmax %.3e from the pole (3h = %.3e)",
              r.cause.c_str(), r.t_before_stop, r.t_at_stop, dist, 3.0 * run.h_at_argmax)};
}

Outcome criterion12() {
  double worst = 0.0;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const auto& sd = sd_space(kSpaceN[k]);
    const auto& dd = dd_space(kDdN1[k]);
    if (sd.max_series.size() != dd.max_series.size()) return {Status::fail, "step counts differ"};
    double w = 0.0;
    for (std::size_t i = 0; i < sd.max_series.size(); ++i)
      w = std::max(w, std::abs(sd.max_series[i] - dd.max_series[i]) / std::abs(sd.max_series[i]));
    worst = std::max(worst, w);
    detail += fmt("SD %d vs DD %d/%d: %.2e; ", kSpaceN[k], kDdN1[k], kDdN1[k], w);
  }
  return {worst <= 1e-6 ? Status::pass : Status::fail, detail + "(tol 1e-6)"};
}

Outcome criterion13() {
  // Same step count in both runs; timings include setup and the boundary system build.
  const double dt = 1e-8, t_final = 2e-7;
  g_runs.erase("speed_sd");
  g_runs.erase("speed_dd");
  const double sd = cached("speed_sd", test_a_fixed(Partition::single, 127, 0, 0, dt, t_final)).wall;
  const double dd = cached("speed_dd", test_a_fixed(Partition::concentric, 0, 63, 31, dt, t_final)).wall;
  const double ratio = sd / dd;
  return {ratio > 1.5 ? Status::pass : Status::fail,
          fmt("SD N=127 %.2fs, DD 63/31 %.2fs, ratio %.2f (need > 1.5)", sd, dd, ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"spatial convergence of rho, Test A", criterion1},
      {"spatial convergence of c, Test A", criterion2},
      {"relative max-density error, SD and DD", criterion3},
      {"temporal convergence, N=63", criterion4},
      {"positivity, Tests A and B", criterion5},
      {"Green's formula vs dense constrained solve", criterion6},
      {"rank of I - P_gamma equals |gamma_in|", criterion7},
      {"reduced equations imply the full ones", criterion8},
      {"free energy non-increasing, DD 63/31", criterion9},
      {"blow-up time, Test A DD 127/63", criterion10},
      {"blow-up time and location, Test B DD 127/127", criterion11},
      {"DD and SD max-density traces agree", criterion12},
      {"DD faster than SD at matched inner h", criterion13},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

  int failures = 0, passes = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Status::pass ? "PASS" : (o.status == Status::fail ? "FAIL" : "SKIP");
    if (o.status == Status::fail) ++failures;
    if (o.status == Status::pass) ++passes;
    std::printf("criterion %2d %s  %s  (%.0fs)\n    %s\n", id, tag, criteria[k].first, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  // 77 marks an all-skipped selection for ctest
  if (failures == 0 && passes == 0) return 77;
  return failures == 0 ? 0 : 1;
}
