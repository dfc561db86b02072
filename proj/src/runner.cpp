#include "dpm/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "dpm/parallel.hpp"

namespace dpm {

void RunConfig::validate() const {
  auto fail = [](const char* m) { throw std::invalid_argument(std::string("config: ") + m); };
  if (mode == Partition::single && n < 8) fail("n must be >= 8");
  if (mode != Partition::single && (n1 < 8 || n2 < 8)) fail("n1 and n2 must be >= 8");
  if (!(t_final > 0.0)) fail("t-final must be positive");
  if (!(dt_cap_factor > 0.0)) fail("dt-cap-factor must be positive");
  if (dt_fixed < 0.0) fail("dt must be non-negative");
  if (!(radius > 0.0) || !(inner_radius > 0.0) || inner_radius >= radius) fail("need 0 < inner-radius < radius");
  if (!(chi > 0.0)) fail("chi must be positive");
  if (!(stoppage > 0.0)) fail("stoppage must be positive");
  if (snapshot_every < 0 || max_steps < 0) fail("counts must be non-negative");
  if (beta > 1) fail("beta must be 0 or 1");
}

int RunConfig::resolved_harmonics() const {
  if (harmonics >= 0) return harmonics;
  return test == TestCase::B ? 299 : (test == TestCase::A ? 0 : 4);
}

int RunConfig::resolved_beta() const {
  if (beta >= 0) return beta;
  return test == TestCase::B ? 0 : 1;
}

int RunConfig::resolved_interface_harmonics() const {
  if (interface_harmonics >= 0) return interface_harmonics;
  return test == TestCase::A ? 0 : 19;
}

namespace {

// Distinct zonal arguments among the Gamma rows (slots at M+ points).
std::size_t distinct_boundary_args(const BoundaryLayout& L) {
  std::set<long long> args;
  for (const auto& sub : L.subdomains)
    for (const auto& slot : sub.slots)
      if (slot.piece == 0 && sub.pc.has(sub.pc.gamma[slot.gamma_pos], kMPlus))
        args.insert(std::llround(slot.arg * 1e9));
  return args.size();
}

}  // namespace

SubdomainSetup build_setup(const RunConfig& cfg) {
  cfg.validate();
  SpectralOptions opt;
  opt.boundary_degree = cfg.resolved_harmonics();
  opt.boundary_beta = cfg.resolved_beta();
  opt.interface_degree = cfg.resolved_interface_harmonics();
  opt.wedge_eps = cfg.wedge_eps;
  SubdomainSetup setup;
  switch (cfg.mode) {
    case Partition::single:
      setup = setup_single(cfg.radius, cfg.n, opt);
      break;
    case Partition::concentric:
      setup = setup_case1(cfg.radius, cfg.inner_radius, cfg.n1, cfg.n2, opt);
      break;
    case Partition::wedge:
      setup = setup_case2(cfg.radius, cfg.inner_radius, {0.0, 0.0, cfg.radius}, cfg.n1, cfg.n2, opt);
      break;
  }
  // High Legendre degrees are poorly constrained by the polar arguments present
  // on the rows and oscillate at gamma_ex; keep the default at a fifth of them.
  if (cfg.harmonics < 0 && cfg.test == TestCase::B) {
    auto& piece = setup.layout->pieces[0];
    const int cap = static_cast<int>(distinct_boundary_args(*setup.layout) / 5);
    piece.harmonics = std::clamp(cap, 1, piece.harmonics);
  }
  return setup;
}

Simulation::Simulation(const RunConfig& cfg) : Simulation(cfg, build_setup(cfg)) {}

Simulation::Simulation(const RunConfig& cfg, SubdomainSetup setup)
    : cfg_(cfg), setup_(std::move(setup)), plans_(4) {
  cfg_.validate();
  params_.chi = cfg_.chi;
  params_.validate();
  if (cfg_.threads > 0) set_default_threads(cfg_.threads);
  state_ = init_state(cfg_, setup_);
  stats_.min_rho = stats_.min_c = stats_.min_f_rho = std::numeric_limits<double>::infinity();
  stats_.min_rho_interior = stats_.min_c_interior = stats_.min_rho;
}

double Simulation::next_dt() const {
  const double h = setup_.min_h();
  double dt = cfg_.dt_fixed > 0.0 ? cfg_.dt_fixed : cfg_.dt_cap_factor * h * h;
  if (state_.dt > 0.0) dt = std::min(dt, state_.dt);
  // Halve until the positivity bound holds, so the boundary system is
  // refactored O(log) times rather than at every step of the CFL regime.
  const double cfl = cfl_bound(state_.fields, setup_, params_);
  while (dt > cfl && dt > 0.0) dt *= 0.5;
  return dt;
}

void Simulation::ensure_system(double dt) {
  if (system_ && system_->dt() == dt) return;
  std::vector<std::shared_ptr<const SolverPlan>> plans;
  for (std::size_t s = 0; s < setup_.count(); ++s)
    plans.push_back(plans_.get(setup_.grid(s).cells, setup_.grid(s).h, dt));
  BepOptions opt;
  opt.potential_cache_bytes = cfg_.potential_cache_mb << 20;
  opt.threads = cfg_.threads;
  system_.reset();  // release cached potentials before building new ones
  system_ = std::make_unique<BepSystem>(assemble_coupled_bep(setup_, std::move(plans), opt));
  if (builds_++ > 0) ++refactorizations_;
}

TimeSeriesRecord Simulation::step() {
  const double dt = next_dt();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::runtime_error("non-positive or non-finite time step");
  ensure_system(dt);
  last_ = dd_step(state_.fields, setup_, *system_, params_);
  t_prev_ = state_.t;
  state_.t += dt;
  state_.dt = dt;
  ++state_.step;

  TimeSeriesRecord rec;
  rec.step = state_.step;
  rec.t = state_.t;
  rec.dt = dt;
  rec.max_rho = max_rho();
  rec.second_moment = second_moment();
  rec.free_energy = free_energy();
  rec.bep_residual = last_.bep_residual;
  rec.clamp = last_.clamp;

  stats_.max_clamp = std::max(stats_.max_clamp, last_.clamp);
  stats_.min_rho = std::min(stats_.min_rho, last_.min_rho);
  stats_.min_c = std::min(stats_.min_c, last_.min_c);
  stats_.min_rho_interior = std::min(stats_.min_rho_interior, last_.min_rho_interior);
  stats_.min_c_interior = std::min(stats_.min_c_interior, last_.min_c_interior);
  stats_.min_f_rho = std::min(stats_.min_f_rho, last_.min_f_rho);
  stats_.max_condition = std::max(stats_.max_condition, system_->condition_estimate());

  if (blow_up_check(rec.max_rho, state_.max_rho_prev, cfg_.stoppage)) {
    cause_ = "blow_up";
    stats_.t_before_stop = t_prev_;
    stats_.t_at_stop = state_.t;
  } else if (state_.t >= cfg_.t_final - 1e-9 * dt) {
    cause_ = "t_final";
  } else if (cfg_.max_steps > 0 && state_.step >= cfg_.max_steps) {
    cause_ = "max_steps";
  }
  state_.max_rho_prev = rec.max_rho;
  return rec;
}

double Simulation::max_rho() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < setup_.count(); ++s)
    m = std::max(m, max_density(state_.fields[s].rho, setup_.points(s)));
  return m;
}

double Simulation::second_moment() const {
  double m = 0.0;
  for (std::size_t s = 0; s < setup_.count(); ++s)
    m += dpm::second_moment(state_.fields[s].rho, setup_.grid(s), setup_.points(s));
  return m;
}

double Simulation::free_energy() const {
  double e = 0.0;
  for (std::size_t s = 0; s < setup_.count(); ++s)
    e += dpm::free_energy(state_.fields[s].rho, state_.fields[s].c, setup_.grid(s), setup_.points(s));
  return e;
}

namespace {

void write_snapshots(const Simulation& sim, const std::filesystem::path& dir) {
  char name[96];
  for (std::size_t s = 0; s < sim.setup().count(); ++s) {
    const auto& f = sim.state().fields[s];
    std::snprintf(name, sizeof name, "rho_s%zu_%06ld.dpm3", s + 1, sim.state().step);
    write_snapshot(f.rho, sim.setup().grid(s), sim.state().t, dir / name, "rho");
    std::snprintf(name, sizeof name, "c_s%zu_%06ld.dpm3", s + 1, sim.state().step);
    write_snapshot(f.c, sim.setup().grid(s), sim.state().t, dir / name, "c");
  }
}

}  // namespace

RunReport Simulation::run(const Observer& observer) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ofstream csv;
  std::filesystem::path dir;
  if (!cfg_.out.empty()) {
    dir = cfg_.out;
    std::filesystem::create_directories(dir);
    csv.open(dir / "timeseries.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / "timeseries.csv").string());
    csv << kTimeseriesHeader << '\n';
    if (cfg_.snapshot_every > 0) write_snapshots(*this, dir);
  }
  RunReport rep;
  try {
    while (!finished()) {
      const auto rec = step();
      rep.records.push_back(rec);
      if (csv.is_open()) csv << format_record(rec) << '\n' << std::flush;
      if (!dir.empty() && cfg_.snapshot_every > 0 && state_.step % cfg_.snapshot_every == 0)
        write_snapshots(*this, dir);
      if (observer) observer(*this, rec);
    }
  } catch (const std::exception& e) {
    cause_ = "error";
    rep.message = e.what();
  }
  rep.cause = cause_;
  rep.t = state_.t;
  rep.steps = state_.step;
  rep.refactorizations = refactorizations_;
  rep.max_clamp = stats_.max_clamp;
  rep.min_rho = stats_.min_rho;
  rep.min_c = stats_.min_c;
  rep.min_rho_interior = stats_.min_rho_interior;
  rep.min_c_interior = stats_.min_c_interior;
  rep.min_f_rho = stats_.min_f_rho;
  rep.max_condition = stats_.max_condition;
  rep.t_before_stop = stats_.t_before_stop;
  rep.t_at_stop = stats_.t_at_stop;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!dir.empty()) {
    std::ofstream sum(dir / "summary.txt");
    char buf[64];
    auto num = [&](double x) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      return std::string(buf);
    };
    sum << "test=" << test_name(cfg_.test) << "\nmode=" << partition_name(cfg_.mode)
        << "\ncause=" << rep.cause << "\nt=" << num(rep.t) << "\nsteps=" << rep.steps
        << "\nrefactorizations=" << rep.refactorizations << "\nmax_clamp=" << num(rep.max_clamp)
        << "\nt_before_stop=" << num(rep.t_before_stop) << "\nt_at_stop=" << num(rep.t_at_stop)
        << "\nwall_seconds=" << num(rep.wall_seconds) << '\n';
    if (!rep.message.empty()) sum << "error=" << rep.message << '\n';
  }
  return rep;
}

RunReport run(const RunConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace dpm
