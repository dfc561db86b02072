#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dpm/runner.hpp"

namespace dpm {

namespace {

// (1/h) * integral of exp(-a (s - x0)^2) over [x - h/2, x + h/2]
double average_1d(double a, double x0, double x, double h) {
  const double sa = std::sqrt(a);
  const double lo = sa * (x - 0.5 * h - x0), hi = sa * (x + 0.5 * h - x0);
  double diff;
  if (lo >= 0.0)
    diff = std::erfc(lo) - std::erfc(hi);
  else if (hi <= 0.0)
    diff = std::erfc(-hi) - std::erfc(-lo);
  else
    diff = std::erf(hi) - std::erf(lo);
  return 0.5 * std::sqrt(std::numbers::pi) / (sa * h) * diff;
}

double sum_values(const std::vector<Gaussian>& gs, const Vec3& p) {
  double s = 0.0;
  for (const auto& g : gs) s += g.value(p);
  return s;
}

}  // namespace

double Gaussian::value(const Vec3& p) const {
  const Vec3 d = p - center;
  return amplitude * std::exp(-rate * d.dot(d));
}

double Gaussian::cell_average(const Vec3& p, double h) const {
  return amplitude * average_1d(rate, center.x, p.x, h) * average_1d(rate, center.y, p.y, h) *
         average_1d(rate, center.z, p.z, h);
}

double InitialData::rho_at(const Vec3& p) const { return sum_values(rho, p); }
double InitialData::c_at(const Vec3& p) const { return sum_values(c, p); }

double InitialData::rho_cell_average(const Vec3& p, double h) const {
  double s = 0.0;
  for (const auto& g : rho) s += g.cell_average(p, h);
  return s;
}

InitialData initial_data(TestCase test, std::uint64_t seed) {
  InitialData d;
  switch (test) {
    case TestCase::A:
      d.rho = {{1000.0, 100.0, {0.0, 0.0, 0.0}}};
      d.c = {{500.0, 50.0, {0.0, 0.0, 0.0}}};
      break;
    case TestCase::B:
      d.rho = {{2000.0, 100.0, {0.0, 0.0, 0.25}}};
      break;
    case TestCase::manufactured: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      auto center = [&] {
        for (;;) {
          const Vec3 p{0.2 * unit(rng), 0.2 * unit(rng), 0.2 * unit(rng)};
          if (p.norm() <= 0.2) return p;
        }
      };
      std::uniform_real_distribution<double> amp_r(50.0, 200.0), rate_r(20.0, 60.0);
      std::uniform_real_distribution<double> amp_c(10.0, 50.0), rate_c(10.0, 40.0);
      for (int k = 0; k < 3; ++k) d.rho.push_back({amp_r(rng), rate_r(rng), center()});
      for (int k = 0; k < 2; ++k) d.c.push_back({amp_c(rng), rate_c(rng), center()});
      break;
    }
  }
  return d;
}

SimState init_state(const RunConfig& cfg, const SubdomainSetup& setup) {
  const InitialData data = initial_data(cfg.test, cfg.seed);
  SimState st;
  for (std::size_t s = 0; s < setup.count(); ++s) {
    const auto& sub = setup.layout->subdomains[s];
    const auto& grid = sub.grid;
    SubdomainFields f{GridField(grid), GridField(grid)};
    for (Index i : sub.pc.n_plus) {
      const Vec3 p = grid.position(i);
      f.rho[i] = data.rho_cell_average(p, grid.h);
      f.c[i] = data.c_at(p);
    }
    for (const auto& slot : sub.slots) {
      if (slot.piece != 0) continue;
      const Index i = sub.pc.gamma[slot.gamma_pos];
      const Vec3 q = boundary_projection(grid.position(i), setup.domain).projection;
      f.rho[i] = data.rho_at(q);
      f.c[i] = data.c_at(q);
    }
    st.fields.push_back(std::move(f));
  }
  double m = 0.0;
  for (std::size_t s = 0; s < setup.count(); ++s)
    m = std::max(m, max_density(st.fields[s].rho, setup.points(s)));
  st.max_rho_prev = m;
  return st;
}

}  // namespace dpm
