#include <doctest.h>

#include <cmath>
#include <numbers>
#include <algorithm>
#include <random>
#include <thread>

#include "dpm/poisson.hpp"

using namespace dpm;

namespace {

GridSpec cube(int n, double h) {
  GridSpec g;
  g.cells = n;
  g.h = h;
  g.radius = 0.5 * (n - 4) * h;
  return g;
}

GridField random_interior(const GridSpec& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  GridField f(g);
  for (int j = 1; j <= g.cells; ++j)
    for (int k = 1; k <= g.cells; ++k)
      for (int l = 1; l <= g.cells; ++l) f[g.index(j, k, l)] = u(rng);
  return f;
}

double max_interior(const GridSpec& g, const GridField& a) {
  double m = 0.0;
  for (int j = 1; j <= g.cells; ++j)
    for (int k = 1; k <= g.cells; ++k)
      for (int l = 1; l <= g.cells; ++l) m = std::max(m, std::abs(a[g.index(j, k, l)]));
  return m;
}

double max_diff(const GridSpec& g, const GridField& a, const GridField& b) {
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  (void)g;
  return m;
}

}  // namespace

TEST_CASE("eigenvalue table") {
  const SolverPlan p(4, 1.0, 1.0);
  CHECK(p.eigenvalues()[0] == doctest::Approx(2.0 * (1.0 - std::cos(std::numbers::pi / 5))));
  CHECK(p.eigenvalues()[0] == doctest::Approx(0.381966).epsilon(1e-6));
  const SolverPlan q(4, 0.5, 0.3);
  for (int m = 0; m < 4; ++m) CHECK(q.eigenvalues()[m] == doctest::Approx(4.0 * p.eigenvalues()[m]));
  for (double lam : q.eigenvalues()) CHECK(lam > 0.0);
  const SolverPlan again(4, 0.5, 0.3);
  CHECK(again.eigenvalues() == q.eigenvalues());
}

TEST_CASE("plan rejects invalid input") {
  CHECK_THROWS_AS(SolverPlan(3, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SolverPlan(8, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SolverPlan(8, 0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SolverPlan(8, 0.1, -1.0), std::invalid_argument);
}

TEST_CASE("zero source gives zero solution") {
  const auto g = cube(8, 0.1);
  const SolverPlan p(8, 0.1, 0.01);
  const GridField v = p.solve(GridField(g));
  CHECK(max_diff(g, v, GridField(g)) == 0.0);
  CHECK(max_interior(g, dense_oracle_solve(8, 0.1, 0.01, GridField(g))) == 0.0);
}

TEST_CASE("sine modes are eigenfunctions") {
  const int n = 10;
  const double h = 0.07, dt = 0.003;
  const auto g = cube(n, h);
  const SolverPlan p(n, h, dt);
  for (auto [a, b, c] : {std::array<int, 3>{1, 1, 1}, {2, 5, 3}, {10, 1, 7}}) {
    GridField s(g), q(g);
    const double factor = 1.0 + dt * (p.eigenvalues()[a - 1] + p.eigenvalues()[b - 1] + p.eigenvalues()[c - 1]);
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) {
          const double w = std::numbers::pi / (n + 1);
          const double v = std::sin(a * j * w) * std::sin(b * k * w) * std::sin(c * l * w);
          s[g.index(j, k, l)] = v;
          q[g.index(j, k, l)] = factor * v;
        }
    CHECK(max_diff(g, p.solve(q), s) <= 1e-12);
  }
}

TEST_CASE("transform solve matches the dense oracle") {
  std::mt19937_64 rng(42);
  for (int n : {4, 6, 9}) {
    CAPTURE(n);
    const double h = 1.0 / (n + 1), dt = 0.01;
    const auto g = cube(n, h);
    const SolverPlan p(n, h, dt);
    const GridField q = random_interior(g, rng);
    CHECK(max_diff(g, p.solve(q), dense_oracle_solve(n, h, dt, q)) <= 1e-10);
  }
  CHECK_THROWS_AS(dense_oracle_solve(17, 0.1, 0.1, GridField(cube(17, 0.1))), std::invalid_argument);
}

TEST_CASE("solve is an exact inverse with zero ghosts") {
  std::mt19937_64 rng(7);
  for (int n : {8, 13, 24}) {
    const double h = 0.5 / n, dt = 1e-4;
    const auto g = cube(n, h);
    const SolverPlan p(n, h, dt);
    const GridField q = random_interior(g, rng, -5.0, 5.0);
    const GridField v = p.solve(q);
    const GridField back = apply_operator(g, dt, v);
    double res = 0.0;
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) res = std::max(res, std::abs(back[g.index(j, k, l)] - q[g.index(j, k, l)]));
    CHECK(res <= 1e-11 * (1.0 + max_interior(g, q)));
    for (Index i = 0; i < v.size(); ++i) {
      const auto [j, k, l] = g.ijk(i);
      if (!g.is_interior(j, k, l)) CHECK(v[i] == 0.0);
    }
  }
}

TEST_CASE("values outside M0 are ignored") {
  const int n = 8;
  const auto g = cube(n, 0.1);
  const SolverPlan p(n, 0.1, 0.05);
  std::mt19937_64 rng(3);
  GridField q = random_interior(g, rng);
  const GridField v1 = p.solve(q);
  q[g.index(0, 3, 3)] = 1e6;
  q[g.index(n + 1, n + 1, n + 1)] = -1e6;
  CHECK(max_diff(g, p.solve(q), v1) == 0.0);
}

TEST_CASE("linearity") {
  const int n = 12;
  const auto g = cube(n, 0.05);
  const SolverPlan p(n, 0.05, 1e-3);
  std::mt19937_64 rng(11);
  const GridField q1 = random_interior(g, rng), q2 = random_interior(g, rng);
  const double a = 2.5, b = -0.75;
  GridField q(g);
  for (Index i = 0; i < q.size(); ++i) q[i] = a * q1[i] + b * q2[i];
  const GridField v = p.solve(q), v1 = p.solve(q1), v2 = p.solve(q2);
  double scale = 0.0, err = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    scale = std::max(scale, std::abs(v[i]));
    err = std::max(err, std::abs(v[i] - (a * v1[i] + b * v2[i])));
  }
  CHECK(err <= 1e-11 * scale);
}

TEST_CASE("non-negative source gives non-negative solution") {
  std::mt19937_64 rng(5);
  for (double dt : {1e-6, 1e-3, 1.0}) {
    const int n = 16;
    const auto g = cube(n, 1.0 / 16);
    const SolverPlan p(n, g.h, dt);
    GridField q = random_interior(g, rng, 0.0, 1.0);
    // Sparse sources stress the sign pattern more than dense ones.
    for (Index i = 0; i < q.size(); ++i)
      if (i % 7 != 0) q[i] = 0.0;
    const GridField v = p.solve(q);
    const double qmax = max_interior(g, q);
    for (Index i = 0; i < v.size(); ++i) CHECK(v[i] >= -1e-12 * qmax);
  }
}

TEST_CASE("point source response has the cube symmetries") {
  const int n = 7;  // odd, so (4,4,4) is the center
  const auto g = cube(n, 0.1);
  GridField q(g);
  q[g.index(4, 4, 4)] = 1.0;
  const GridField v = dense_oracle_solve(n, 0.1, 0.2, q);
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k)
      for (int l = 1; l <= n; ++l) {
        const double x = v[g.index(j, k, l)];
        int t[3] = {j, k, l};
        std::sort(t, t + 3);
        do {
          CHECK(v[g.index(t[0], t[1], t[2])] == doctest::Approx(x).epsilon(1e-12));
          CHECK(v[g.index(n + 1 - t[0], t[1], n + 1 - t[2])] == doctest::Approx(x).epsilon(1e-12));
        } while (std::next_permutation(t, t + 3));
      }
  const SolverPlan p(n, 0.1, 0.2);
  CHECK(max_diff(g, p.solve(q), v) <= 1e-12);
}

TEST_CASE("plan cache is LRU with capacity 4") {
  PlanCache cache(4);
  auto a = cache.get(8, 0.1, 1e-3);
  CHECK(cache.get(8, 0.1, 1e-3) == a);
  CHECK(cache.builds() == 1);
  for (double dt : {2e-3, 3e-3, 4e-3, 5e-3}) cache.get(8, 0.1, dt);
  CHECK(cache.size() == 4);
  CHECK(cache.builds() == 5);
  // (8, 0.1, 1e-3) was least recently used and has been evicted.
  CHECK(cache.get(8, 0.1, 1e-3) != a);
  CHECK(cache.builds() == 6);
  CHECK(cache.get(8, 0.1, 5e-3)->dt() == 5e-3);
  CHECK(cache.builds() == 6);
}

TEST_CASE("concurrent solves with separate workspaces agree") {
  const int n = 10;
  const auto g = cube(n, 0.1);
  const SolverPlan p(n, 0.1, 0.01);
  std::mt19937_64 rng(9);
  const GridField q = random_interior(g, rng);
  const GridField ref = p.solve(q);
  std::vector<GridField> out(4);
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t)
    ts.emplace_back([&, t] {
      SolverWorkspace ws(n);
      p.solve(q, out[t], ws);
    });
  for (auto& t : ts) t.join();
  for (const auto& o : out) CHECK(max_diff(g, o, ref) == 0.0);
}
