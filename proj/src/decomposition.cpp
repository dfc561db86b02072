#include "dpm/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpm/parallel.hpp"

namespace dpm {

const char* partition_name(Partition p) {
  switch (p) {
    case Partition::single:
      return "sd";
    case Partition::concentric:
      return "dd-case1";
    case Partition::wedge:
      return "dd-case2";
  }
  return "?";
}

double SubdomainSetup::min_h() const {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& s : layout->subdomains) h = std::min(h, s.grid.h);
  return h;
}

namespace {

constexpr std::uint32_t kGammaPiece = 0;
constexpr std::uint32_t kInterfacePiece = 1;

void add_pieces(BoundaryLayout& L, const SpectralOptions& opt, bool with_interface) {
  if (opt.boundary_degree < 0 || opt.interface_degree < 0)
    throw std::invalid_argument("harmonic degrees must be >= 0");
  L.pieces.push_back({"boundary", opt.boundary_degree + 1, neumann_terms(opt.boundary_beta)});
  if (with_interface) L.pieces.push_back({"interface", opt.interface_degree + 1, {0, 1, 2}});
}

BoundarySubdomain make_sub(const GridSpec& grid, const Region& region) {
  return {grid, classify_points(grid, region), {}};
}

DensitySlot slot_for(std::size_t g, std::uint32_t piece, const SurfacePoint& sp, double arg) {
  return {static_cast<std::uint32_t>(g), piece, sp.distance, std::clamp(arg, -1.0, 1.0)};
}

}  // namespace

SubdomainSetup setup_single(double r, int n, const SpectralOptions& opt) {
  SubdomainSetup S;
  S.partition = Partition::single;
  S.domain = {{}, r};
  S.regions = {ball_region(S.domain)};
  S.layout = std::make_shared<BoundaryLayout>();
  add_pieces(*S.layout, opt, false);
  auto sub = make_sub(build_grid(r, n), S.regions[0]);
  const auto geom = boundary_geometry(sub.grid, sub.pc.gamma, S.domain);
  for (std::size_t g = 0; g < geom.size(); ++g)
    sub.slots.push_back(slot_for(g, kGammaPiece, geom[g], std::cos(geom[g].theta)));
  S.layout->subdomains.push_back(std::move(sub));
  S.layout->validate();
  return S;
}

SubdomainSetup setup_case1(double r, double r1, int n1, int n2, const SpectralOptions& opt) {
  if (!(r1 > 0.0 && r1 < r)) throw std::invalid_argument("setup_case1: need 0 < r1 < r");
  SubdomainSetup S;
  S.partition = Partition::concentric;
  S.domain = {{}, r};
  S.interface = {{}, r1};
  S.regions = {ball_region(S.interface), shell_region({}, r1, r)};
  S.layout = std::make_shared<BoundaryLayout>();
  add_pieces(*S.layout, opt, true);

  auto inner = make_sub(build_grid(r1, n1), S.regions[0]);
  const auto zg = boundary_geometry(inner.grid, inner.pc.gamma, S.interface);
  for (std::size_t g = 0; g < zg.size(); ++g)
    inner.slots.push_back(slot_for(g, kInterfacePiece, zg[g], std::cos(zg[g].theta)));

  auto outer = make_sub(build_grid(r, n2), S.regions[1]);
  const double split = 0.5 * (r1 + r);
  for (std::size_t g = 0; g < outer.pc.gamma.size(); ++g) {
    const Vec3 p = outer.grid.position(outer.pc.gamma[g]);
    if (p.norm() > split) {
      const auto sp = boundary_projection(p, S.domain);
      outer.slots.push_back(slot_for(g, kGammaPiece, sp, std::cos(sp.theta)));
    } else {
      const auto sp = boundary_projection(p, S.interface);
      outer.slots.push_back(slot_for(g, kInterfacePiece, sp, std::cos(sp.theta)));
    }
  }
  S.layout->subdomains.push_back(std::move(inner));
  S.layout->subdomains.push_back(std::move(outer));
  S.layout->validate();
  return S;
}

SubdomainSetup setup_case2(double r, double r1, Vec3 pole, int n1, int n2,
                           const SpectralOptions& opt) {
  if (!(r1 > 0.0 && r1 < r)) throw std::invalid_argument("setup_case2: need 0 < r1 < r");
  if (std::abs(pole.norm() - r) > 1e-12 * r)
    throw std::invalid_argument("setup_case2: pole must lie on the outer sphere");
  SubdomainSetup S;
  S.partition = Partition::wedge;
  S.domain = {{}, r};
  S.interface = {pole, r1};
  S.regions = {cap_region(S.domain, S.interface), cap_complement_region(S.domain, S.interface)};
  S.layout = std::make_shared<BoundaryLayout>();
  add_pieces(*S.layout, opt, true);

  // Circle Z ∩ Gamma, measured about the axis through the pole.
  const Vec3 axis = (1.0 / r) * pole;
  const double s = (2.0 * r * r - r1 * r1) / (2.0 * r);  // axial coordinate of the circle
  S.theta_star = std::acos(s / r);
  S.psi_star = std::acos((s - r) / r1);

  std::vector<GridSpec> grids = {build_grid(r1, n1, pole), build_grid(r, n2)};
  const double h_max = std::max(grids[0].h, grids[1].h);
  S.interface_eps = 2.0 * h_max / r1;
  S.interface_arg_hi = std::cos(std::max(0.0, S.psi_star - S.interface_eps));
  const double lo = -1.0, hi = S.interface_arg_hi;
  auto z_arg = [&](double cos_psi) { return -1.0 + 2.0 * (cos_psi - lo) / (hi - lo); };
  // Polar angles about the pole axis (the pole is the "north" direction).
  auto polar = [&](const Vec3& d) {
    return std::acos(std::clamp(d.dot(axis) / d.norm(), -1.0, 1.0));
  };

  for (int l = 0; l < 2; ++l) {
    auto sub = make_sub(grids[l], S.regions[l]);
    const double h = sub.grid.h;
    const double eps = opt.wedge_eps >= 0.0 ? opt.wedge_eps : 2.0 * h / r;
    const double near = 2.5 * h;
    // Gamma band from the polar-angle split (rotated so the pole is the north pole).
    std::vector<char> in_band(sub.pc.gamma.size(), 0);
    for (std::size_t g = 0; g < sub.pc.gamma.size(); ++g) {
      const Vec3 p = sub.grid.position(sub.pc.gamma[g]);
      const double th = polar(p);
      in_band[g] = l == 0 ? th <= S.theta_star + eps : th >= S.theta_star - eps;
    }
    for (std::size_t g = 0; g < sub.pc.gamma.size(); ++g) {
      const Vec3 p = sub.grid.position(sub.pc.gamma[g]);
      SurfacePoint sg = boundary_projection(p, S.domain);
      const double th = polar(p);
      // A grid point at the pole itself is far from Z and has no Z projection.
      const bool at_pole = (p - pole).norm() <= 1e-12 * r1;
      SurfacePoint sz;
      double psi = 0.0;
      if (at_pole) {
        sz.distance = -r1;
      } else {
        sz = boundary_projection(p, S.interface);
        psi = polar(p - pole);
      }
      const bool on_gamma = in_band[g] && std::abs(sg.distance) <= near;
      const bool on_z = !at_pole && psi >= S.psi_star - S.interface_eps && std::abs(sz.distance) <= near;
      const bool gamma_slot = on_gamma || (!on_z && std::abs(sg.distance) <= std::abs(sz.distance));
      const bool z_slot = on_z || !gamma_slot;
      if (gamma_slot) sub.slots.push_back(slot_for(g, kGammaPiece, sg, std::cos(th)));
      if (z_slot) sub.slots.push_back(slot_for(g, kInterfacePiece, sz, z_arg(std::cos(psi))));
    }
    S.layout->subdomains.push_back(std::move(sub));
  }
  S.layout->validate();
  return S;
}

BepSystem assemble_coupled_bep(const SubdomainSetup& setup,
                               std::vector<std::shared_ptr<const SolverPlan>> plans,
                               const BepOptions& options) {
  return BepSystem(setup.layout, std::move(plans), options);
}

StepReport dd_step(std::vector<SubdomainFields>& fields, const SubdomainSetup& setup,
                   const BepSystem& system, const ModelParams& params) {
  const std::size_t nsub = setup.count();
  if (fields.size() != nsub) throw std::invalid_argument("dd_step: one field pair per subdomain");
  const double dt = system.dt();
  std::vector<GridField> f_rho(nsub), f_c(nsub), gf_rho(nsub), gf_c(nsub);
  std::vector<double> min_f(nsub, 0.0);
  parallel_for(nsub, [&](std::size_t s, int) {
    const auto& grid = setup.grid(s);
    const auto& pc = setup.points(s);
    GridField g = convection_term(fields[s].rho, fields[s].c, params, grid, pc);
    auto [fr, fc] = assemble_rhs(fields[s].rho, fields[s].c, g, dt, params, grid, pc);
    double mn = std::numeric_limits<double>::infinity();
    for (Index i : pc.m_plus) mn = std::min(mn, fr[i]);
    min_f[s] = mn;
    f_rho[s] = std::move(fr);
    f_c[s] = std::move(fc);
  });
  parallel_for(2 * nsub, [&](std::size_t task, int) {
    const std::size_t s = task % nsub;
    const auto& plan = system.plan(s);
    if (task < nsub)
      gf_rho[s] = particular_solution(plan, setup.grid(s), f_rho[s], setup.points(s));
    else
      gf_c[s] = particular_solution(plan, setup.grid(s), f_c[s], setup.points(s));
  });

  StepReport rep;
  rep.min_f_rho = *std::min_element(min_f.begin(), min_f.end());
  rep.min_rho = rep.min_c = std::numeric_limits<double>::infinity();
  rep.min_rho_interior = rep.min_c_interior = rep.min_rho;
  const auto sol_rho = system.solve(system.rhs(gf_rho));
  const auto sol_c = system.solve(system.rhs(gf_c));
  rep.bep_residual = std::max(sol_rho.residual, sol_c.residual);
  std::vector<FieldUpdate> up(2 * nsub);
  parallel_for(2 * nsub, [&](std::size_t task, int) {
    const std::size_t s = task % nsub;
    if (task < nsub)
      up[task] = reconstruct_field(system, s, sol_rho.coeffs, gf_rho[s], f_rho[s]);
    else
      up[task] = reconstruct_field(system, s, sol_c.coeffs, gf_c[s], f_c[s]);
  });
  for (std::size_t s = 0; s < nsub; ++s) {
    auto& ur = up[s];
    auto& uc = up[nsub + s];
    rep.clamp = std::max({rep.clamp, ur.density_clamp, ur.field_clamp, uc.density_clamp,
                          uc.field_clamp});
    rep.min_rho = std::min(rep.min_rho, ur.min_before_clamp);
    rep.min_c = std::min(rep.min_c, uc.min_before_clamp);
    rep.min_rho_interior = std::min(rep.min_rho_interior, ur.min_interior);
    rep.min_c_interior = std::min(rep.min_c_interior, uc.min_interior);
    fields[s].rho = std::move(ur.field);
    fields[s].c = std::move(uc.field);
  }
  return rep;
}

double cfl_bound(const std::vector<SubdomainFields>& fields, const SubdomainSetup& setup,
                 const ModelParams& params) {
  double dt = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < setup.count(); ++s)
    dt = std::min(dt, cfl_dt(fields[s].c, params, setup.grid(s), setup.points(s)));
  return dt;
}

}  // namespace dpm
