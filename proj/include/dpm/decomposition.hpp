#pragma once

#include <memory>
#include <vector>

#include "dpm/dpm_core.hpp"
#include "dpm/fv_scheme.hpp"
#include "dpm/geometry.hpp"

namespace dpm {

enum class Partition { single, concentric, wedge };

const char* partition_name(Partition p);

struct SpectralOptions {
  int boundary_degree = 0;    // M on Gamma
  int boundary_beta = 1;      // 1: terms {0, 2}; 0: term {0}
  int interface_degree = 19;  // M on Z, terms {0, 1, 2}
  double wedge_eps = -1.0;    // polar band half-width on Gamma; < 0 selects 2 h_l / r
};

/// Grids, point sets and density slots of one (possibly decomposed) domain.
///
/// Piece 0 is always the outer boundary Gamma; piece 1, when present, is the
/// interface Z. Interface distances are measured along the normal of Z that
/// points out of subdomain 1, for both subdomains.
struct SubdomainSetup {
  Partition partition = Partition::single;
  Sphere domain;
  Sphere interface;
  std::vector<Region> regions;
  std::shared_ptr<BoundaryLayout> layout;
  // wedge geometry
  double theta_star = 0.0;
  double psi_star = 0.0;
  double interface_eps = 0.0;
  double interface_arg_hi = 1.0;  // cos(psi* - eps_Z): upper end of the Z basis interval

  std::size_t count() const { return layout->subdomains.size(); }
  const GridSpec& grid(std::size_t s) const { return layout->subdomains[s].grid; }
  const PointClassification& points(std::size_t s) const { return layout->subdomains[s].pc; }
  /// Smallest mesh width over subdomains.
  double min_h() const;
};

SubdomainSetup setup_single(double r, int n, const SpectralOptions& opt);

/// Ball of radius r1 inside the shell r1 < |p| < r, both centered at the origin.
SubdomainSetup setup_case1(double r, double r1, int n1, int n2, const SpectralOptions& opt);

/// Omega_1 = Omega intersected with the ball of radius r1 around `pole`, Omega_2 the rest.
/// The pole must lie on Gamma.
SubdomainSetup setup_case2(double r, double r1, Vec3 pole, int n1, int n2,
                           const SpectralOptions& opt);

/// Stacked reduced BEP over all subdomains with shared spectral unknowns.
/// Throws std::invalid_argument if the plans are not built for one common dt.
BepSystem assemble_coupled_bep(const SubdomainSetup& setup,
                               std::vector<std::shared_ptr<const SolverPlan>> plans,
                               const BepOptions& options = {});

/// rho and c on N+ of each subdomain.
struct SubdomainFields {
  GridField rho;
  GridField c;
};

struct StepReport {
  double bep_residual = 0.0;  // max over both fields
  double clamp = 0.0;         // largest value clamped to 0 (densities or fields)
  double min_rho = 0.0;       // minimum over N+ before the field clamp
  double min_c = 0.0;
  double min_rho_interior = 0.0;  // minimum over M+ before the field clamp
  double min_c_interior = 0.0;
  double min_f_rho = 0.0;     // minimum right-hand side on M+
};

/// One IMEX step on every subdomain with the coupled boundary system.
StepReport dd_step(std::vector<SubdomainFields>& fields, const SubdomainSetup& setup,
                   const BepSystem& system, const ModelParams& params);

/// min over subdomains of the positivity bound; +inf if unconstrained.
double cfl_bound(const std::vector<SubdomainFields>& fields, const SubdomainSetup& setup,
                 const ModelParams& params);

}  // namespace dpm
