#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpm/decomposition.hpp"
#include "dpm/diagnostics.hpp"
#include "dpm/fv_scheme.hpp"
#include "dpm/poisson.hpp"

namespace dpm {

enum class TestCase { A, B, manufactured };

TestCase parse_test(std::string_view s);
Partition parse_mode(std::string_view s);
const char* test_name(TestCase t);

/// Isotropic Gaussian amplitude * exp(-rate |x - center|^2).
struct Gaussian {
  double amplitude = 0.0;
  double rate = 1.0;
  Vec3 center;

  double value(const Vec3& p) const;
  /// Exact mean over the axis-aligned cube of width h centered at p.
  double cell_average(const Vec3& p, double h) const;
};

struct InitialData {
  std::vector<Gaussian> rho;
  std::vector<Gaussian> c;

  double rho_at(const Vec3& p) const;
  double c_at(const Vec3& p) const;
  double rho_cell_average(const Vec3& p, double h) const;
};

/// Initial data of the named test; `seed` drives the manufactured case.
InitialData initial_data(TestCase test, std::uint64_t seed = 1);

struct RunConfig {
  TestCase test = TestCase::A;
  Partition mode = Partition::single;
  int n = 36;
  int n1 = 20;
  int n2 = 20;
  int harmonics = -1;            // M on Gamma; < 0 selects the test default (Test B: capped by the mesh)
  int beta = -1;                 // < 0 selects the test default
  int interface_harmonics = -1;  // M on Z; < 0 selects the test default
  double wedge_eps = -1.0;
  double radius = 0.5;
  double inner_radius = 0.25;
  double chi = 1.0;
  double t_final = 1e-6;
  double dt_cap_factor = 0.5;
  double dt_fixed = 0.0;  // > 0: use min(dt_fixed, CFL) instead of the h^2 cap
  double stoppage = 1000.0;
  long max_steps = 0;     // 0: unlimited
  std::string out;
  long snapshot_every = 0;
  int threads = 0;
  std::uint64_t seed = 1;
  std::size_t potential_cache_mb = 1024;

  /// Throws std::invalid_argument on inconsistent or non-positive values.
  void validate() const;
  int resolved_harmonics() const;
  int resolved_beta() const;
  int resolved_interface_harmonics() const;
};

/// Applies one key=value setting (keys as the CLI flags without dashes).
void apply_config_entry(RunConfig& cfg, std::string_view key, std::string_view value);
/// Flat key=value text, one pair per line, '#' starts a comment.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

SubdomainSetup build_setup(const RunConfig& cfg);

struct SimState {
  double t = 0.0;
  double dt = 0.0;  // last step size, 0 before the first step
  long step = 0;
  std::vector<SubdomainFields> fields;
  double max_rho_prev = 0.0;
};

/// Initial cell averages of rho (exact Gaussian integrals), point values of c,
/// and boundary-projected values on gamma points that carry a Gamma slot.
SimState init_state(const RunConfig& cfg, const SubdomainSetup& setup);

struct RunReport {
  std::string cause;  // "t_final", "blow_up", "max_steps" or "error"
  std::string message;
  double t = 0.0;
  long steps = 0;
  int refactorizations = 0;
  double max_clamp = 0.0;
  double min_rho = 0.0;  // smallest pre-clamp value seen on any N+
  double min_c = 0.0;
  double min_rho_interior = 0.0;  // same, restricted to M+
  double min_c_interior = 0.0;
  double min_f_rho = 0.0;
  double max_condition = 0.0;
  double t_before_stop = 0.0;  // bracketing steps around the stoppage trigger
  double t_at_stop = 0.0;
  double wall_seconds = 0.0;
  std::vector<TimeSeriesRecord> records;
};

/// Time loop over one configuration. Step size: min(previous dt, cap h_min^2 or
/// dt_fixed), halved until it satisfies the CFL bound; the boundary system is
/// rebuilt only when it shrinks.
class Simulation {
 public:
  explicit Simulation(const RunConfig& cfg);
  Simulation(const RunConfig& cfg, SubdomainSetup setup);

  const RunConfig& config() const { return cfg_; }
  const SubdomainSetup& setup() const { return setup_; }
  const SimState& state() const { return state_; }
  SimState& state() { return state_; }
  const BepSystem* system() const { return system_.get(); }
  /// Report of the most recent step.
  const StepReport& last_step() const { return last_; }
  int refactorizations() const { return refactorizations_; }

  /// Step size the next call to step() will use.
  double next_dt() const;
  /// Advances one step and returns its record.
  TimeSeriesRecord step();
  bool finished() const { return !cause_.empty(); }
  const std::string& cause() const { return cause_; }

  using Observer = std::function<void(const Simulation&, const TimeSeriesRecord&)>;
  /// Steps until t_final, stoppage, max_steps or an error; writes outputs if cfg.out is set.
  RunReport run(const Observer& observer = {});

  double max_rho() const;
  double second_moment() const;
  double free_energy() const;

 private:
  void ensure_system(double dt);

  RunConfig cfg_;
  ModelParams params_;
  SubdomainSetup setup_;
  SimState state_;
  PlanCache plans_;
  std::unique_ptr<BepSystem> system_;
  int builds_ = 0;
  int refactorizations_ = 0;
  std::string cause_;
  StepReport last_;
  double t_prev_ = 0.0;
  RunReport stats_;
};

RunReport run(const RunConfig& cfg);

// Output formats.

std::string format_record(const TimeSeriesRecord& r);
extern const char* const kTimeseriesHeader;
void write_timeseries(std::span<const TimeSeriesRecord> records, const std::filesystem::path& path);
std::vector<TimeSeriesRecord> read_timeseries(const std::filesystem::path& path);

struct Snapshot {
  int cells = 0;
  double h = 0.0;
  double t = 0.0;
  std::vector<double> values;  // N^3 interior values, canonical order
};

/// Little-endian binary: 8-byte magic "DPM3", u32 version, u32 N, f64 h, f64 t,
/// N^3 f64. A text sidecar `<path>.txt` records the same header in key=value form.
void write_snapshot(const GridField& field, const GridSpec& grid, double t,
                    const std::filesystem::path& path, std::string_view name = "field");
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace dpm
