#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dpm/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Chemotaxis solver on a sphere (single domain or two subdomains)"};
  std::string config_path;
  app.add_option("--config", config_path, "key=value config file; flags override its entries")
      ->check(CLI::ExistingFile);

  // Each flag is forwarded as a config entry so file and command line share one parser.
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"test", "A, B or manufactured"},
      {"mode", "sd, dd-case1 or dd-case2"},
      {"n", "cells per axis (single domain)"},
      {"n1", "cells per axis, subdomain 1"},
      {"n2", "cells per axis, subdomain 2"},
      {"harmonics", "Legendre degree on the outer boundary"},
      {"beta", "extension order on the outer boundary (0 or 1)"},
      {"interface-harmonics", "Legendre degree on the interface"},
      {"t-final", "final time"},
      {"dt", "fixed step (still limited by the positivity bound)"},
      {"dt-cap-factor", "step = factor * h^2 when --dt is not given"},
      {"stoppage", "blow-up threshold on the max-density increment"},
      {"max-steps", "stop after this many steps (0: no limit)"},
      {"out", "output directory"},
      {"snapshot-every", "write field snapshots every k steps (0: never)"},
      {"threads", "worker threads (default: DPM_THREADS or all cores)"},
      {"seed", "RNG seed for the manufactured case"},
      {"chi", "chemotactic sensitivity"},
  };
  std::vector<std::string> values(flags.size());
  std::vector<CLI::Option*> opts;
  for (std::size_t k = 0; k < flags.size(); ++k)
    opts.push_back(app.add_option("--" + flags[k].first, values[k], flags[k].second));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no per-step output");

  CLI11_PARSE(app, argc, argv);

  dpm::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = dpm::load_config_file(config_path);
    for (std::size_t k = 0; k < flags.size(); ++k)
      if (opts[k]->count() > 0) dpm::apply_config_entry(cfg, flags[k].first, values[k]);
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  dpm::RunReport rep;
  try {
    dpm::Simulation sim(cfg);
    rep = sim.run([quiet](const dpm::Simulation&, const dpm::TimeSeriesRecord& r) {
      if (!quiet) std::printf("%6ld t=%.6e dt=%.3e max_rho=%.6e E=%.6e\n", r.step, r.t, r.dt, r.max_rho,
                              r.free_energy);
    });
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("cause=%s t=%.9e steps=%ld refactorizations=%d wall=%.2fs\n", rep.cause.c_str(), rep.t,
              rep.steps, rep.refactorizations, rep.wall_seconds);
  if (rep.cause == "blow_up")
    std::printf("stoppage between t=%.9e and t=%.9e\n", rep.t_before_stop, rep.t_at_stop);
  if (rep.cause == "error") {
    std::fprintf(stderr, "error: %s\n", rep.message.c_str());
    return 1;
  }
  return 0;
}
