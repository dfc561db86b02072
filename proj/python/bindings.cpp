#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "dpm/diagnostics.hpp"
#include "dpm/geometry.hpp"
#include "dpm/runner.hpp"

namespace py = pybind11;
using namespace dpm;

namespace {

// Copies a field into an (N+2)^3 array including the ghost layer.
py::array_t<double> to_array(const GridField& f) {
  const py::ssize_t n = f.cells() + 2;
  py::array_t<double> out({n, n, n});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

GridField from_array(const GridSpec& g, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (static_cast<std::size_t>(a.size()) != g.total_points())
    throw std::invalid_argument("array size does not match the grid including ghosts");
  GridField f(g);
  std::copy(a.data(), a.data() + a.size(), f.data());
  return f;
}

py::array_t<Index> to_array(const std::vector<Index>& v) { return py::array_t<Index>(v.size(), v.data()); }

RunConfig config_from(const py::dict& kw) {
  RunConfig cfg;
  for (auto [k, v] : kw) {
    std::string key = py::str(k);
    std::replace(key.begin(), key.end(), '_', '-');
    apply_config_entry(cfg, key, py::str(v).cast<std::string>());
  }
  cfg.validate();
  return cfg;
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["cause"] = r.cause;
  d["message"] = r.message;
  d["t"] = r.t;
  d["steps"] = r.steps;
  d["refactorizations"] = r.refactorizations;
  d["min_rho"] = r.min_rho;
  d["min_c"] = r.min_c;
  d["t_before_stop"] = r.t_before_stop;
  d["t_at_stop"] = r.t_at_stop;
  d["wall_seconds"] = r.wall_seconds;
  py::list recs;
  for (const auto& rec : r.records) recs.append(rec);
  d["records"] = recs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Difference potentials solver for 3D chemotaxis on a ball";

  py::class_<Vec3>(m, "Vec3")
      .def(py::init([](double x, double y, double z) { return Vec3{x, y, z}; }), py::arg("x") = 0.0,
           py::arg("y") = 0.0, py::arg("z") = 0.0)
      .def_readwrite("x", &Vec3::x)
      .def_readwrite("y", &Vec3::y)
      .def_readwrite("z", &Vec3::z)
      .def("norm", &Vec3::norm)
      .def("__repr__", [](const Vec3& v) {
        return "Vec3(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ", " + std::to_string(v.z) + ")";
      });

  py::class_<GridSpec>(m, "GridSpec")
      .def_readonly("radius", &GridSpec::radius)
      .def_readonly("cells", &GridSpec::cells)
      .def_readonly("h", &GridSpec::h)
      .def_readonly("center", &GridSpec::center)
      .def_readonly("cube_min", &GridSpec::cube_min)
      .def_readonly("cube_max", &GridSpec::cube_max)
      .def("index", &GridSpec::index)
      .def("ijk", &GridSpec::ijk)
      .def("position", py::overload_cast<Index>(&GridSpec::position, py::const_));

  m.def("build_grid", &build_grid, py::arg("radius"), py::arg("cells"), py::arg("center") = Vec3{});

  py::class_<PointClassification>(m, "PointClassification")
      .def_property_readonly("m_plus", [](const PointClassification& p) { return to_array(p.m_plus); })
      .def_property_readonly("m_minus", [](const PointClassification& p) { return to_array(p.m_minus); })
      .def_property_readonly("n_plus", [](const PointClassification& p) { return to_array(p.n_plus); })
      .def_property_readonly("gamma", [](const PointClassification& p) { return to_array(p.gamma); })
      .def_property_readonly("gamma_in", [](const PointClassification& p) { return to_array(p.gamma_in); })
      .def_property_readonly("gamma_ex", [](const PointClassification& p) { return to_array(p.gamma_ex); });

  m.def(
      "classify_ball",
      [](const GridSpec& g, double radius, Vec3 center) { return classify_points(g, Sphere{center, radius}); },
      py::arg("grid"), py::arg("radius"), py::arg("center") = Vec3{});

  py::class_<TimeSeriesRecord>(m, "TimeSeriesRecord")
      .def_readonly("step", &TimeSeriesRecord::step)
      .def_readonly("t", &TimeSeriesRecord::t)
      .def_readonly("dt", &TimeSeriesRecord::dt)
      .def_readonly("max_rho", &TimeSeriesRecord::max_rho)
      .def_readonly("second_moment", &TimeSeriesRecord::second_moment)
      .def_readonly("free_energy", &TimeSeriesRecord::free_energy)
      .def_readonly("bep_residual", &TimeSeriesRecord::bep_residual)
      .def_readonly("clamp", &TimeSeriesRecord::clamp);

  py::class_<Simulation>(m, "Simulation")
      .def(py::init([](py::kwargs kw) { return std::make_unique<Simulation>(config_from(kw)); }))
      .def("step", &Simulation::step)
      .def("next_dt", &Simulation::next_dt)
      .def("finished", &Simulation::finished)
      .def_property_readonly("cause", &Simulation::cause)
      .def_property_readonly("t", [](const Simulation& s) { return s.state().t; })
      .def_property_readonly("steps", [](const Simulation& s) { return s.state().step; })
      .def_property_readonly("subdomains", [](const Simulation& s) { return s.setup().count(); })
      .def("grid", [](const Simulation& s, std::size_t k) { return s.setup().grid(k); }, py::arg("k") = 0)
      .def("points", [](const Simulation& s, std::size_t k) { return s.setup().points(k); }, py::arg("k") = 0)
      .def("density", [](const Simulation& s, std::size_t k) { return to_array(s.state().fields.at(k).rho); },
           py::arg("k") = 0)
      .def("chemical", [](const Simulation& s, std::size_t k) { return to_array(s.state().fields.at(k).c); },
           py::arg("k") = 0)
      .def("max_rho", &Simulation::max_rho)
      .def("second_moment", &Simulation::second_moment)
      .def("free_energy", &Simulation::free_energy)
      .def("run", [](Simulation& s) {
        py::gil_scoped_release release;
        const RunReport r = s.run();
        py::gil_scoped_acquire acquire;
        return report_dict(r);
      });

  m.def(
      "run",
      [](py::kwargs kw) {
        const RunConfig cfg = config_from(kw);
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run(cfg);
        }
        return report_dict(r);
      },
      "Runs one configuration; keyword names match the command-line flags.");

  m.def("max_density",
        [](const GridSpec& g, const PointClassification& pc, py::array_t<double> rho) {
          return max_density(from_array(g, rho), pc);
        });
  m.def("total_mass",
        [](const GridSpec& g, const PointClassification& pc, py::array_t<double> rho) {
          return total_mass(from_array(g, rho), g, pc);
        });
  m.def("second_moment",
        [](const GridSpec& g, const PointClassification& pc, py::array_t<double> rho) {
          return second_moment(from_array(g, rho), g, pc);
        });
  m.def("free_energy", [](const GridSpec& g, const PointClassification& pc, py::array_t<double> rho,
                          py::array_t<double> c) { return free_energy(from_array(g, rho), from_array(g, c), g, pc); });
  m.def("blow_up_check", &blow_up_check, py::arg("max_now"), py::arg("max_prev"), py::arg("threshold") = 1000.0);
}
