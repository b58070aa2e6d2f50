#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "wfvar/action.hpp"
#include "wfvar/cli.hpp"
#include "wfvar/error.hpp"
#include "wfvar/farfield.hpp"
#include "wfvar/io.hpp"
#include "wfvar/lightcone.hpp"
#include "wfvar/shortrange.hpp"

namespace py = pybind11;
using namespace wfvar;

// Vec3 <-> 3-sequence of floats.
namespace pybind11::detail {
template <>
struct type_caster<Vec3> {
  PYBIND11_TYPE_CASTER(Vec3, const_name("tuple[float, float, float]"));

  bool load(handle src, bool) {
    if (!isinstance<sequence>(src) || isinstance<str>(src)) return false;
    const auto seq = reinterpret_borrow<sequence>(src);
    if (seq.size() != 3) return false;
    for (std::size_t i = 0; i < 3; ++i) value[static_cast<int>(i)] = seq[i].cast<double>();
    return true;
  }

  static handle cast(const Vec3& v, return_value_policy, handle) {
    return py::make_tuple(v.x, v.y, v.z).release();
  }
};
}  // namespace pybind11::detail

namespace {

PiecewiseTrajectory polygon(const std::vector<std::array<double, 4>>& rows, ParticleParams p) {
  std::vector<Vertex> verts;
  for (const auto& r : rows) verts.emplace_back(r[0], Vec3{r[1], r[2], r[3]});
  return polygonal_from_vertices(verts, p);
}

BoundaryData boundary_of(std::optional<std::pair<double, double>> w1, std::optional<std::pair<double, double>> w2,
                         std::optional<PiecewiseTrajectory> h1, std::optional<PiecewiseTrajectory> h2, double k2,
                         double k1) {
  BoundaryData b;
  if (w1) b.window1 = {w1->first, w1->second};
  if (w2) b.window2 = {w2->first, w2->second};
  b.history1 = std::move(h1);
  b.history2 = std::move(h2);
  b.k2 = k2;
  b.k1 = k1;
  return b;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-body action-at-a-distance electrodynamics";

  auto base = py::register_exception<Error>(m, "WfvarError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<SuperluminalError>(m, "SuperluminalError", base);
  py::register_exception<InsufficientHistoryError>(m, "InsufficientHistoryError", base);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base);
  py::register_exception<CollisionError>(m, "CollisionError", base);
  py::register_exception<ContractError>(m, "ContractError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<IoError>(m, "IoError", base);

  py::enum_<Branch>(m, "Branch").value("Retarded", Branch::Retarded).value("Advanced", Branch::Advanced);
  py::enum_<ChainDirection>(m, "ChainDirection")
      .value("Forward", ChainDirection::Forward)
      .value("Backward", ChainDirection::Backward);
  py::enum_<FieldMode>(m, "FieldMode")
      .value("TimeSymmetric", FieldMode::TimeSymmetric)
      .value("RetardedOnly", FieldMode::RetardedOnly);

  py::class_<ParticleParams>(m, "Particle")
      .def(py::init([](double mass, double charge) { return ParticleParams{mass, charge}; }), py::arg("mass") = 1.0,
           py::arg("charge") = 1.0)
      .def_readwrite("mass", &ParticleParams::mass)
      .def_readwrite("charge", &ParticleParams::charge)
      .def("__repr__", [](const ParticleParams& p) {
        std::ostringstream os;
        os << "Particle(mass=" << p.mass << ", charge=" << p.charge << ")";
        return os.str();
      });

  py::class_<PiecewiseTrajectory>(m, "Trajectory")
      .def_static("polygon", &polygon, py::arg("vertices"), py::arg("particle") = ParticleParams{},
                  "Polygon through rows (t, x, y, z).")
      .def_static(
          "from_json",
          [](const std::string& text, ParticleParams p) { return trajectory_from_json(text, p); }, py::arg("text"),
          py::arg("particle") = ParticleParams{})
      .def("to_json", &trajectory_to_json)
      .def_property_readonly("particle", &PiecewiseTrajectory::particle)
      .def_property_readonly("t_start", &PiecewiseTrajectory::t_start)
      .def_property_readonly("t_end", &PiecewiseTrajectory::t_end)
      .def("junctions", &PiecewiseTrajectory::junctions)
      .def("position", [](const PiecewiseTrajectory& tr, double t) { return tr.path().position(t); })
      .def("velocity", [](const PiecewiseTrajectory& tr, double t) { return tr.path().derivative(t, 1); })
      .def("__len__", [](const PiecewiseTrajectory& tr) { return tr.segments().size(); });

  py::class_<ConeSolution>(m, "ConeSolution")
      .def_readonly("t", &ConeSolution::t_k)
      .def_readonly("r", &ConeSolution::r)
      .def_readonly("n_hat", &ConeSolution::n_hat)
      .def_readonly("x", &ConeSolution::x)
      .def_readonly("v", &ConeSolution::v)
      .def_readonly("dilation", &ConeSolution::dilation);

  m.def(
      "cone_time",
      [](const PiecewiseTrajectory& tr, double t, const Vec3& x, Branch b) { return cone_time(tr, Event{t, x}, b); },
      py::arg("trajectory"), py::arg("t"), py::arg("x"), py::arg("branch") = Branch::Retarded);

  py::class_<BoundaryData>(m, "Boundary")
      .def(py::init(&boundary_of), py::arg("window1") = py::none(), py::arg("window2") = py::none(),
           py::arg("history1") = py::none(), py::arg("history2") = py::none(), py::arg("k2") = 0.0,
           py::arg("k1") = 0.0);

  m.def(
      "action",
      [](const PiecewiseTrajectory& a, const PiecewiseTrajectory& b, double t0, double t1,
         const std::optional<BoundaryData>& bd) { return action(a, b, {t0, t1}, bd.value_or(BoundaryData{})); },
      py::arg("traj1"), py::arg("traj2"), py::arg("t0"), py::arg("t1"), py::arg("boundary") = py::none());

  m.def("gah_residual", &gah_residual, py::arg("traj1"), py::arg("traj2"), py::arg("t"), py::arg("n"),
        py::arg("R") = 0.0, py::arg("guard") = kGuardBand);
  m.def(
      "sphere_flux",
      [](const PiecewiseTrajectory& a, const PiecewiseTrajectory& b, double t, double R, int n_theta, int n_phi,
         FieldMode mode) { return sphere_flux(a, b, t, R, sphere_mesh(n_theta, n_phi), mode); },
      py::arg("traj1"), py::arg("traj2"), py::arg("t"), py::arg("R"), py::arg("n_theta") = 16,
      py::arg("n_phi") = 32, py::arg("mode") = FieldMode::TimeSymmetric);

  m.def(
      "rigidity_violation",
      [](const Vec3& v1, const Vec3& v2, const std::vector<Vec3>& dirs) {
        return rigidity_check(v1, v2, dirs).max_violation;
      },
      py::arg("v1"), py::arg("v2"), py::arg("directions"));
  m.def("cone_directions", &cone_directions, py::arg("axis"), py::arg("half_angle"), py::arg("count"));

  m.def(
      "sewing_chain",
      [](const PiecewiseTrajectory& a, const PiecewiseTrajectory& b, int particle, double t, ChainDirection dir,
         int count) {
        const auto chain = sewing_chain(a, b, {particle, t}, dir, count);
        std::vector<std::pair<int, double>> links;
        for (const auto& l : chain.links) links.emplace_back(l.particle, l.t);
        return py::make_tuple(links, chain.truncated);
      },
      py::arg("traj1"), py::arg("traj2"), py::arg("particle"), py::arg("t"),
      py::arg("direction") = ChainDirection::Forward, py::arg("count") = 10,
      "Returns (links, truncated) with links as (particle, t) pairs.");

  m.def("commands", &cli::commands);
  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& scenario,
         std::optional<std::filesystem::path> out_dir) {
        std::ostringstream out, err;
        cli::RunOptions opts;
        opts.out_dir = std::move(out_dir);
        opts.quiet = true;
        const int code = cli::run(command, scenario, opts, out, err);
        return py::make_tuple(code, err.str());
      },
      py::arg("command"), py::arg("scenario"), py::arg("out_dir") = py::none(),
      "Runs a command-line action; returns (exit code, diagnostics).");
}
