// Python bindings for the vmlab core.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vmlab/asymptotics.hpp"
#include "vmlab/error.hpp"
#include "vmlab/faraday.hpp"
#include "vmlab/fieldmodels.hpp"
#include "vmlab/io.hpp"
#include "vmlab/kinematics.hpp"
#include "vmlab/lorentz.hpp"
#include "vmlab/scenario.hpp"

namespace py = pybind11;
using namespace vmlab;

namespace {

using Arr3 = std::array<double, 3>;

Vec3 vec(const Arr3& a) { return Vec3{{a[0], a[1], a[2]}}; }
Arr3 arr(const Vec3& v) { return {v[0], v[1], v[2]}; }

py::array_t<double> values(const std::vector<double>& v, int n) {
  py::array_t<double> out({n, n, n});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict profile_dict(const asymptotics::QProfile& q) {
  py::dict d;
  d["n"] = q.grid.n;
  d["radius"] = q.grid.radius;
  d["time"] = q.time;
  d["cauchy"] = q.cauchy;
  d["support_radius"] = q.support_radius;
  d["noise_total"] = q.noise_total;
  d["total"] = values(q.total, q.grid.n);
  py::dict species;
  for (const auto& s : q.species) {
    py::dict e;
    e["mass"] = s.mass;
    e["charge"] = s.charge;
    e["noise"] = s.noise;
    e["values"] = values(s.values, q.grid.n);
    species[py::str(s.label)] = e;
  }
  d["species"] = species;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relativistic Vlasov-Maxwell asymptotics laboratory (C++ core)";

  auto base = py::register_exception<Error>(m, "VmlabError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<RuntimeFailure>(m, "RuntimeFailure", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());

  m.def("version", [] { return std::string(scenario::version()); });

  // kinematics
  m.def("energy", [](const Arr3& v, double mass) { return kin::energy(vec(v), mass); }, py::arg("v"),
        py::arg("mass") = 1.0);
  m.def("hat", [](const Arr3& v, double mass) { return arr(kin::hat(vec(v), mass)); }, py::arg("v"),
        py::arg("mass") = 1.0, "Relativistic velocity v/sqrt(m^2 + |v|^2).");
  m.def("check", [](const Arr3& u) { return arr(kin::check(vec(u))); }, py::arg("u"),
        "Inverse of hat at unit mass; raises DomainError for |u| >= 1.");

  // lorentz
  py::class_<lorentz::LorentzTransform>(m, "LorentzTransform")
      .def(py::init<>())
      .def_static("from_matrix", &lorentz::LorentzTransform::from_matrix, py::arg("m"), py::arg("tol") = 1e-10)
      .def_property_readonly("matrix", &lorentz::LorentzTransform::matrix)
      .def("inverse", &lorentz::LorentzTransform::inverse)
      .def("apply",
           [](const lorentz::LorentzTransform& a, double t, const Arr3& x) {
             const FourVector y = a(FourVector{t, vec(x)});
             return std::make_pair(y.t, arr(y.x));
           },
           py::arg("t"), py::arg("x"))
      .def("metric_defect", &lorentz::LorentzTransform::metric_defect)
      .def("__mul__", [](const lorentz::LorentzTransform& a, const lorentz::LorentzTransform& b) { return a * b; });
  m.def("boost_x", &lorentz::boost_x, py::arg("phi"));
  m.def("embed_rotation", &lorentz::embed_rotation, py::arg("r"), py::arg("tol") = 1e-10);
  m.def("axis_angle", [](const Arr3& axis, double angle) { return lorentz::axis_angle(vec(axis), angle); },
        py::arg("axis"), py::arg("angle"));
  m.def("decompose",
        [](const lorentz::LorentzTransform& a) {
          const auto d = lorentz::decompose(a);
          return py::make_tuple(d.r1, d.phi, d.r2);
        },
        py::arg("a"), "Returns (r1, phi, r2) with a = r1 * boost_x(phi) * r2.");
  m.def("boost_to_rest", [](double t, const Arr3& x) { return lorentz::boost_to_rest(FourVector{t, vec(x)}); },
        py::arg("t"), py::arg("x"));
  m.def("onset_time", &lorentz::onset_time, py::arg("a"), py::arg("support_k"));

  // faraday
  m.def("transform_field",
        [](const Arr3& e, const Arr3& b, const lorentz::LorentzTransform& a) {
          const EMField f = faraday::transform(EMField{vec(e), vec(b)}, a);
          return std::make_pair(arr(f.e), arr(f.b));
        },
        py::arg("e"), py::arg("b"), py::arg("a"), "Fields seen in the frame related by a.");
  m.def("field_invariants",
        [](const Arr3& e, const Arr3& b) {
          const EMField f{vec(e), vec(b)};
          return std::make_pair(faraday::invariant_b2_minus_e2(f), faraday::invariant_e_dot_b(f));
        },
        py::arg("e"), py::arg("b"), "Returns (|B|^2 - |E|^2, E.B).");

  // field models and the Gauss identity
  py::class_<fields::CoulombPair>(m, "CoulombPair")
      .def("ebb", [](const fields::CoulombPair& c, const Arr3& v) { return arr(c.profile.ebb(vec(v))); })
      .def("q", [](const fields::CoulombPair& c, const Arr3& v) { return c.charge.value(vec(v)); });
  m.def("coulomb_pair", &fields::coulomb_pair, py::arg("q"), py::arg("delta"));
  m.def("coulomb_gauss_identity",
        [](const fields::CoulombPair& c, double delta) {
          const auto s = asymptotics::gauss_identity([&](const Vec3& v) { return c.charge.value(v); },
                                                     [&](const Vec3& v) { return c.profile.ebb(v); }, delta);
          return std::make_pair(s.lhs, s.rhs);
        },
        py::arg("pair"), py::arg("delta"), "Returns (volume side, surface side) of the Gauss identity.");

  // transformation law
  m.def("q_transform_value",
        [](const std::function<double(Arr3)>& q, const lorentz::LorentzTransform& a, const Arr3& v) {
          return asymptotics::q_transform_value([&](const Vec3& u) { return q(arr(u)); }, a, vec(v));
        },
        py::arg("q"), py::arg("a"), py::arg("v"));

  // artifacts and scenarios (reports cross as JSON text)
  m.def("read_profile", [](const std::filesystem::path& p) { return profile_dict(io::read_profile(p)); },
        py::arg("path"));
  m.def("_run_scenario",
        [](const std::filesystem::path& config) {
          py::gil_scoped_release release;
          const auto r = scenario::run_scenario(config);
          return std::make_pair(r.dir, scenario::dump(r.report));
        },
        py::arg("config"));
  m.def("_run_scenario_json",
        [](const std::string& text) {
          const auto c = scenario::parse_config(scenario::Json::parse(text));
          py::gil_scoped_release release;
          const auto r = scenario::run_scenario(c);
          return std::make_pair(r.dir, scenario::dump(r.report));
        },
        py::arg("text"));
  m.def("_boost_rerun",
        [](const std::filesystem::path& dir, double phi) {
          py::gil_scoped_release release;
          const auto r = scenario::boost_rerun(dir, phi);
          return std::make_pair(r.dir, scenario::dump(r.report));
        },
        py::arg("dir"), py::arg("phi"));
  m.def("_report", [](const std::filesystem::path& dir) { return scenario::dump(scenario::report(dir)); },
        py::arg("dir"));
}
