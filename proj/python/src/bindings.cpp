#include <pybind11/complex.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nilmap/dynamics.hpp"
#include "nilmap/families.hpp"
#include "nilmap/inversion.hpp"
#include "nilmap/jacobian.hpp"
#include "nilmap/spec_io.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace nilmap;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Rational rat(const py::handle& h) { return parse_rational(py::str(h).cast<std::string>()); }

std::vector<Rational> rats(const py::sequence& s) {
  std::vector<Rational> out;
  for (auto h : s) out.push_back(rat(h));
  return out;
}

py::object fraction(const Rational& q) { return py::module_::import("fractions").attr("Fraction")(to_string(q)); }

ScanConfig scan_config(std::size_t samples, std::uint64_t seed, double box, double exclusion) {
  ScanConfig c;
  c.num_samples = samples;
  c.rng_seed = seed;
  c.box_halfwidth = box;
  c.plane_exclusion = exclusion;
  c.validate();
  return c;
}

const HurwitzFieldSpec& hurwitz_params(const FamilySpec& s) {
  if (auto* h = std::get_if<HurwitzFieldSpec>(&s.params)) return *h;
  throw SpecError("not a hurwitz family spec");
}

}  // namespace

PYBIND11_MODULE(_nilmap, m) {
  m.doc() = "Exact polynomial maps with nilpotent Jacobian, formal inverses and almost Hurwitz fields";
  m.attr("__version__") = NILMAP_VERSION;

  py::register_exception<InversionError>(m, "InversionError", PyExc_RuntimeError);
  py::register_exception<TermCapExceeded>(m, "TermCapExceeded", PyExc_RuntimeError);

  m.def("term_cap", &term_cap);
  m.def("set_term_cap", &set_term_cap, "cap"_a);

  py::class_<Polynomial>(m, "Polynomial")
      .def(py::init(&Polynomial::parse), "text"_a, "nvars"_a)
      .def_property_readonly("nvars", &Polynomial::nvars)
      .def_property_readonly("degree", &Polynomial::degree)
      .def("__len__", &Polynomial::size)
      .def("partial", [](const Polynomial& p, std::size_t i) { return p.partial(i - 1); }, "i"_a,
           "Derivative in x_i (1-based).")
      .def("compose", [](const Polynomial& p, const std::vector<Polynomial>& s) { return p.compose(s); })
      .def("__call__", [](const Polynomial& p, const std::vector<double>& x) { return p.eval_float(x); })
      .def("eval_exact", [](const Polynomial& p, const py::sequence& x) { return fraction(p.eval_exact(rats(x))); })
      .def("to_json", [](const Polynomial& p) { return to_py(p.to_json()); })
      .def(-py::self)
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self)
      .def(py::self == py::self)
      .def("__pow__", [](const Polynomial& p, unsigned k) { return p.pow(k); })
      .def("__str__", &Polynomial::to_string)
      .def("__repr__", [](const Polynomial& p) { return "Polynomial('" + p.to_string() + "', " + std::to_string(p.nvars()) + ")"; });

  py::class_<PolyMap>(m, "PolyMap")
      .def(py::init<std::vector<Polynomial>>(), "components"_a)
      .def(py::init([](const std::vector<std::string>& texts) {
             std::vector<Polynomial> c;
             for (const auto& t : texts) c.push_back(Polynomial::parse(t, texts.size()));
             return PolyMap(std::move(c));
           }),
           "texts"_a)
      .def_static("identity", &PolyMap::identity, "n"_a)
      .def_property_readonly("arity", &PolyMap::arity)
      .def_property_readonly("degree", &PolyMap::degree)
      .def_property_readonly("components", [](const PolyMap& f) {
        return std::vector<Polynomial>(f.components().begin(), f.components().end());
      })
      .def("__getitem__", [](const PolyMap& f, std::size_t i) {
        if (i >= f.arity()) throw py::index_error();
        return f[i];
      })
      .def("__len__", &PolyMap::arity)
      .def("compose", &PolyMap::compose, "inner"_a)
      .def("__call__", [](const PolyMap& f, const std::vector<double>& x) { return f.eval_float(x); })
      .def("eval_exact", [](const PolyMap& f, const py::sequence& x) {
        py::list out;
        for (const auto& v : f.eval_exact(rats(x))) out.append(fraction(v));
        return out;
      })
      .def("to_json", [](const PolyMap& f) { return to_py(f.to_json()); })
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def("__mul__", [](const PolyMap& f, const py::object& c) { return f * rat(c); })
      .def("__rmul__", [](const PolyMap& f, const py::object& c) { return f * rat(c); })
      .def(py::self == py::self)
      .def("__str__", [](const PolyMap& f) {
        std::string s = "(";
        for (std::size_t i = 0; i < f.arity(); ++i) s += (i ? ", " : "") + f[i].to_string();
        return s + ")";
      });

  m.def("is_nilpotent", [](const PolyMap& H) { return to_py(is_nilpotent(jacobian_of(H)).to_json()); }, "H"_a,
        "Nilpotency certificate of JH as a dict.");
  m.def("rows_dependent", [](const PolyMap& H) -> py::object {
        auto w = rows_dependent_over_R(jacobian_of(H));
        if (!w) return py::none();
        py::list out;
        for (const auto& c : *w) out.append(fraction(c));
        return out;
      }, "H"_a);

  m.def("formal_inverse", [](const PolyMap& F, const py::object& lambda, std::size_t max_iter, bool verify_left) {
        InverseOptions o;
        o.max_iter = max_iter;
        o.verify_left = verify_left;
        const Rational lam = rat(lambda);
        InverseBundle b;
        {
          py::gil_scoped_release release;
          b = formal_inverse(F, lam, o);
        }
        return py::make_tuple(b.G, to_py(b.to_json()));
      },
      "F"_a, "lam"_a, "max_iter"_a = 64, "verify_left"_a = true);
  m.def("preservation_check", [](const PolyMap& F, const py::object& lambda) {
        return to_py(preservation_check(F, rat(lambda)).to_json());
      }, "F"_a, "lam"_a);

  py::class_<FamilySpec>(m, "FamilySpec")
      .def_readonly("family", &FamilySpec::family)
      .def_property_readonly("dimension", &FamilySpec::dimension)
      .def_property_readonly("lam", [](const FamilySpec& s) -> py::object {
        return s.lambda ? fraction(*s.lambda) : py::none();
      })
      .def("nilpotent_part", &FamilySpec::nilpotent_part)
      .def("primary_map", &FamilySpec::primary_map)
      .def("shifted_map", [](const FamilySpec& s, const py::object& lambda) {
        return s.shifted_program(rat(lambda)).expand();
      }, "lam"_a);
  m.def("parse_spec", [](const std::string& text) { return parse_family_spec(nlohmann::json::parse(text)); },
        "text"_a);
  m.def("load_spec", [](const std::string& path) { return load_family_spec(path); }, "path"_a);

  m.def("cegmh_field", &cegmh_field, "n"_a = 3);
  m.def("alpha_bound", [](const FamilySpec& s) { return fraction(alpha_bound(hurwitz_params(s))); }, "spec"_a);
  m.def("divergence_numerator", [](const FamilySpec& s, const py::object& alpha) {
        const auto& h = hurwitz_params(s);
        return divergence_numerator(build_hurwitz_F(h), build_density(h, rat(alpha)));
      }, "spec"_a, "alpha"_a);

  m.def("eigenvalues_at", [](const PolyMap& F, const std::vector<double>& x) {
        return eigenvalues(jacobian_at(F, x));
      }, "F"_a, "x"_a);
  m.def("hurwitz_scan", [](const PolyMap& F, std::size_t samples, std::uint64_t seed, double box, double exclusion) {
        auto cfg = scan_config(samples, seed, box, exclusion);
        ScanReport r;
        {
          py::gil_scoped_release release;
          r = hurwitz_scan(F, cfg);
        }
        return to_py(r.to_json());
      },
      "F"_a, "samples"_a = 10000, "seed"_a = 42, "box"_a = 2.0, "plane_exclusion"_a = 1e-3);
  m.def("density_scan", [](const Polynomial& S, std::size_t samples, std::uint64_t seed, double box, double exclusion) {
        return to_py(density_scan(S, scan_config(samples, seed, box, exclusion)).to_json());
      },
      "S"_a, "samples"_a = 10000, "seed"_a = 42, "box"_a = 2.0, "plane_exclusion"_a = 1e-3);

  m.def("integrate", [](const PolyMap& F, const std::vector<double>& x0, double t_max, bool record) {
        IntegrateOptions o;
        o.t_max = t_max;
        o.record = record;
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = integrate(F, x0, o);
        }
        return py::dict("times"_a = tr.times, "states"_a = tr.states, "terminated"_a = to_string(tr.terminated),
                        "final_norm"_a = tr.final_norm);
      },
      "F"_a, "x0"_a, "t_max"_a = 500.0, "record"_a = true);
  m.def("attractor_experiment", [](const PolyMap& F, std::size_t num_traj, std::uint64_t seed, double t_max) {
        ScanConfig cfg;
        cfg.rng_seed = seed;
        AttractorOptions o;
        o.integrate.t_max = t_max;
        o.integrate.record = false;
        AttractorSummary s;
        {
          py::gil_scoped_release release;
          s = attractor_experiment(F, num_traj, cfg, o);
        }
        return to_py(s.to_json());
      },
      "F"_a, "num_traj"_a = 100, "seed"_a = 42, "t_max"_a = 500.0);
}
