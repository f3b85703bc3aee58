#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qsnegf/greens.hpp"
#include "qsnegf/kernels.hpp"
#include "qsnegf/oracle.hpp"
#include "qsnegf/protocol.hpp"
#include "qsnegf/rates.hpp"
#include "scenario.hpp"

namespace py = pybind11;
using namespace qsnegf;

namespace {

QuadratureOptions quadrature(int n_theta) {
  QuadratureOptions q;
  q.n_theta = n_theta;
  q.n_max = std::max(q.n_max, 16 * n_theta);
  return q;
}

FrozenSystem frozen(const ModelDefinition& model, const std::vector<double>& params) {
  if (params.size() != model.parameter_names().size())
    throw py::value_error("expected " + std::to_string(model.parameter_names().size()) + " parameters");
  return FrozenSystem(model.frozen(params), 0.0);
}

py::dict rates_dict(const RateVector& r) {
  py::dict d;
  d["Wext"] = r.Wext;
  d["OmegaS"] = r.OmegaS;
  d["US"] = r.US;
  d["SS"] = r.SS;
  d["NS"] = r.NS;
  d["WS"] = r.WS();
  d["dOmegaR"] = r.dOmegaR;
  d["dNR"] = r.dNR;
  d["HS_power"] = r.HS_power;
  d["HSR_power"] = r.HSR_power;
  d["IWS"] = r.IWS;
  d["IWS_explicit"] = r.IWS_explicit;
  return d;
}

py::dict output_dict(const cli::ScenarioOutput& out) {
  py::list checks;
  for (const auto& c : out.checks) {
    py::dict d;
    d["name"] = c.name;
    d["value"] = c.value;
    d["tolerance"] = c.tolerance;
    d["pass"] = c.pass();
    checks.append(d);
  }
  py::dict tables;
  for (const auto& t : out.tables) {
    py::array_t<double> rows({t.rows.size(), t.columns.size()});
    auto m = rows.mutable_unchecked<2>();
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      for (std::size_t j = 0; j < t.columns.size(); ++j) m(i, j) = t.rows[i][j];
    py::dict d;
    d["columns"] = t.columns;
    d["rows"] = rows;
    tables[py::str(t.name)] = d;
  }
  py::dict d;
  d["scenario"] = out.scenario;
  d["checks"] = checks;
  d["tables"] = tables;
  d["pass"] = out.pass();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quasi-static NEGF thermodynamics of a driven level coupled to tight-binding leads";

  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<BoundStateHit>(m, "BoundStateHit", PyExc_ArithmeticError);

  py::class_<Ensemble>(m, "Ensemble")
      .def(py::init<double, double>(), py::arg("T"), py::arg("mu") = 0.0)
      .def_property_readonly("T", &Ensemble::temperature)
      .def_property_readonly("mu", &Ensemble::mu)
      .def_property_readonly("beta", &Ensemble::beta)
      .def("__repr__", [](const Ensemble& e) {
        return "Ensemble(T=" + std::to_string(e.temperature()) + ", mu=" + std::to_string(e.mu()) + ")";
      });

  m.def("fermi", py::vectorize([](Ensemble ens, double e) { return fermi(ens, e); }), py::arg("ens"),
        py::arg("e"));
  m.def("entropy_kernel", py::vectorize([](Ensemble ens, double e) { return entropy_kernel(ens, e); }),
        py::arg("ens"), py::arg("e"));
  m.def("grand_kernel", py::vectorize([](Ensemble ens, double e) { return grand_kernel(ens, e); }),
        py::arg("ens"), py::arg("e"));

  py::enum_<LeadSpectrum>(m, "LeadSpectrum").value("chain", LeadSpectrum::chain).value("flat", LeadSpectrum::flat);

  py::class_<ChainReservoir>(m, "ChainReservoir")
      .def(py::init([](double t0, double e0, LeadSpectrum spectrum) {
             ChainReservoir r;
             r.hopping = t0;
             r.band_center = e0;
             r.spectrum = spectrum;
             r.validate();
             return r;
           }),
           py::arg("t0") = 1.25, py::arg("e0") = 0.0, py::arg("spectrum") = LeadSpectrum::chain)
      .def_readonly("t0", &ChainReservoir::hopping)
      .def_readonly("e0", &ChainReservoir::band_center)
      .def_readonly("spectrum", &ChainReservoir::spectrum)
      .def_property_readonly("band", [](const ChainReservoir& r) {
        return std::make_pair(r.lower_edge(), r.upper_edge());
      });

  m.def(
      "self_energy",
      [](const ChainReservoir& lead, double V, double e) { return surface_sigma(lead, V, 0.0, e).sigma; },
      py::arg("lead"), py::arg("V"), py::arg("e"), "Advanced embedding self-energy Lambda + i Gamma/2.");

  py::enum_<ModelKind>(m, "ModelKind")
      .value("resonant_level", ModelKind::resonant_level)
      .value("two_level", ModelKind::two_level);

  py::class_<ModelDefinition>(m, "Model")
      .def_static("resonant_level", &ModelDefinition::resonant_level, py::arg("eps_s"), py::arg("V"),
                  py::arg("lead") = ChainReservoir{})
      .def_static("two_level", &ModelDefinition::two_level, py::arg("eps1"), py::arg("eps2"), py::arg("w"),
                  py::arg("V1"), py::arg("V2"), py::arg("lead") = ChainReservoir{})
      .def_property_readonly("kind", &ModelDefinition::kind)
      .def_property_readonly("parameter_names", &ModelDefinition::parameter_names)
      .def_property_readonly("initial", &ModelDefinition::initial)
      .def("set_initial", &ModelDefinition::set_initial, py::arg("name"), py::arg("value"));

  py::class_<BoundState>(m, "BoundState")
      .def_readonly("energy", &BoundState::energy)
      .def_property_readonly("system_weight", &BoundState::system_weight)
      .def("__repr__", [](const BoundState& b) {
        return "BoundState(energy=" + std::to_string(b.energy) + ", Z=" + std::to_string(b.system_weight()) + ")";
      });

  m.def(
      "bound_states", [](const ModelDefinition& model, const std::vector<double>& params) {
        return frozen(model, params).bound_states();
      },
      py::arg("model"), py::arg("params"));

  py::class_<Snapshot>(m, "Snapshot")
      .def_readonly("N_S", &Snapshot::N_S)
      .def_readonly("U_S", &Snapshot::U_S)
      .def_readonly("S_S", &Snapshot::S_S)
      .def_readonly("Omega_S", &Snapshot::Omega_S)
      .def_readonly("H_S", &Snapshot::H_S)
      .def_readonly("H_SR", &Snapshot::H_SR)
      .def_readonly("coherence", &Snapshot::coherence)
      .def_readonly("N_site", &Snapshot::N_site)
      .def_readonly("state_count", &Snapshot::state_count)
      .def_readonly("n_bound", &Snapshot::n_bound)
      .def_property_readonly("dOmega_R", &Snapshot::dOmega_R)
      .def_property_readonly("dN_R", &Snapshot::dN_R);

  m.def(
      "snapshot",
      [](const ModelDefinition& model, const std::vector<double>& params, const Ensemble& ens, int n_theta) {
        const FrozenSystem fs = frozen(model, params);
        py::gil_scoped_release release;
        return snapshot(fs, ens, quadrature(n_theta));
      },
      py::arg("model"), py::arg("params"), py::arg("ens"), py::arg("n_theta") = 400,
      "Equilibrium system state functions at fixed parameters.");

  py::enum_<RampShape>(m, "RampShape").value("linear", RampShape::linear).value("smoothstep", RampShape::smoothstep);

  py::class_<Ramp>(m, "Ramp")
      .def(py::init([](double from, double to, RampShape shape) { return Ramp{from, to, shape}; }), py::arg("start"),
           py::arg("end"), py::arg("shape") = RampShape::linear)
      .def_readwrite("start", &Ramp::from)
      .def_readwrite("end", &Ramp::to)
      .def_readwrite("shape", &Ramp::shape);

  py::class_<ProtocolSegment>(m, "Segment")
      .def(py::init([](std::map<std::string, Ramp> ramps, int steps) { return ProtocolSegment{std::move(ramps), steps}; }),
           py::arg("ramps"), py::arg("steps") = 16)
      .def_readwrite("ramps", &ProtocolSegment::ramps)
      .def_readwrite("steps", &ProtocolSegment::steps);

  py::class_<ScenarioResult>(m, "ProtocolResult")
      .def_readonly("parameter_names", &ScenarioResult::parameter_names)
      .def_readonly("initial", &ScenarioResult::initial)
      .def_readonly("final", &ScenarioResult::final)
      .def_readonly("thresholds", &ScenarioResult::thresholds)
      .def_property_readonly("W_ext", &ScenarioResult::W_ext)
      .def_property_readonly("W_S", &ScenarioResult::W_S)
      .def_property_readonly("delta_Omega_S", &ScenarioResult::delta_Omega_S)
      .def_property_readonly("delta_dOmega_R", &ScenarioResult::delta_dOmega_R)
      .def_property_readonly("total", [](const ScenarioResult& r) { return rates_dict(r.total); })
      .def_property_readonly("residuals",
                             [](const ScenarioResult& r) {
                               py::dict d;
                               d["sum_rule_rate"] = r.residuals.sum_rule_rate;
                               d["sum_rule"] = r.residuals.sum_rule;
                               d["first_law"] = r.residuals.first_law;
                               d["first_law_rate"] = r.residuals.first_law_rate;
                               d["power_sum"] = r.residuals.power_sum;
                               d["nonlocal_routes"] = r.residuals.nonlocal_routes;
                               return d;
                             })
      .def("samples", [](const ScenarioResult& r) {
        py::list out;
        for (const auto& s : r.samples) {
          py::dict d = rates_dict(s.rates);
          d["u"] = s.u;
          d["params"] = s.params;
          out.append(d);
        }
        return out;
      });

  m.def(
      "run_protocol",
      [](const ModelDefinition& model, const std::vector<ProtocolSegment>& segments, const Ensemble& ens, int n_theta,
         int u_steps, int threads) {
        ProtocolOptions o;
        o.quadrature = quadrature(n_theta);
        o.u_steps = u_steps;
        o.threads = threads;
        py::gil_scoped_release release;
        return run_protocol(model, Protocol{segments}, ens, o);
      },
      py::arg("model"), py::arg("segments"), py::arg("ens"), py::arg("n_theta") = 400, py::arg("u_steps") = 0,
      py::arg("threads") = 0, "Integrate every rate along a quasi-static protocol.");

  py::class_<FiniteThermo>(m, "FiniteThermo")
      .def_readonly("N_S", &FiniteThermo::N_S)
      .def_readonly("U_S", &FiniteThermo::U_S)
      .def_readonly("S_S", &FiniteThermo::S_S)
      .def_readonly("Omega_S", &FiniteThermo::Omega_S)
      .def_readonly("N", &FiniteThermo::N)
      .def_readonly("U", &FiniteThermo::U)
      .def_readonly("S", &FiniteThermo::S)
      .def_readonly("Omega", &FiniteThermo::Omega);

  m.def(
      "finite_thermo",
      [](const ModelDefinition& model, const std::vector<double>& params, std::size_t chain_length,
         const Ensemble& ens) {
        const FrozenSystem fs = frozen(model, params);
        py::gil_scoped_release release;
        return finite_thermo(FiniteUniverse::from_system(fs, chain_length), ens);
      },
      py::arg("model"), py::arg("params"), py::arg("chain_length"), py::arg("ens"),
      "Exact diagonalization of the system with every lead cut to chain_length sites.");

  m.def("scenario_names", &cli::scenario_names);
  m.def(
      "run_scenario",
      [](const std::string& scenario, const std::optional<std::string>& config, int threads) {
        cli::ScenarioConfig cfg = config ? cli::parse_config(*config, scenario) : cli::default_config(scenario);
        cfg.threads = threads;
        cli::ScenarioOutput out;
        {
          py::gil_scoped_release release;
          out = cli::run_scenario(cfg);
        }
        return output_dict(out);
      },
      py::arg("scenario") = "", py::arg("config") = py::none(), py::arg("threads") = 0,
      "Run a built-in scenario, optionally with JSON config text merged over its defaults.");
}
