#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scenario.hpp"

namespace qsnegf::cli {

namespace {

using json = nlohmann::json;

ProtocolSegment ramp_segment(const std::string& name, double from, double to, int steps = 16) {
  ProtocolSegment s;
  s.ramps[name] = Ramp{from, to, RampShape::linear};
  s.steps = steps;
  return s;
}

std::vector<double> grid(double start, double end, double step) {
  std::vector<double> out;
  const long n = std::lround(std::floor((end - start) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(start + step * static_cast<double>(k));
  return out;
}

void use_two_level(ScenarioConfig& c) {
  c.model = ModelKind::two_level;
  c.mu = 1.0;
  c.params = {{"eps1", 0.0}, {"eps2", 0.0}, {"w", 0.5}, {"V1", 0.4}, {"V2", 1.2}};
  c.protocol = {ramp_segment("eps1", 0.0, 1.5)};
  c.sweep["eps2"] = grid(-1.5, 1.5, 0.05);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {"scenario", "ensemble", "model", "lead",       "protocol",
                                             "numerics", "alphas",   "sweep", "tolerances", "out"};
  return keys;
}

std::string path_join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where, "must be finite");
  return v;
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where, "expected an integer");
  return j.get<int>();
}

std::string string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where, "expected a string");
  return j.get<std::string>();
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(path_join(where, key), "unknown field");
  }
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return parse_grid(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where, e.what());
    }
  }
  if (!j.is_array()) throw ConfigError(where, "expected an array of numbers or a start:end:step string");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void merge(ScenarioConfig& c, const json& root) {
  for (const auto& [key, value] : root.items()) {
    (void)value;
    if (!known_keys().count(key)) throw ConfigError(key, "unknown field");
  }

  if (root.contains("ensemble")) {
    const json& e = root["ensemble"];
    only_keys(e, "ensemble", {"T", "mu"});
    if (e.contains("T")) c.temperature = number(e["T"], "ensemble.T");
    if (e.contains("mu")) c.mu = number(e["mu"], "ensemble.mu");
  }
  if (!(c.temperature > 0.0)) throw ConfigError("ensemble.T", "must be positive");

  if (root.contains("model")) {
    const json& m = root["model"];
    only_keys(m, "model", {"kind", "params"});
    if (m.contains("kind")) {
      const std::string kind = string(m["kind"], "model.kind");
      if (kind == "resonant_level") {
        if (c.model != ModelKind::resonant_level) c.params = {{"eps_s", 0.0}, {"V", 0.6}};
        c.model = ModelKind::resonant_level;
      } else if (kind == "two_level") {
        if (c.model != ModelKind::two_level)
          c.params = {{"eps1", 0.0}, {"eps2", 0.0}, {"w", 0.5}, {"V1", 0.4}, {"V2", 1.2}};
        c.model = ModelKind::two_level;
      } else {
        throw ConfigError("model.kind", "expected resonant_level or two_level, got '" + kind + "'");
      }
    }
    if (m.contains("params")) {
      const json& p = m["params"];
      if (!p.is_object()) throw ConfigError("model.params", "expected an object");
      for (const auto& [name, value] : p.items()) {
        if (!c.params.count(name)) throw ConfigError("model.params." + name, "not a parameter of this model");
        c.params[name] = number(value, "model.params." + name);
      }
    }
  }

  if (root.contains("lead")) {
    const json& l = root["lead"];
    only_keys(l, "lead", {"t0", "e0", "spectrum"});
    if (l.contains("t0")) c.lead.hopping = number(l["t0"], "lead.t0");
    if (l.contains("e0")) c.lead.band_center = number(l["e0"], "lead.e0");
    if (l.contains("spectrum")) {
      const std::string s = string(l["spectrum"], "lead.spectrum");
      if (s == "chain")
        c.lead.spectrum = LeadSpectrum::chain;
      else if (s == "flat")
        c.lead.spectrum = LeadSpectrum::flat;
      else
        throw ConfigError("lead.spectrum", "expected chain or flat, got '" + s + "'");
    }
    if (!(c.lead.hopping > 0.0)) throw ConfigError("lead.t0", "must be positive");
  }

  if (root.contains("protocol")) {
    const json& segs = root["protocol"];
    if (!segs.is_array() || segs.empty()) throw ConfigError("protocol", "expected a non-empty array of segments");
    std::map<std::string, double> current = c.params;
    std::set<std::string> ramped;
    c.protocol.clear();
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const std::string where = "protocol[" + std::to_string(k) + "]";
      only_keys(segs[k], where, {"ramps", "steps"});
      ProtocolSegment seg;
      if (segs[k].contains("steps")) seg.steps = integer(segs[k]["steps"], where + ".steps");
      if (seg.steps < 1) throw ConfigError(where + ".steps", "must be >= 1");
      if (!segs[k].contains("ramps")) throw ConfigError(where, "missing field 'ramps'");
      const json& ramps = segs[k]["ramps"];
      if (!ramps.is_object()) throw ConfigError(where + ".ramps", "expected an object");
      for (const auto& [name, r] : ramps.items()) {
        const std::string rw = where + ".ramps." + name;
        if (!current.count(name)) throw ConfigError(rw, "not a parameter of this model");
        only_keys(r, rw, {"from", "to", "shape"});
        Ramp ramp;
        ramp.from = r.contains("from") ? number(r["from"], rw + ".from") : current[name];
        if (!r.contains("to")) throw ConfigError(rw, "missing field 'to'");
        ramp.to = number(r["to"], rw + ".to");
        if (r.contains("shape")) {
          const std::string shape = string(r["shape"], rw + ".shape");
          if (shape == "linear")
            ramp.shape = RampShape::linear;
          else if (shape == "smoothstep")
            ramp.shape = RampShape::smoothstep;
          else
            throw ConfigError(rw + ".shape", "expected linear or smoothstep");
        }
        if (!ramped.count(name)) {
          // A parameter's first ramp also fixes its initial value.
          c.params[name] = ramp.from;
        } else if (std::abs(ramp.from - current[name]) > 1e-12) {
          throw ConfigError(rw + ".from", "does not continue from the previous value " + std::to_string(current[name]));
        }
        ramped.insert(name);
        current[name] = ramp.to;
        seg.ramps[name] = ramp;
      }
      c.protocol.push_back(seg);
    }
  }

  if (root.contains("numerics")) {
    const json& n = root["numerics"];
    only_keys(n, "numerics", {"n_theta", "u_steps", "threads"});
    if (n.contains("n_theta")) c.n_theta = integer(n["n_theta"], "numerics.n_theta");
    if (n.contains("u_steps")) c.u_steps = integer(n["u_steps"], "numerics.u_steps");
    if (n.contains("threads")) c.threads = integer(n["threads"], "numerics.threads");
  }
  if (c.n_theta < 1) throw ConfigError("numerics.n_theta", "must be positive");
  if (c.u_steps < 0) throw ConfigError("numerics.u_steps", "must be >= 0");

  if (root.contains("alphas")) c.alphas = number_list(root["alphas"], "alphas");
  for (double a : c.alphas)
    if (a < 0.0 || a > 1.0) throw ConfigError("alphas", "values must lie in [0, 1]");

  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    if (!s.is_object()) throw ConfigError("sweep", "expected an object");
    for (const auto& [name, values] : s.items()) c.sweep[name] = number_list(values, "sweep." + name);
  }

  if (root.contains("tolerances")) {
    const json& t = root["tolerances"];
    if (!t.is_object()) throw ConfigError("tolerances", "expected an object");
    for (const auto& [name, value] : t.items()) {
      const double v = number(value, "tolerances." + name);
      if (!(v > 0.0)) throw ConfigError("tolerances." + name, "must be positive");
      c.tolerances[name] = v;
    }
  }

  if (root.contains("out")) c.out = string(root["out"], "out");
}

}  // namespace

ModelDefinition ScenarioConfig::model_definition() const {
  ModelDefinition m = model == ModelKind::resonant_level
                          ? ModelDefinition::resonant_level(params.at("eps_s"), params.at("V"), lead)
                          : ModelDefinition::two_level(params.at("eps1"), params.at("eps2"), params.at("w"),
                                                       params.at("V1"), params.at("V2"), lead);
  return m;
}

ProtocolOptions ScenarioConfig::protocol_options() const {
  ProtocolOptions o;
  o.quadrature.n_theta = n_theta;
  o.quadrature.n_max = std::max(o.quadrature.n_max, 16 * n_theta);
  o.u_steps = u_steps;
  o.threads = threads;
  return o;
}

const std::vector<double>& ScenarioConfig::values(const std::string& key) const {
  const auto it = sweep.find(key);
  if (it == sweep.end() || it->second.empty())
    throw ConfigError("sweep." + key, "scenario '" + scenario + "' needs a non-empty list");
  return it->second;
}

double ScenarioConfig::tolerance(const std::string& check, double fallback) const {
  const auto it = tolerances.find(check);
  return it == tolerances.end() ? fallback : it->second;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "fig1a",       "fig1b",           "fig2a",        "fig2b",     "fig3",
      "fig4",        "selfenergy",      "tls-sumrule",  "tls-populations",
      "tls-firstlaw", "broadband",      "oracle-convergence"};
  return names;
}

ScenarioConfig default_config(const std::string& scenario) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), scenario) == names.end())
    throw ConfigError("scenario", "unknown scenario '" + scenario + "'");
  ScenarioConfig c;
  c.scenario = scenario;
  c.params = {{"eps_s", 0.0}, {"V", 0.6}};
  c.alphas = grid(0.0, 1.0, 0.1);
  c.out = std::filesystem::path("out") / scenario;

  if (scenario == "fig1a" || scenario == "fig1b") {
    const bool a = scenario == "fig1a";
    c.params["eps_s"] = a ? 1.0 : -1.5;
    c.protocol = {ramp_segment("eps_s", a ? 1.0 : -1.5, a ? 1.5 : -1.0)};
    c.sweep["V"] = {0.3, 0.6, 0.9, 1.2};
  } else if (scenario == "fig2a") {
    c.params = {{"eps_s", -1.0}, {"V", 1.0}};
    c.alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
    c.sweep["T"] = {0.01, 0.02, 0.04, 0.08, 0.15, 0.3, 0.6, 1.0};
  } else if (scenario == "fig2b") {
    c.params = {{"eps_s", 0.0}, {"V", 1.0}};
    c.sweep["eps_s"] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    c.sweep["beta"] = {5.0, 10.0, 25.0, 50.0, 100.0};
  } else if (scenario == "fig3" || scenario == "fig4") {
    c.sweep["eps_s_end"] = {1.0};
    c.sweep["V_end"] = {0.4};
  } else if (scenario == "selfenergy") {
    c.sweep["energy"] = grid(-3.5, 3.5, 0.05);
  } else if (scenario == "tls-sumrule" || scenario == "tls-populations" || scenario == "tls-firstlaw") {
    use_two_level(c);
    if (scenario == "tls-populations") c.sweep["eps2"] = {-0.5, 0.0, 0.5};
    if (scenario == "tls-firstlaw") c.sweep["eps2"] = grid(-1.5, 1.5, 0.25);
  } else if (scenario == "broadband") {
    c.protocol = {ramp_segment("V", 0.6, 0.4)};
    c.sweep["t0"] = {2.5, 5.0, 10.0, 20.0};
  } else if (scenario == "oracle-convergence") {
    c.sweep["eps_s"] = {1.0, 1.5, -1.0, -1.5};
    c.sweep["V"] = {0.3, 0.6, 0.9, 1.2};
    c.sweep["L"] = {100, 200, 400, 800};
  }
  return c;
}

ScenarioConfig parse_config(const std::string& text, const std::string& fallback) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), e.what());
  }
  if (!root.is_object()) throw ConfigError("<root>", "expected a JSON object");
  std::string name = fallback;
  if (root.contains("scenario")) name = string(root["scenario"], "scenario");
  if (name.empty()) throw ConfigError("scenario", "missing; name a built-in scenario");
  ScenarioConfig c = default_config(name);
  merge(c, root);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path, const std::string& fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), fallback);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
  }
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad grid '" + spec + "': expected start:end:step");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw std::invalid_argument("bad grid '" + spec + "': expected start:end:step");
  if (!(parts[2] > 0.0) || parts[1] < parts[0])
    throw std::invalid_argument("bad grid '" + spec + "': need start <= end and step > 0");
  return grid(parts[0], parts[1], parts[2]);
}

}  // namespace qsnegf::cli
