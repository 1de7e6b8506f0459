#include "trapkit/config.hpp"

#include <cmath>
#include <initializer_list>
#include <json.hpp>

#include "trapkit/trace_io.hpp"
#include "trapkit/units.hpp"

namespace trapkit {

namespace {

using nlohmann::json;

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  return j;
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(join(path, key), "unknown key");
  }
}

/// {"value": number, "unit": "symbol"} -> Quantity, dimension-checked.
Quantity quantity(const json& obj, const std::string& key, const std::string& parent,
                  std::initializer_list<Dimension> dims) {
  const std::string path = join(parent, key);
  const json& leaf = obj.at(key);
  if (leaf.is_number()) throw ConfigError(path, "missing unit; write {\"value\": ..., \"unit\": ...}");
  require_object(leaf, path);
  reject_unknown(leaf, path, {"value", "unit"});
  if (!leaf.contains("unit")) throw ConfigError(path, "missing unit");
  if (!leaf.contains("value")) throw ConfigError(path, "missing value");
  const json& v = leaf.at("value");
  const json& u = leaf.at("unit");
  if (!v.is_number()) throw ConfigError(join(path, "value"), "expected a number");
  if (!u.is_string()) throw ConfigError(join(path, "unit"), "expected a string");
  const double magnitude = v.get<double>();
  if (!std::isfinite(magnitude)) throw ConfigError(join(path, "value"), "not finite");
  Quantity q(0.0, Dimension::dimensionless);
  try {
    q = Quantity::from(magnitude, u.get<std::string>());
  } catch (const UnitError& e) {
    throw ConfigError(join(path, "unit"), e.what());
  }
  for (auto d : dims) {
    if (q.dimension() == d) return q;
  }
  std::string expected;
  for (auto d : dims) {
    if (!expected.empty()) expected += " or ";
    expected += dimension_name(d);
  }
  throw ConfigError(join(path, "unit"), "unit '" + u.get<std::string>() + "' is " +
                                             std::string(dimension_name(q.dimension())) +
                                             ", expected " + expected);
}

double si(const json& obj, const std::string& key, const std::string& parent,
          std::initializer_list<Dimension> dims) {
  return quantity(obj, key, parent, dims).si();
}

double required(const json& obj, const std::string& key, const std::string& parent,
                std::initializer_list<Dimension> dims) {
  if (!obj.contains(key)) throw ConfigError(join(parent, key), "required key missing");
  return si(obj, key, parent, dims);
}

void optional_si(const json& obj, const std::string& key, const std::string& parent,
                 std::initializer_list<Dimension> dims, double& target) {
  if (obj.contains(key)) target = si(obj, key, parent, dims);
}

/// Linewidths and detunings may be given as cyclic (Hz) or angular (rad/s).
double angular(const json& obj, const std::string& key, const std::string& parent) {
  const Quantity q =
      quantity(obj, key, parent, {Dimension::frequency, Dimension::angular_frequency});
  return q.dimension() == Dimension::frequency ? 2.0 * constants::pi * q.si() : q.si();
}

TwoSpeciesModel parse_model(const json& j) {
  const std::string p = "model";
  require_object(j, p);
  reject_unknown(j, p,
                 {"loading_rate_rb", "gamma_rb", "gamma_cr", "beta_rbcr", "beta_crrb", "overlap",
                  "constant_factor"});
  TwoSpeciesModel m;
  m.loading_rate_rb = required(j, "loading_rate_rb", p, {Dimension::rate});
  m.gamma_rb = required(j, "gamma_rb", p, {Dimension::rate});
  m.gamma_cr = required(j, "gamma_cr", p, {Dimension::rate});
  m.beta_rbcr = required(j, "beta_rbcr", p, {Dimension::loss_coefficient});
  m.beta_crrb = required(j, "beta_crrb", p, {Dimension::loss_coefficient});
  if (!j.contains("overlap")) throw ConfigError("model.overlap", "required key missing");
  const json& o = require_object(j.at("overlap"), "model.overlap");
  if (o.contains("effective_volume")) {
    reject_unknown(o, "model.overlap", {"effective_volume"});
    m.overlap = FixedVolume{si(o, "effective_volume", "model.overlap", {Dimension::volume})};
  } else {
    reject_unknown(o, "model.overlap", {"mot_size", "mt_length"});
    m.overlap = CloudGeometry{required(o, "mot_size", "model.overlap", {Dimension::length}),
                              required(o, "mt_length", "model.overlap", {Dimension::length})};
  }
  if (j.contains("constant_factor")) {
    m.constant_factor = si(j, "constant_factor", p, {Dimension::inverse_volume});
  }
  try {
    m.validate();
  } catch (const std::exception& e) {
    throw ConfigError(p, e.what());
  }
  return m;
}

void parse_field(const json& j, SigmaPSetup& f) {
  const std::string p = "field";
  require_object(j, p);
  reject_unknown(j, p,
                 {"linewidth", "saturation_intensity", "clebsch_gordan_sq",
                  "transition_wavelength", "excited_ionization_energy", "detuning",
                  "detuning_linewidths", "ionizing_wavelength"});
  auto& t = f.transition;
  if (j.contains("linewidth")) t.natural_linewidth = angular(j, "linewidth", p);
  optional_si(j, "saturation_intensity", p, {Dimension::intensity}, t.saturation_intensity);
  optional_si(j, "clebsch_gordan_sq", p, {Dimension::dimensionless}, t.clebsch_gordan_sq);
  optional_si(j, "transition_wavelength", p, {Dimension::length}, t.transition_wavelength);
  optional_si(j, "excited_ionization_energy", p, {Dimension::energy},
              t.excited_ionization_energy);
  optional_si(j, "ionizing_wavelength", p, {Dimension::length}, f.ionizing_wavelength);
  if (j.contains("detuning") && j.contains("detuning_linewidths")) {
    throw ConfigError(join(p, "detuning"), "give either detuning or detuning_linewidths");
  }
  if (j.contains("detuning")) {
    f.detuning = std::fabs(angular(j, "detuning", p));
  } else if (j.contains("detuning_linewidths")) {
    f.detuning = std::fabs(si(j, "detuning_linewidths", p, {Dimension::dimensionless})) *
                 t.natural_linewidth;
  } else {
    f.detuning = 2.25 * t.natural_linewidth;
  }
  try {
    t.validate();
  } catch (const std::exception& e) {
    throw ConfigError(p, e.what());
  }
  if (!(f.ionizing_wavelength > 0.0)) {
    throw ConfigError(join(p, "ionizing_wavelength"), "must be > 0");
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  require_object(doc, "");
  reject_unknown(doc, "",
                 {"model", "initial", "sampling", "noise", "solver", "field", "seed", "output"});
  RunConfig cfg;
  if (doc.contains("model")) cfg.model = parse_model(doc.at("model"));
  if (doc.contains("initial")) {
    const json& j = require_object(doc.at("initial"), "initial");
    reject_unknown(j, "initial", {"n_cr", "n_rb"});
    InitialState s;
    s.n_cr = required(j, "n_cr", "initial", {Dimension::count});
    optional_si(j, "n_rb", "initial", {Dimension::count}, s.n_rb);
    if (!(s.n_cr >= 0.0) || !(s.n_rb >= 0.0)) {
      throw ConfigError("initial", "atom numbers must be >= 0");
    }
    cfg.initial = s;
  }
  if (doc.contains("sampling")) {
    const json& j = require_object(doc.at("sampling"), "sampling");
    reject_unknown(j, "sampling", {"duration", "rate"});
    SamplingSpec s;
    s.duration = required(j, "duration", "sampling", {Dimension::time});
    s.sample_rate = required(j, "rate", "sampling", {Dimension::frequency});
    if (!(s.duration > 0.0)) throw ConfigError("sampling.duration", "must be > 0");
    if (!(s.sample_rate > 0.0)) throw ConfigError("sampling.rate", "must be > 0");
    cfg.sampling = s;
  }
  if (doc.contains("noise")) {
    const json& j = require_object(doc.at("noise"), "noise");
    reject_unknown(j, "noise", {"relative_sigma", "additive_sigma"});
    optional_si(j, "relative_sigma", "noise", {Dimension::dimensionless}, cfg.relative_noise);
    optional_si(j, "additive_sigma", "noise", {Dimension::count}, cfg.additive_noise);
    if (!(cfg.relative_noise >= 0.0) || !(cfg.additive_noise >= 0.0)) {
      throw ConfigError("noise", "noise amplitudes must be >= 0");
    }
  }
  if (doc.contains("solver")) {
    const json& j = require_object(doc.at("solver"), "solver");
    reject_unknown(j, "solver", {"rel_tol", "abs_tol"});
    optional_si(j, "rel_tol", "solver", {Dimension::dimensionless}, cfg.solver.rel_tol);
    optional_si(j, "abs_tol", "solver", {Dimension::count}, cfg.solver.abs_tol);
  }
  if (doc.contains("field")) parse_field(doc.at("field"), cfg.field);
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    const json& j = require_object(doc.at("output"), "output");
    reject_unknown(j, "output", {"directory", "prefix"});
    for (const char* key : {"directory", "prefix"}) {
      if (!j.contains(key)) continue;
      if (!j.at(key).is_string()) throw ConfigError(join("output", key), "expected a string");
      (std::string_view(key) == "directory" ? cfg.output.directory : cfg.output.prefix) =
          j.at(key).get<std::string>();
    }
  }
  return cfg;
}

namespace {

json leaf(double value, std::string_view unit) { return {{"unit", unit}, {"value", value}}; }

}  // namespace

std::string dump_run_config(const RunConfig& cfg) {
  json doc = json::object();
  if (cfg.model) {
    const auto& m = *cfg.model;
    json model = {{"loading_rate_rb", leaf(m.loading_rate_rb, "1/s")},
                  {"gamma_rb", leaf(m.gamma_rb, "1/s")},
                  {"gamma_cr", leaf(m.gamma_cr, "1/s")},
                  {"beta_rbcr", leaf(m.beta_rbcr, "m^3/s")},
                  {"beta_crrb", leaf(m.beta_crrb, "m^3/s")}};
    if (const auto* v = std::get_if<FixedVolume>(&m.overlap)) {
      model["overlap"] = {{"effective_volume", leaf(v->effective_volume, "m^3")}};
    } else {
      const auto& g = std::get<CloudGeometry>(m.overlap);
      model["overlap"] = {{"mot_size", leaf(g.mot_size, "m")},
                          {"mt_length", leaf(g.mt_length, "m")}};
    }
    if (m.constant_factor) model["constant_factor"] = leaf(*m.constant_factor, "1/m^3");
    doc["model"] = model;
  }
  if (cfg.initial) {
    doc["initial"] = {{"n_cr", leaf(cfg.initial->n_cr, "atoms")},
                      {"n_rb", leaf(cfg.initial->n_rb, "atoms")}};
  }
  if (cfg.sampling) {
    doc["sampling"] = {{"duration", leaf(cfg.sampling->duration, "s")},
                       {"rate", leaf(cfg.sampling->sample_rate, "Hz")}};
  }
  doc["noise"] = {{"relative_sigma", leaf(cfg.relative_noise, "1")},
                  {"additive_sigma", leaf(cfg.additive_noise, "atoms")}};
  doc["solver"] = {{"rel_tol", leaf(cfg.solver.rel_tol, "1")},
                   {"abs_tol", leaf(cfg.solver.abs_tol, "atoms")}};
  const auto& t = cfg.field.transition;
  doc["field"] = {{"linewidth", leaf(t.natural_linewidth, "rad/s")},
                  {"saturation_intensity", leaf(t.saturation_intensity, "W/m^2")},
                  {"clebsch_gordan_sq", leaf(t.clebsch_gordan_sq, "1")},
                  {"transition_wavelength", leaf(t.transition_wavelength, "m")},
                  {"excited_ionization_energy", leaf(t.excited_ionization_energy, "J")},
                  {"detuning", leaf(cfg.field.detuning, "rad/s")},
                  {"ionizing_wavelength", leaf(cfg.field.ionizing_wavelength, "m")}};
  if (cfg.seed) doc["seed"] = *cfg.seed;
  json output = json::object();
  if (!cfg.output.directory.empty()) output["directory"] = cfg.output.directory;
  if (!cfg.output.prefix.empty()) output["prefix"] = cfg.output.prefix;
  if (!output.empty()) doc["output"] = output;
  return doc.dump(2) + "\n";
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

}  // namespace trapkit
