#include "trapkit/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <initializer_list>
#include <json.hpp>
#include <optional>
#include <ostream>

#include "trapkit/config.hpp"
#include "trapkit/dynamics.hpp"
#include "trapkit/estimation.hpp"
#include "trapkit/overlap_geometry.hpp"
#include "trapkit/trace_io.hpp"
#include "trapkit/units.hpp"

namespace trapkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream).
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Length-prefixed record of every input that can influence a result.
class Digest {
 public:
  void add(std::string_view name, std::string_view value) {
    buf_ += std::to_string(name.size()) + ':' + std::string(name) + '=';
    buf_ += std::to_string(value.size()) + ':' + std::string(value) + ';';
  }
  void add_optional(std::string_view name, const std::string& value) {
    if (!value.empty()) add(name, value);
  }
  void add_file(std::string_view name, const std::string& path) {
    if (!path.empty()) add(name, read_file(path));
  }
  std::string hex() const { return sha256_hex(buf_); }

 private:
  std::string buf_;
};

json leaf(double value, std::string_view unit) { return {{"unit", unit}, {"value", value}}; }

json fit_json(const FitResult& r) {
  json params = json::object();
  for (const auto& p : r.parameters) {
    params[p.name] = {{"sigma", p.sigma}, {"unit", p.unit}, {"value", p.value}};
  }
  return {{"converged", r.converged},   {"dof", r.dof},
          {"flags", r.flags},           {"iterations", r.iterations},
          {"metadata", r.metadata},     {"parameters", params},
          {"residual_rms", r.residual_rms}};
}

std::string timestamp_now() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Report {
  std::string command;
  Digest digest;
  json results = json::object();
  std::vector<std::string> warnings;

  void warn_flags(std::string_view what, const std::vector<std::string>& flags) {
    for (const auto& f : flags) warnings.push_back(std::string(what) + ": " + f);
  }

  std::string render() const {
    const json doc = {{"command", command},
                      {"config_digest", digest.hex()},
                      {"results", results},
                      {"timestamp", timestamp_now()},
                      {"toolkit_version", kToolkitVersion},
                      {"warnings", warnings}};
    return doc.dump(2) + "\n";
  }
};

void emit(const Report& report, const std::string& out_path, std::ostream& out,
          std::ostream& err) {
  for (const auto& w : report.warnings) err << "trapkit: warning: " << w << '\n';
  const std::string text = report.render();
  if (out_path.empty()) {
    out << text;
  } else {
    write_file_atomic(out_path, text);
  }
}

double quantity_option(const std::string& text, std::string_view flag,
                       std::initializer_list<Dimension> dims) {
  Quantity q(0.0, Dimension::dimensionless);
  try {
    q = parse_quantity(text);
  } catch (const UnitError& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
  for (auto d : dims) {
    if (q.dimension() == d) return q.si();
  }
  std::string expected;
  for (auto d : dims) {
    if (!expected.empty()) expected += " or ";
    expected += dimension_name(d);
  }
  throw UsageError(std::string(flag) + ": '" + text + "' is " +
                   std::string(dimension_name(q.dimension())) + ", expected " + expected);
}

std::optional<double> optional_quantity(const std::string& text, std::string_view flag,
                                        std::initializer_list<Dimension> dims) {
  if (text.empty()) return std::nullopt;
  return quantity_option(text, flag, dims);
}

/// Cyclic frequencies are converted to angular, as in the config.
double angular_option(const std::string& text, std::string_view flag) {
  const double v =
      quantity_option(text, flag, {Dimension::frequency, Dimension::angular_frequency});
  return parse_quantity(text).dimension() == Dimension::frequency ? 2.0 * constants::pi * v : v;
}

void require_inputs(const std::vector<std::string>& missing) {
  if (missing.empty()) return;
  std::string msg = "missing inputs:";
  for (const auto& m : missing) msg += " " + m + (&m == &missing.back() ? "" : ",");
  throw UsageError(msg);
}

std::uint64_t parse_seed(const std::string& text, std::string_view source) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || p != end) {
    throw UsageError(std::string(source) + ": seed must be a non-negative integer, got '" + text +
                     "'");
  }
  return v;
}

DataTrace load_trace(const std::string& path, ValueKind expected, std::string_view command) {
  DataTrace trace = read_trace_csv(fs::path(path));
  if (trace.kind != expected) {
    throw UsageError(std::string(command) + " needs a " + std::string(value_kind_name(expected)) +
                     " trace, " + path + " holds " + std::string(value_kind_name(trace.kind)));
  }
  return trace;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::string out;
  std::string seed;
  std::string rel_tol;
  std::string abs_tol;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const std::string config_text = read_file(a.config);
  RunConfig cfg = parse_run_config(config_text);

  std::vector<std::string> missing;
  if (!cfg.model) missing.emplace_back("model");
  if (!cfg.initial) missing.emplace_back("initial");
  if (!cfg.sampling) missing.emplace_back("sampling");
  if (!missing.empty()) {
    std::string msg = "config lacks required sections:";
    for (const auto& m : missing) msg += " " + m;
    throw ConfigError("", msg);
  }
  if (!a.rel_tol.empty()) {
    cfg.solver.rel_tol = quantity_option(a.rel_tol + " 1", "--rel-tol", {Dimension::dimensionless});
  }
  if (!a.abs_tol.empty()) {
    cfg.solver.abs_tol = quantity_option(a.abs_tol + " atoms", "--abs-tol", {Dimension::count});
  }

  std::string seed_source = "default";
  std::uint64_t seed = 0;
  if (!a.seed.empty()) {
    seed = parse_seed(a.seed, "--seed");
    seed_source = "flag";
  } else if (cfg.seed) {
    seed = *cfg.seed;
    seed_source = "config";
  } else if (const char* env = std::getenv("TRAPKIT_SEED"); env && *env) {
    seed = parse_seed(env, "TRAPKIT_SEED");
    seed_source = "environment";
  }
  cfg.seed = seed;

  Report report;
  report.command = "simulate";
  report.digest.add("config", config_text);
  report.digest.add("seed", std::to_string(seed));
  report.digest.add_optional("rel_tol", a.rel_tol);
  report.digest.add_optional("abs_tol", a.abs_tol);

  const auto& model = *cfg.model;
  const auto& s = *cfg.sampling;
  const Trajectory traj = integrate_coupled(model, cfg.initial->n_cr, cfg.initial->n_rb,
                                            s.duration, s.sample_rate, cfg.solver.rel_tol,
                                            cfg.solver.abs_tol);
  if (traj.terminated) {
    report.warnings.push_back("a population reached zero at t = " +
                              format_number(traj.times.back()) + " s; traces end there");
  }

  fs::path dir = !a.out.empty() ? fs::path(a.out) : fs::path(cfg.output.directory);
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);

  json files = json::object();
  json seeds = json::object();
  std::uint64_t stream = 0;
  for (Species sp : {Species::cr, Species::rb}) {
    NoiseSpec noise;
    noise.relative_sigma = cfg.relative_noise;
    noise.additive_sigma = cfg.additive_noise;
    noise.seed = derive_seed(seed, stream++);
    DataTrace trace = synthesize_trace(traj, sp, noise, s.sample_rate);
    trace.metadata["run_seed"] = std::to_string(seed);
    trace.metadata["toolkit_version"] = std::string(kToolkitVersion);
    const std::string name = cfg.output.prefix + std::string(species_name(sp)) + ".csv";
    write_file_atomic(dir / name, trace_to_csv(trace));
    files[std::string(species_name(sp))] = name;
    seeds[std::string(species_name(sp))] = noise.seed;
  }

  const double v_bar = effective_volume(model.overlap);
  const std::string digest = report.digest.hex();
  json sidecar = {
      {"config", json::parse(dump_run_config(cfg))},
      {"config_digest", digest},
      {"derived",
       {{"effective_volume", leaf(v_bar, "m^3")},
        {"noise_seeds", seeds},
        {"one_body_steady_state_rb",
         leaf(model.gamma_rb > 0.0 ? model.loading_rate_rb / model.gamma_rb : 0.0, "atoms")},
        {"seed_source", seed_source}}},
      {"solver",
       {{"abs_tol", traj.abs_tol},
        {"accepted_steps", traj.stats.accepted_steps},
        {"method", "dormand_prince_5_4"},
        {"rejected_steps", traj.stats.rejected_steps},
        {"rel_tol", traj.rel_tol},
        {"rhs_evaluations", traj.stats.rhs_evaluations},
        {"terminated", traj.terminated}}},
      {"toolkit_version", kToolkitVersion}};
  const std::string sidecar_name = cfg.output.prefix + "model.json";
  write_file_atomic(dir / sidecar_name, sidecar.dump(2) + "\n");
  files["model"] = sidecar_name;

  report.results = {{"effective_volume", leaf(v_bar, "m^3")},
                    {"files", files},
                    {"final_n_cr", leaf(traj.n_cr.back(), "atoms")},
                    {"final_n_rb", leaf(traj.n_rb.back(), "atoms")},
                    {"samples", traj.size()},
                    {"seed", seed},
                    {"terminated", traj.terminated}};
  emit(report, "", out, err);
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string kind;
  std::string trace;
  std::string baseline;
  std::string initial_number;
  bool fit_initial_number = false;
  std::string out;
};

void cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  Report report;
  report.command = "fit " + a.kind;
  report.digest.add("kind", a.kind);
  report.digest.add_file("trace", a.trace);
  report.digest.add_file("baseline", a.baseline);
  report.digest.add_optional("initial_number", a.initial_number);
  report.digest.add("fit_initial_number", a.fit_initial_number ? "1" : "0");

  if (a.kind != "heating" && !a.baseline.empty()) {
    throw UsageError("--baseline applies to heating fits only");
  }
  FitResult fit;
  if (a.kind == "loading") {
    const DataTrace trace = load_trace(a.trace, ValueKind::atom_number, "fit loading");
    LoadingFitOptions opt;
    opt.fit_initial_number = a.fit_initial_number;
    if (auto n0 = optional_quantity(a.initial_number, "--initial-number", {Dimension::count})) {
      opt.initial_number = *n0;
    }
    fit = fit_loading(trace, opt);
  } else if (a.kind == "decay") {
    fit = fit_decay(load_trace(a.trace, ValueKind::atom_number, "fit decay"));
  } else {
    fit = fit_heating_rate(load_trace(a.trace, ValueKind::temperature, "fit heating"));
    if (!a.baseline.empty()) {
      const FitResult base =
          fit_heating_rate(load_trace(a.baseline, ValueKind::temperature, "fit heating"));
      const FitParameter excess = heating_rate_excess(fit, base);
      report.results["baseline"] = fit_json(base);
      report.results["excess_rate"] = {
          {"sigma", excess.sigma}, {"unit", excess.unit}, {"value", excess.value}};
    }
  }
  if (!fit.converged) report.warnings.emplace_back("fit did not converge; values are not authoritative");
  report.warn_flags("fit", fit.flags);
  report.results["fit"] = fit_json(fit);
  emit(report, a.out, out, err);
}

// ----------------------------------------------------------------- sigma-p

struct SigmaPArgs {
  std::string runs;
  std::string gamma_bg;
  std::string config;
  bool pool_gamma_bg = true;
  bool intercept_diagnostic = false;
  std::string detuning_sweep;
  std::string out;
};

void cmd_sigma_p(const SigmaPArgs& a, std::ostream& out, std::ostream& err) {
  Report report;
  report.command = "sigma-p";
  report.digest.add_file("runs", a.runs);
  report.digest.add_file("config", a.config);
  report.digest.add_optional("gamma_bg", a.gamma_bg);
  report.digest.add("pool_gamma_bg", a.pool_gamma_bg ? "1" : "0");
  report.digest.add("intercept_diagnostic", a.intercept_diagnostic ? "1" : "0");
  report.digest.add_optional("detuning_sweep", a.detuning_sweep);

  const auto runs = read_sigma_p_runs(fs::path(a.runs));
  SigmaPSetup setup;
  if (!a.config.empty()) setup = load_run_config(a.config).field;

  BackgroundRates bg;
  std::string bg_mode;
  if (auto g = optional_quantity(a.gamma_bg, "--gamma-bg", {Dimension::rate})) {
    bg = BackgroundRates::constant(*g);
    bg_mode = "given";
  } else {
    try {
      bg = BackgroundRates::from_runs(runs, a.pool_gamma_bg);
    } catch (const std::invalid_argument&) {
      throw UsageError("no runs without ionizing light; pass --gamma-bg");
    }
    bg_mode = a.pool_gamma_bg ? "pooled" : "per_group";
  }

  SigmaPOptions options;
  options.free_intercept_diagnostic = a.intercept_diagnostic;
  const SigmaPResult res = extract_sigma_p(runs, bg, setup, options);
  for (const auto& w : res.warnings) report.warnings.push_back(w);
  report.warn_flags("cross_section", res.pooled.flags);

  json groups = json::array();
  for (const auto& g : res.groups) {
    json row = {{"cross_section", leaf(g.cross_section, "m^2")},
                {"cross_section_sigma", leaf(g.cross_section_sigma, "m^2")},
                {"dof", g.dof},
                {"excited_fraction", g.excited_fraction},
                {"gamma_bg", leaf(bg.for_group(g.rb_intensity), "1/s")},
                {"points", g.points},
                {"rb_intensity", leaf(g.rb_intensity / 10.0, "mW/cm^2")}};
    if (g.has_free_fit) {
      row["free_fit"] = {{"intercept", leaf(g.free_intercept, "1/s")},
                         {"intercept_sigma", leaf(g.free_intercept_sigma, "1/s")},
                         {"slope", leaf(g.free_slope, "m^2")}};
    }
    groups.push_back(row);
  }
  json background = {{"mode", bg_mode}, {"pooled", leaf(bg.pooled, "1/s")}};
  if (!bg.per_group.empty()) {
    json per = json::array();
    for (const auto& [intensity, rate] : bg.per_group) {
      per.push_back({{"gamma_bg", leaf(rate, "1/s")},
                     {"rb_intensity", leaf(intensity / 10.0, "mW/cm^2")}});
    }
    background["per_group"] = per;
  }
  report.results = {{"background", background},
                    {"cross_section", fit_json(res.pooled)},
                    {"detuning", leaf(setup.detuning, "rad/s")},
                    {"groups", groups}};
  if (!a.detuning_sweep.empty()) {
    const double half_width = angular_option(a.detuning_sweep, "--detuning-sweep");
    const DetuningSweep sw = sigma_p_detuning_sweep(runs, bg, setup, half_width);
    report.results["detuning_sweep"] = {
        {"cross_section_center", leaf(sw.cross_section_center, "m^2")},
        {"cross_section_high", leaf(sw.cross_section_high, "m^2")},
        {"cross_section_low", leaf(sw.cross_section_low, "m^2")},
        {"detuning_high", leaf(sw.detuning_high, "rad/s")},
        {"detuning_low", leaf(sw.detuning_low, "rad/s")}};
  }
  emit(report, a.out, out, err);
}

// -------------------------------------------------------------------- beta

struct BetaSlopeArgs {
  std::string alpha;
  std::string trace;
  std::string gamma;
  std::string window = "1 s";
  std::string loading_rate;
  std::string factor;
  std::string t_cr;
  std::string t_rb;
  std::string out;
};

void cmd_beta_slope(const BetaSlopeArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> missing;
  if (a.alpha.empty() && a.trace.empty()) missing.emplace_back("--alpha (or --trace)");
  if (a.loading_rate.empty()) missing.emplace_back("--loading-rate");
  if (a.factor.empty()) missing.emplace_back("--factor");
  require_inputs(missing);
  if (!a.alpha.empty() && !a.trace.empty()) throw UsageError("give either --alpha or --trace");
  if (a.t_cr.empty() != a.t_rb.empty()) throw UsageError("--t-cr and --t-rb go together");

  Report report;
  report.command = "beta slope";
  report.digest.add_optional("alpha", a.alpha);
  report.digest.add_file("trace", a.trace);
  report.digest.add_optional("gamma", a.gamma);
  report.digest.add("window", a.window);
  report.digest.add("loading_rate", a.loading_rate);
  report.digest.add("factor", a.factor);
  report.digest.add_optional("t_cr", a.t_cr);
  report.digest.add_optional("t_rb", a.t_rb);

  const double loading = quantity_option(a.loading_rate, "--loading-rate", {Dimension::rate});
  const double factor = quantity_option(a.factor, "--factor", {Dimension::inverse_volume});
  double alpha = 0.0;
  if (!a.alpha.empty()) {
    alpha = quantity_option(a.alpha, "--alpha", {Dimension::rate});
  } else {
    const double window = quantity_option(a.window, "--window", {Dimension::time});
    const double gamma =
        optional_quantity(a.gamma, "--gamma", {Dimension::rate}).value_or(0.0);
    const DataTrace trace = load_trace(a.trace, ValueKind::atom_number, "beta slope");
    alpha = initial_slope(trace, window, gamma);
    report.results["window"] = leaf(window, "s");
    report.results["one_body_rate"] = leaf(gamma, "1/s");
  }
  const FlaggedValue beta = extract_beta_rbcr(alpha, loading, factor);
  report.warn_flags("beta_rbcr", beta.flags);
  report.results["alpha"] = leaf(alpha, "atoms/s");
  report.results["loading_rate"] = leaf(loading, "atoms/s");
  report.results["factor"] = leaf(factor, "1/m^3");
  report.results["beta_rbcr"] = {{"flags", beta.flags},
                                 {"relative_systematic", kBetaRelativeSystematic},
                                 {"unit", "m^3/s"},
                                 {"value", beta.value}};
  if (!a.t_cr.empty()) {
    const double t_cr = quantity_option(a.t_cr, "--t-cr", {Dimension::temperature});
    const double t_rb = quantity_option(a.t_rb, "--t-rb", {Dimension::temperature});
    const double v = mean_relative_speed(t_cr, constants::mass_cr52, t_rb, constants::mass_rb87);
    report.results["mean_relative_speed"] = leaf(v, "m/s");
    report.results["inelastic_cross_section"] = leaf(inelastic_cross_section(beta.value, v), "m^2");
  }
  emit(report, a.out, out, err);
}

struct BetaBoundsArgs {
  std::string excess_rate;
  std::string without;
  std::string with;
  std::string from = "20 s";
  std::string to = "30 s";
  std::string f_min;
  std::string f_max;
  std::string out;
};

void cmd_beta_bounds(const BetaBoundsArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> missing;
  if (a.excess_rate.empty()) {
    if (a.without.empty()) missing.emplace_back("--excess-rate (or --without)");
    if (a.with.empty()) missing.emplace_back("--excess-rate (or --with)");
  }
  if (a.f_min.empty()) missing.emplace_back("--f-min");
  if (a.f_max.empty()) missing.emplace_back("--f-max");
  require_inputs(missing);
  if (!a.excess_rate.empty() && (!a.without.empty() || !a.with.empty())) {
    throw UsageError("give either --excess-rate or the --without/--with traces");
  }

  Report report;
  report.command = "beta bounds";
  report.digest.add_optional("excess_rate", a.excess_rate);
  report.digest.add_file("without", a.without);
  report.digest.add_file("with", a.with);
  report.digest.add("from", a.from);
  report.digest.add("to", a.to);
  report.digest.add("f_min", a.f_min);
  report.digest.add("f_max", a.f_max);

  const double f_min = quantity_option(a.f_min, "--f-min", {Dimension::inverse_volume});
  const double f_max = quantity_option(a.f_max, "--f-max", {Dimension::inverse_volume});
  double rate = 0.0;
  if (!a.excess_rate.empty()) {
    rate = quantity_option(a.excess_rate, "--excess-rate", {Dimension::rate});
  } else {
    const double from = quantity_option(a.from, "--from", {Dimension::time});
    const double to = quantity_option(a.to, "--to", {Dimension::time});
    const FlaggedValue ex =
        excess_loss_rate(load_trace(a.without, ValueKind::atom_number, "beta bounds"),
                         load_trace(a.with, ValueKind::atom_number, "beta bounds"), from, to);
    report.warn_flags("excess_rate", ex.flags);
    rate = ex.value;
    report.results["analysis_window"] = {{"from", leaf(from, "s")}, {"to", leaf(to, "s")}};
  }
  const BetaBounds b = beta_crrb_bounds(rate, f_min, f_max);
  report.warn_flags("beta_crrb", b.flags);
  report.results["excess_rate"] = leaf(rate, "atoms/s");
  report.results["f_min"] = leaf(f_min, "1/m^3");
  report.results["f_max"] = leaf(f_max, "1/m^3");
  report.results["beta_crrb"] = {{"flags", b.flags},
                                 {"lower", b.lower},
                                 {"relative_systematic", kBetaRelativeSystematic},
                                 {"unit", "m^3/s"},
                                 {"upper", b.upper}};
  emit(report, a.out, out, err);
}

// ----------------------------------------------------------------- overlap

struct OverlapArgs {
  std::string z;
  std::string sigma_bar;
  std::string out;
};

void cmd_overlap(const OverlapArgs& a, std::ostream& out, std::ostream& err) {
  Report report;
  report.command = "overlap";
  report.digest.add("z", a.z);
  report.digest.add("sigma_bar", a.sigma_bar);

  const double z = quantity_option(a.z, "--z", {Dimension::length});
  const double sb = quantity_option(a.sigma_bar, "--sigma-bar", {Dimension::length});
  const VarsigmaEvaluation e = evaluate_varsigma(sb, z);
  const double v_mt = mt_volume(z);
  report.results = {{"branch", e.asymptotic ? "asymptotic" : "closed_form"},
                    {"effective_volume", leaf(v_mt / e.value, "m^3")},
                    {"mt_volume", leaf(v_mt, "m^3")},
                    {"ratio", sb / z},
                    {"varsigma", e.value}};
  emit(report, a.out, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-species cold-atom trap-loss toolkit", "trapkit"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Forward-simulate the coupled rate equations");
  simulate->add_option("--config", sim.config, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory (overrides output.directory)");
  simulate->add_option("--seed", sim.seed, "Noise seed (falls back to config, then TRAPKIT_SEED)");
  simulate->add_option("--rel-tol", sim.rel_tol, "Solver relative tolerance");
  simulate->add_option("--abs-tol", sim.abs_tol, "Solver absolute tolerance in atoms");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a loading, decay or heating trace");
  fit_cmd->add_option("kind", fit.kind, "loading | decay | heating")
      ->required()
      ->check(CLI::IsMember({"loading", "decay", "heating"}));
  fit_cmd->add_option("trace", fit.trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--baseline", fit.baseline, "Heating trace without partner species")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--initial-number", fit.initial_number,
                      "Atom number at the first sample, e.g. \"0 atoms\"");
  fit_cmd->add_flag("--fit-initial-number", fit.fit_initial_number,
                    "Fit the initial atom number of a loading curve");
  fit_cmd->add_option("--out", fit.out, "Report file (default: stdout)");

  SigmaPArgs sp;
  auto* sigma_cmd = app.add_subcommand("sigma-p", "Photoionization cross section from a run grid");
  sigma_cmd->add_option("runs", sp.runs, "Runs CSV")->required()->check(CLI::ExistingFile);
  sigma_cmd->add_option("--gamma-bg", sp.gamma_bg, "Background loss rate, e.g. \"0.11 1/s\"");
  sigma_cmd->add_option("--config", sp.config, "Configuration with a field section")
      ->check(CLI::ExistingFile);
  sigma_cmd->add_flag("--pool-gamma-bg,!--no-pool-gamma-bg", sp.pool_gamma_bg,
                      "Pool the background rate over MOT intensities (default on)");
  sigma_cmd->add_flag("--intercept-diagnostic", sp.intercept_diagnostic,
                      "Also fit each group with a free intercept");
  sigma_cmd->add_option("--detuning-sweep", sp.detuning_sweep,
                        "Re-extract with the detuning moved by this half width");
  sigma_cmd->add_option("--out", sp.out, "Report file (default: stdout)");

  auto* beta = app.add_subcommand("beta", "Interspecies loss coefficients");
  beta->require_subcommand(1);
  BetaSlopeArgs bs;
  auto* slope = beta->add_subcommand("slope", "beta_RbCr from the initial Rb loading slope");
  slope->add_option("--alpha", bs.alpha, "Initial slope, e.g. \"1.5e4 atoms/s\"");
  slope->add_option("--trace", bs.trace, "Rb trace to take the slope from")
      ->check(CLI::ExistingFile);
  slope->add_option("--gamma", bs.gamma, "One-body loss rate used in the slope fit");
  slope->add_option("--window", bs.window, "Slope window (default \"1 s\")");
  slope->add_option("--loading-rate", bs.loading_rate, "Rb loading rate L");
  slope->add_option("--factor", bs.factor, "Overlap factor F = N_Cr N_Rb / V_bar");
  slope->add_option("--t-cr", bs.t_cr, "Cr temperature, for the inelastic cross section");
  slope->add_option("--t-rb", bs.t_rb, "Rb temperature, for the inelastic cross section");
  slope->add_option("--out", bs.out, "Report file (default: stdout)");
  BetaBoundsArgs bb;
  auto* bounds = beta->add_subcommand("bounds", "beta_CrRb bounds from an excess loss rate");
  bounds->add_option("--excess-rate", bb.excess_rate, "Excess Cr loss rate");
  bounds->add_option("--without", bb.without, "Cr trace without Rb")->check(CLI::ExistingFile);
  bounds->add_option("--with", bb.with, "Cr trace with Rb")->check(CLI::ExistingFile);
  bounds->add_option("--from", bb.from, "Analysis window start (default \"20 s\")");
  bounds->add_option("--to", bb.to, "Analysis window end (default \"30 s\")");
  bounds->add_option("--f-min", bb.f_min, "Smallest plausible overlap factor");
  bounds->add_option("--f-max", bb.f_max, "Largest plausible overlap factor");
  bounds->add_option("--out", bb.out, "Report file (default: stdout)");

  OverlapArgs ov;
  auto* overlap = app.add_subcommand("overlap", "Overlap factor and effective volume");
  overlap->add_option("--z", ov.z, "MT 1/e length, e.g. \"1 mm\"")->required();
  overlap->add_option("--sigma-bar", ov.sigma_bar, "MOT size, e.g. \"1 mm\"")->required();
  overlap->add_option("--out", ov.out, "Report file (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      cmd_simulate(sim, out, err);
    } else if (fit_cmd->parsed()) {
      cmd_fit(fit, out, err);
    } else if (sigma_cmd->parsed()) {
      cmd_sigma_p(sp, out, err);
    } else if (slope->parsed()) {
      cmd_beta_slope(bs, out, err);
    } else if (bounds->parsed()) {
      cmd_beta_bounds(bb, out, err);
    } else if (overlap->parsed()) {
      cmd_overlap(ov, out, err);
    }
  } catch (const UsageError& e) {
    err << "trapkit: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "trapkit: error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace trapkit::cli
