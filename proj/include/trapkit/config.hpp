#ifndef TRAPKIT_CONFIG_HPP
#define TRAPKIT_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "trapkit/dynamics.hpp"
#include "trapkit/estimation.hpp"

namespace trapkit {

/// Schema violation in a run configuration. `path` is the dotted key path,
/// e.g. "model.gamma_rb.unit".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path(std::move(path)) {}
  std::string path;
};

struct SamplingSpec {
  double duration = 0.0;     // s
  double sample_rate = 0.0;  // Hz
};

struct SolverSpec {
  double rel_tol = 1e-9;
  double abs_tol = 1e-3;  // atoms
};

struct InitialState {
  double n_cr = 0.0;
  double n_rb = 0.0;
};

struct OutputSpec {
  std::string directory;  // empty: current directory
  std::string prefix;
};

/// A parsed run configuration, all values in SI. Sections absent from the
/// document stay empty; each command checks for the ones it needs.
///
/// Document shape (every number is {"value": v, "unit": "u"}):
///
///   {
///     "model":    {"loading_rate_rb", "gamma_rb", "gamma_cr", "beta_rbcr",
///                  "beta_crrb", "overlap": {"effective_volume"} |
///                  {"mot_size", "mt_length"}, "constant_factor"?},
///     "initial":  {"n_cr", "n_rb"?},
///     "sampling": {"duration", "rate"},
///     "noise":    {"relative_sigma"?, "additive_sigma"?},
///     "solver":   {"rel_tol"?, "abs_tol"?},
///     "field":    {"linewidth"?, "saturation_intensity"?, "clebsch_gordan_sq"?,
///                  "transition_wavelength"?, "excited_ionization_energy"?,
///                  "detuning"? | "detuning_linewidths"?, "ionizing_wavelength"?},
///     "seed":     42,
///     "output":   {"directory"?, "prefix"?}
///   }
struct RunConfig {
  std::optional<TwoSpeciesModel> model;
  std::optional<InitialState> initial;
  std::optional<SamplingSpec> sampling;
  double relative_noise = 0.0;
  double additive_noise = 0.0;
  SolverSpec solver;
  SigmaPSetup field;
  std::optional<std::uint64_t> seed;
  OutputSpec output;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON text of `cfg` in SI units, accepted by parse_run_config.
/// Keys are sorted, so equal configs give identical text.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace trapkit

#endif  // TRAPKIT_CONFIG_HPP
