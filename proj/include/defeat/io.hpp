#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "defeat/adaptive.hpp"
#include "defeat/flux.hpp"
#include "defeat/mesh.hpp"
#include "defeat/problem.hpp"

namespace defeat {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string preset = "custom";
  double theta = 0.3;
  double alpha1 = 1.0, alpha2 = 1.0, alpha3 = 1.0;
  double beta1 = 0.1, beta2 = 0.1;
  std::string stabilization = "discard";  // none | ghost | discard
  double discard_fraction = 1e-3;
  std::string mode = "combined";          // h_only | combined
  std::size_t max_dofs = 5000;
  double h0 = 0.1;
  std::string out = "out";
  std::string features;  // CSV table; empty means the preset's built-in set
  int snapshot_every = 0;
  int reference_levels = 0;

  // problem data, by built-in name
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  std::vector<std::string> dirichlet_sides{"left", "right", "bottom", "top"};
  std::string source = "zero";
  std::string dirichlet = "zero";
  std::string neumann = "zero";
  std::string feature_flux = "zero";
  std::string feature_zero = "zero";
  std::string kappa = "one";

  bool operator==(const RunConfig&) const = default;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// Defaults of a named preset: test1, test2, test3 or custom.
RunConfig preset_config(const std::string& preset);

/// All recognised keys, in emission order.
const std::vector<std::string>& config_keys();

/// Sets one key; throws ConfigError on unknown keys or unparsable values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Range checks: theta in (0,1], nonnegative weights, known modes...
void validate(const RunConfig& config);

/// key=value lines ('#' starts a comment) followed by overriding settings.
/// The preset named in the overrides, else in the text, supplies the defaults.
RunConfig parse_config(const std::string& text, const Settings& overrides = {});
RunConfig parse_config_file(const std::string& path, const Settings& overrides = {});

/// key=value text that parse_config maps back to the same configuration.
std::string emit_config(const RunConfig& config);

/// Features from a table with header i,eps,xc,yc,n_e,theta_deg.
std::vector<Feature> load_features(const std::string& path, const Box& domain);

ProblemSpec make_problem(const RunConfig& config);
AdaptiveConfig adaptive_config(const RunConfig& config);
Stabilization parse_stabilization(const std::string& name);
AdaptMode parse_mode(const std::string& name);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string history_csv(const std::vector<HistoryRow>& rows);
void emit_history(const std::vector<HistoryRow>& rows, const std::string& path);

/// SVG drawing of the mesh with included features filled, neglected ones
/// outlined, and an optional per-triangle indicator as fill colour.
std::string snapshot_svg(const Mesh& mesh, const ProblemSpec& spec,
                         const std::vector<double>* indicator = nullptr);
void emit_snapshot(const AdaptiveState& state, const std::string& path, bool with_indicator = true);

/// Plain-text dumps: "v x y" and "t i j k tag" lines, where the tag is the
/// bisection generation; per-triangle RT coefficients.
std::string mesh_text(const Mesh& mesh);
std::string flux_text(const GlobalFlux& flux, const ActiveClassification& cls);

void write_text(const std::string& path, const std::string& content);

}  // namespace defeat
