#include "defeat/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace defeat {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x))
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return x;
}

std::string default_features_path(const std::string& preset) {
#ifdef DEFEAT_DATA_DIR
  const std::string dir = DEFEAT_DATA_DIR;
#else
  const std::string dir = "data";
#endif
  if (preset == "test2") return dir + "/test2_features.csv";
  if (preset == "test3") return dir + "/test3_features.csv";
  return {};
}

}  // namespace

RunConfig preset_config(const std::string& preset) {
  RunConfig c;
  c.preset = preset;
  if (preset == "custom") return c;
  if (preset == "test1") {
    c.theta = 0.3;
    c.max_dofs = 5000;
    c.h0 = 7.07e-2;
    c.dirichlet = "exp_bottom_left";
    return c;
  }
  if (preset == "test2") {
    c.theta = 0.3;
    c.max_dofs = 5000;
    c.h0 = 7.07e-2;
    c.dirichlet_sides = {"bottom", "top"};
    c.dirichlet = "exp_bottom";
    c.features = default_features_path(preset);
    return c;
  }
  if (preset == "test3") {
    c.theta = 0.5;
    c.max_dofs = 6000;
    c.h0 = 1.41e-1;
    c.x0 = c.y0 = -1.0;
    c.x1 = c.y1 = 1.0;
    c.dirichlet = "piecewise_linear_mu";
    c.kappa = "chessboard";
    c.features = default_features_path(preset);
    return c;
  }
  throw ConfigError("unknown preset '" + preset + "' (expected test1, test2, test3 or custom)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "preset", "theta", "alpha1", "alpha2", "alpha3", "beta1", "beta2", "stabilization",
      "discard_fraction",
      "mode", "max_dofs", "h0", "out", "features", "snapshot_every", "reference_levels",
      "x0", "y0", "x1", "y1", "dirichlet_sides", "source", "dirichlet", "neumann",
      "feature_flux", "feature_zero", "kappa"};
  return keys;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  auto field_name = [&](std::string& target) {
    const auto names = builtin_field_names();
    if (std::find(names.begin(), names.end(), v) == names.end())
      throw ConfigError("'" + key + "': unknown built-in field '" + v + "'");
    target = v;
  };
  if (key == "preset") {
    if (v != "test1" && v != "test2" && v != "test3" && v != "custom")
      throw ConfigError("unknown preset '" + v + "'");
    c.preset = v;
  } else if (key == "theta") c.theta = parse_double(key, v);
  else if (key == "alpha1") c.alpha1 = parse_double(key, v);
  else if (key == "alpha2") c.alpha2 = parse_double(key, v);
  else if (key == "alpha3") c.alpha3 = parse_double(key, v);
  else if (key == "beta1") c.beta1 = parse_double(key, v);
  else if (key == "beta2") c.beta2 = parse_double(key, v);
  else if (key == "stabilization") c.stabilization = v;
  else if (key == "discard_fraction") c.discard_fraction = parse_double(key, v);
  else if (key == "mode") c.mode = v;
  else if (key == "max_dofs") {
    const auto n = parse_int(key, v);
    if (n <= 0) throw ConfigError("max_dofs must be positive");
    c.max_dofs = static_cast<std::size_t>(n);
  } else if (key == "h0") c.h0 = parse_double(key, v);
  else if (key == "out") c.out = v;
  else if (key == "features") c.features = v;
  else if (key == "snapshot_every") c.snapshot_every = static_cast<int>(parse_int(key, v));
  else if (key == "reference_levels") c.reference_levels = static_cast<int>(parse_int(key, v));
  else if (key == "x0") c.x0 = parse_double(key, v);
  else if (key == "y0") c.y0 = parse_double(key, v);
  else if (key == "x1") c.x1 = parse_double(key, v);
  else if (key == "y1") c.y1 = parse_double(key, v);
  else if (key == "dirichlet_sides") {
    c.dirichlet_sides.clear();
    for (const auto& s : split(v, ','))
      if (!s.empty()) c.dirichlet_sides.push_back(s);
  } else if (key == "source") field_name(c.source);
  else if (key == "dirichlet") field_name(c.dirichlet);
  else if (key == "neumann") field_name(c.neumann);
  else if (key == "feature_flux") field_name(c.feature_flux);
  else if (key == "feature_zero") field_name(c.feature_zero);
  else if (key == "kappa") field_name(c.kappa);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

Stabilization parse_stabilization(const std::string& name) {
  if (name == "none") return Stabilization::none;
  if (name == "ghost") return Stabilization::ghost;
  if (name == "discard") return Stabilization::discard;
  throw ConfigError("stabilization must be none, ghost or discard, got '" + name + "'");
}

AdaptMode parse_mode(const std::string& name) {
  if (name == "h_only") return AdaptMode::h_only;
  if (name == "combined") return AdaptMode::combined;
  throw ConfigError("mode must be h_only or combined, got '" + name + "'");
}

void validate(const RunConfig& c) {
  if (!(c.theta > 0.0 && c.theta <= 1.0)) throw ConfigError("theta must lie in (0, 1], got " + format_double(c.theta));
  if (c.alpha1 < 0.0 || c.alpha2 < 0.0 || c.alpha3 < 0.0) throw ConfigError("alpha weights must be nonnegative");
  if (c.beta1 < 0.0 || c.beta2 < 0.0) throw ConfigError("beta weights must be nonnegative");
  parse_stabilization(c.stabilization);
  if (!(c.discard_fraction >= 0.0 && c.discard_fraction < 1.0))
    throw ConfigError("discard_fraction must lie in [0, 1)");
  parse_mode(c.mode);
  if (c.max_dofs == 0) throw ConfigError("max_dofs must be positive");
  if (!(c.h0 > 0.0)) throw ConfigError("h0 must be positive");
  if (c.snapshot_every < 0) throw ConfigError("snapshot_every must be nonnegative");
  if (c.reference_levels < 0) throw ConfigError("reference_levels must be nonnegative");
  if (!(c.x1 > c.x0 && c.y1 > c.y0)) throw ConfigError("empty domain box");
  if (c.dirichlet_sides.empty()) throw ConfigError("at least one Dirichlet side is required");
  for (const auto& s : c.dirichlet_sides)
    if (s != "left" && s != "right" && s != "bottom" && s != "top")
      throw ConfigError("unknown side '" + s + "'");
}

RunConfig parse_config(const std::string& text, const Settings& overrides) {
  Settings file;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    file.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  std::string preset = "custom";
  for (const Settings* list : {static_cast<const Settings*>(&file), &overrides})
    for (const auto& [k, v] : *list)
      if (k == "preset") preset = trim(v);
  RunConfig c = preset_config(preset);
  for (const Settings* list : {static_cast<const Settings*>(&file), &overrides})
    for (const auto& [k, v] : *list) apply_setting(c, k, v);
  validate(c);
  return c;
}

RunConfig parse_config_file(const std::string& path, const Settings& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream o;
  std::string sides;
  for (std::size_t i = 0; i < c.dirichlet_sides.size(); ++i) sides += (i ? "," : "") + c.dirichlet_sides[i];
  o << "preset=" << c.preset << '\n'
    << "theta=" << format_double(c.theta) << '\n'
    << "alpha1=" << format_double(c.alpha1) << '\n'
    << "alpha2=" << format_double(c.alpha2) << '\n'
    << "alpha3=" << format_double(c.alpha3) << '\n'
    << "beta1=" << format_double(c.beta1) << '\n'
    << "beta2=" << format_double(c.beta2) << '\n'
    << "stabilization=" << c.stabilization << '\n'
    << "discard_fraction=" << format_double(c.discard_fraction) << '\n'
    << "mode=" << c.mode << '\n'
    << "max_dofs=" << c.max_dofs << '\n'
    << "h0=" << format_double(c.h0) << '\n'
    << "out=" << c.out << '\n'
    << "features=" << c.features << '\n'
    << "snapshot_every=" << c.snapshot_every << '\n'
    << "reference_levels=" << c.reference_levels << '\n'
    << "x0=" << format_double(c.x0) << '\n'
    << "y0=" << format_double(c.y0) << '\n'
    << "x1=" << format_double(c.x1) << '\n'
    << "y1=" << format_double(c.y1) << '\n'
    << "dirichlet_sides=" << sides << '\n'
    << "source=" << c.source << '\n'
    << "dirichlet=" << c.dirichlet << '\n'
    << "neumann=" << c.neumann << '\n'
    << "feature_flux=" << c.feature_flux << '\n'
    << "feature_zero=" << c.feature_zero << '\n'
    << "kappa=" << c.kappa << '\n';
  return o.str();
}

std::vector<Feature> load_features(const std::string& path, const Box& domain) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read feature table '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("feature table '" + path + "' is empty");
  if (trim(line) != "i,eps,xc,yc,n_e,theta_deg")
    throw ConfigError("feature table '" + path + "' must start with i,eps,xc,yc,n_e,theta_deg");
  std::vector<Feature> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != 6)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    const auto id = static_cast<int>(parse_int("i", cells[0]));
    const double eps = parse_double("eps", cells[1]);
    const Point2 c{parse_double("xc", cells[2]), parse_double("yc", cells[3])};
    const auto n = static_cast<int>(parse_int("n_e", cells[4]));
    const double theta = parse_double("theta_deg", cells[5]);
    try {
      out.push_back(make_feature(id, regular_polygon(c, eps, n, theta), domain));
    } catch (const GeometryError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      if (features_overlap(out[i], out[j]))
        throw ConfigError("features " + std::to_string(out[i].id) + " and " + std::to_string(out[j].id) +
                          " in '" + path + "' overlap");
  return out;
}

ProblemSpec make_problem(const RunConfig& c) {
  validate(c);
  ProblemSpec p;
  p.name = c.preset;
  p.domain = Box{c.x0, c.y0, c.x1, c.y1};
  p.boundary = box_tagger(p.domain, c.dirichlet_sides);
  p.source = builtin_field(c.source, p.domain);
  p.dirichlet = builtin_field(c.dirichlet, p.domain);
  p.neumann = builtin_field(c.neumann, p.domain);
  p.feature_flux = builtin_field(c.feature_flux, p.domain);
  p.feature_zero = builtin_field(c.feature_zero, p.domain);
  p.kappa = builtin_field(c.kappa, p.domain);
  if (!c.features.empty()) {
    p.features = load_features(c.features, p.domain);
  } else if (c.preset == "test1") {
    p.features.push_back(make_feature(1, regular_polygon({0.2, 0.2}, 0.04, 20, 0.0), p.domain));
  }
  p.validate();
  return p;
}

AdaptiveConfig adaptive_config(const RunConfig& c) {
  validate(c);
  AdaptiveConfig a;
  a.theta = c.theta;
  a.weights = {c.alpha1, c.alpha2, c.alpha3};
  a.flux.stabilization = parse_stabilization(c.stabilization);
  a.flux.beta1 = c.beta1;
  a.flux.beta2 = c.beta2;
  a.flux.discard_fraction = c.discard_fraction;
  a.mode = parse_mode(c.mode);
  a.max_dofs = c.max_dofs;
  a.reference_levels = c.reference_levels;
  return a;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? p : buf);
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string s = "iter,N,eta_div,eta_g,eta_sigma,eta_num,eta_def,eta_total,n_included,error\n";
  for (const auto& r : rows) {
    s += std::to_string(r.iter) + ',' + std::to_string(r.N) + ',' + format_double(r.eta_div) + ',' +
         format_double(r.eta_g) + ',' + format_double(r.eta_sigma) + ',' + format_double(r.eta_num) + ',' +
         format_double(r.eta_def) + ',' + format_double(r.eta_total) + ',' + std::to_string(r.n_included) +
         ',' + (r.error ? format_double(*r.error) : std::string()) + '\n';
  }
  return s;
}

void write_text(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void emit_history(const std::vector<HistoryRow>& rows, const std::string& path) {
  write_text(path, history_csv(rows));
}

namespace {

std::string heat_colour(double t) {
  // blue -> yellow -> red
  t = std::clamp(t, 0.0, 1.0);
  const double r = t < 0.5 ? 2.0 * t : 1.0;
  const double g = t < 0.5 ? 2.0 * t : 2.0 * (1.0 - t);
  const double b = t < 0.5 ? 1.0 - 2.0 * t : 0.0;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 * r), static_cast<int>(255 * g),
                static_cast<int>(255 * b));
  return buf;
}

}  // namespace

std::string snapshot_svg(const Mesh& mesh, const ProblemSpec& spec, const std::vector<double>* indicator) {
  const Box& d = mesh.domain;
  const double size = 800.0;
  const double scale = size / std::max(d.width(), d.height());
  auto X = [&](double x) { return format_double((x - d.x0) * scale); };
  auto Y = [&](double y) { return format_double((d.y1 - y) * scale); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << d.width() * scale << "\" height=\""
    << d.height() * scale << "\">\n";
  double lo = INFINITY, hi = -INFINITY;
  if (indicator) {
    for (double v : *indicator)
      if (v > 0.0) {
        lo = std::min(lo, std::log10(v));
        hi = std::max(hi, std::log10(v));
      }
  }
  const double stroke = std::max(0.2, std::min(1.0, 0.15 * scale * std::sqrt(d.width() * d.height() / std::max<std::size_t>(1, mesh.num_triangles()))));
  o << "<g stroke=\"#333\" stroke-width=\"" << format_double(stroke) << "\">\n";
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto tri = mesh.triangle(static_cast<int>(t));
    std::string fill = "none";
    if (indicator && t < indicator->size() && (*indicator)[t] > 0.0 && hi > lo)
      fill = heat_colour((std::log10((*indicator)[t]) - lo) / (hi - lo));
    o << "<polygon class=\"tri\" fill=\"" << fill << "\" points=\"";
    for (const auto& p : tri) o << X(p.x) << ',' << Y(p.y) << ' ';
    o << "\"/>\n";
  }
  o << "</g>\n";
  for (const auto& f : spec.features) {
    const bool inc = f.included();
    o << "<polygon class=\"" << (inc ? "feature-included" : "feature-neglected") << "\" fill=\""
      << (inc ? "#888" : "none") << "\" stroke=\"" << (inc ? "#000" : "#d00") << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : f.shape.vertices) o << X(p.x) << ',' << Y(p.y) << ' ';
    o << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_snapshot(const AdaptiveState& state, const std::string& path, bool with_indicator) {
  const Mesh& mesh = state.solved_mesh ? *state.solved_mesh : *state.mesh;
  std::vector<double> ind;
  if (with_indicator && state.report.eta_sigma.size() == mesh.num_triangles()) {
    ind.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < ind.size(); ++t) ind[t] = state.report.element_indicator_sq(static_cast<int>(t));
  }
  write_text(path, snapshot_svg(mesh, state.spec, ind.empty() ? nullptr : &ind));
}

std::string mesh_text(const Mesh& mesh) {
  std::string s;
  for (const auto& v : mesh.vertices) s += "v " + format_double(v.x) + ' ' + format_double(v.y) + '\n';
  for (std::size_t i = 0; i < mesh.num_triangles(); ++i) {
    const auto& t = mesh.triangles[i];
    const int gen = i < mesh.generation.size() ? mesh.generation[i] : 0;
    s += "t " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + ' ' +
         std::to_string(gen) + '\n';
  }
  return s;
}

std::string flux_text(const GlobalFlux& flux, const ActiveClassification& cls) {
  std::string s;
  for (int t : cls.active) {
    s += std::to_string(t);
    for (double c : flux.local_dofs(t)) s += ' ' + format_double(c);
    s += '\n';
  }
  return s;
}

}  // namespace defeat
