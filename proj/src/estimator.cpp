#include "defeat/estimator.hpp"

#include <cmath>
#include <stdexcept>

#include "defeat/parallel.hpp"
#include "defeat/quadrature.hpp"

namespace defeat {

double zeta_constant() {
  static const double zeta = [] {
    double z = 0.5;
    for (int k = 0; k < 1000; ++k) {
      // Newton on z + log z = 0 converges much faster than z <- exp(-z)
      const double next = z - (z + std::log(z)) / (1.0 + 1.0 / z);
      if (std::abs(next - z) < 1e-16) return next;
      z = next;
    }
    return z;
  }();
  return zeta;
}

double c_omega(double length) {
  if (!(length > 0.0)) throw std::invalid_argument("c_omega: length must be positive");
  return std::sqrt(std::max(-std::log(length), zeta_constant()));
}

namespace {

double eval_or_zero(const ScalarField& f, Point2 p) { return f ? f(p) : 0.0; }

QuadratureRule active_rule(const Mesh& mesh, const ActiveClassification& cls, int t) {
  if (cls.is_clipped(t)) return cut_rule(cls.pieces[static_cast<std::size_t>(t)]);
  return triangle_rule(mesh.triangle(t));
}

}  // namespace

FeatureBoundaryData feature_boundary_data(const Feature& feature, const GlobalFlux& flux,
                                          const ActiveClassification& cls,
                                          const ProblemSpec& spec) {
  const Mesh& mesh = *flux.mesh;
  FeatureBoundaryData out;
  out.length = feature.gamma_tilde_length();
  if (!(out.length > 0.0))
    throw std::invalid_argument("feature " + std::to_string(feature.id) + " has an empty interior boundary");
  out.c = c_omega(out.length);

  BoundingBox box = feature.shape.bbox();
  std::vector<double> w, d;
  double covered = 0.0;
  for (int t : cls.active) {
    const auto tri = mesh.triangle(t);
    BoundingBox tb;
    for (const auto& p : tri) tb.expand(p);
    if (!tb.overlaps(box)) continue;
    for (const auto& seg : clip_segments_to_triangle(tri, feature.gamma_tilde)) {
      covered += seg.length();
      const auto rule = segment_rule(seg);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point2 p = rule.points[q];
        w.push_back(rule.weights[q]);
        d.push_back(eval_or_zero(spec.feature_flux, p) + dot(flux.value(t, p), seg.normal));
      }
    }
  }
  if (std::abs(covered - out.length) > 1e-9 * out.length)
    throw std::runtime_error("feature " + std::to_string(feature.id) + " is not covered by the active mesh");

  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * d[i];
  out.mean_mismatch = sum / out.length;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = d[i] - out.mean_mismatch;
    out.oscillation_sq += w[i] * r * r;
  }

  double g_int = 0.0, f_int = 0.0, g0_int = 0.0;
  for (const auto& seg : feature.gamma_tilde) {
    const auto rule = segment_rule(seg);
    for (std::size_t q = 0; q < rule.size(); ++q) g_int += rule.weights[q] * eval_or_zero(spec.feature_flux, rule.points[q]);
  }
  for (const auto& seg : feature.gamma_zero) {
    const auto rule = segment_rule(seg);
    for (std::size_t q = 0; q < rule.size(); ++q) g0_int += rule.weights[q] * eval_or_zero(spec.feature_zero, rule.points[q]);
  }
  if (spec.source) {
    const auto rule = cut_rule(feature.convex_parts);
    for (std::size_t q = 0; q < rule.size(); ++q) f_int += rule.weights[q] * spec.source(rule.points[q]);
  }
  out.data_mean = (g_int - f_int - g0_int) / out.length;
  return out;
}

double eta_feature(const Feature& feature, const GlobalFlux& flux, const ActiveClassification& cls,
                   const ProblemSpec& spec) {
  if (feature.included())
    throw std::invalid_argument("eta_feature: feature " + std::to_string(feature.id) + " is included");
  const auto b = feature_boundary_data(feature, flux, cls, spec);
  const double sq = b.length * b.oscillation_sq + b.c * b.c * b.length * b.length * b.data_mean * b.data_mean;
  return std::sqrt(sq);
}

ElementIndicators eta_element(int t, const GlobalFlux& flux, const DiscreteSolution& u,
                              const ProblemSpec& spec, const ActiveClassification& cls) {
  const Mesh& mesh = *flux.mesh;
  ElementIndicators out;
  if (!cls.is_active(t)) return out;
  const auto tri = mesh.triangle(t);
  const double h = mesh.diameter(t);
  const double kappa = spec.kappa_at(centroid(tri));
  const Point2 ku = kappa * u.gradient(mesh, t);
  const auto dofs = flux.local_dofs(t);
  const auto& rt = flux.elements[static_cast<std::size_t>(t)];
  const bool cut = cls.is_cut(t);

  const auto rule = active_rule(mesh, cls, t);
  double s_sigma = 0.0, s_div = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Point2 p = rule.points[q];
    const Point2 r = rt.eval(dofs, p) + ku;
    s_sigma += rule.weights[q] * dot(r, r) / kappa;
    if (cut) {
      const double m = eval_or_zero(spec.source, p) - rt.eval_divergence(dofs, p);
      s_div += rule.weights[q] * m * m;
    }
  }
  out.sigma = std::sqrt(s_sigma);
  if (!cut) return out;
  out.div = h * std::sqrt(s_div);
  double s_g = 0.0;
  for (const auto& seg : cls.segments[static_cast<std::size_t>(t)]) {
    const auto srule = segment_rule(seg);
    for (std::size_t q = 0; q < srule.size(); ++q) {
      const Point2 p = srule.points[q];
      const double m = eval_or_zero(spec.feature_flux, p) + dot(rt.eval(dofs, p), seg.normal);
      s_g += srule.weights[q] * m * m;
    }
  }
  out.g = std::sqrt(h) * std::sqrt(s_g);
  return out;
}

double EstimatorReport::element_indicator_sq(int t) const {
  const auto i = static_cast<std::size_t>(t);
  return weights.alpha1 * eta_div[i] * eta_div[i] + weights.alpha2 * eta_g[i] * eta_g[i] +
         eta_sigma[i] * eta_sigma[i];
}

double EstimatorReport::feature_indicator_sq(int f) const {
  const double e = eta_F[static_cast<std::size_t>(f)];
  return weights.alpha3 * e * e;
}

EstimatorReport totals(std::vector<double> eta_div, std::vector<double> eta_g,
                       std::vector<double> eta_sigma, std::vector<double> eta_F,
                       const EstimatorWeights& weights) {
  if (weights.alpha1 < 0.0 || weights.alpha2 < 0.0 || weights.alpha3 < 0.0)
    throw std::invalid_argument("estimator weights must be nonnegative");
  if (eta_div.size() != eta_sigma.size() || eta_g.size() != eta_sigma.size())
    throw std::invalid_argument("per-element indicator arrays differ in length");
  EstimatorReport r;
  r.weights = weights;
  double sd = 0.0, sg = 0.0, ss = 0.0, sf = 0.0;
  for (std::size_t i = 0; i < eta_sigma.size(); ++i) {
    sd += eta_div[i] * eta_div[i];
    sg += eta_g[i] * eta_g[i];
    ss += eta_sigma[i] * eta_sigma[i];
  }
  for (double e : eta_F) sf += e * e;
  r.eta_div_total = std::sqrt(weights.alpha1 * sd);
  r.eta_g_total = std::sqrt(weights.alpha2 * sg);
  r.eta_sigma_total = std::sqrt(ss);
  r.eta_num = r.eta_div_total + r.eta_g_total + r.eta_sigma_total;
  r.eta_def = std::sqrt(weights.alpha3 * sf);
  r.eta_total = r.eta_num + r.eta_def;
  r.eta_div = std::move(eta_div);
  r.eta_g = std::move(eta_g);
  r.eta_sigma = std::move(eta_sigma);
  r.eta_F = std::move(eta_F);
  return r;
}

EstimatorReport estimate(const Mesh& mesh, const ActiveClassification& cls,
                         const DiscreteSolution& u, const GlobalFlux& flux,
                         const ProblemSpec& spec, const EstimatorWeights& weights) {
  const std::size_t nt = mesh.num_triangles();
  std::vector<double> div(nt, 0.0), g(nt, 0.0), sigma(nt, 0.0);
  parallel_for(cls.active.size(), [&](std::size_t i) {
    const int t = cls.active[i];
    const auto e = eta_element(t, flux, u, spec, cls);
    div[static_cast<std::size_t>(t)] = e.div;
    g[static_cast<std::size_t>(t)] = e.g;
    sigma[static_cast<std::size_t>(t)] = e.sigma;
  });
  std::vector<double> ef(spec.features.size(), 0.0);
  for (std::size_t f = 0; f < spec.features.size(); ++f)
    if (!spec.features[f].included()) ef[f] = eta_feature(spec.features[f], flux, cls, spec);
  return totals(std::move(div), std::move(g), std::move(sigma), std::move(ef), weights);
}

}  // namespace defeat
