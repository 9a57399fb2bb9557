#pragma once

#include <vector>

#include "defeat/flux.hpp"
#include "defeat/mesh.hpp"
#include "defeat/primal.hpp"
#include "defeat/problem.hpp"

namespace defeat {

struct EstimatorWeights {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;
};

/// Root of zeta = -log(zeta).
double zeta_constant();

/// max(-log(length), zeta)^(1/2).
double c_omega(double length);

/// Data of the boundary mismatch on the interior boundary of one feature.
struct FeatureBoundaryData {
  double length = 0.0;         // |gamma~_F|
  double mean_mismatch = 0.0;  // mean of g + sigma.n over gamma~_F
  double data_mean = 0.0;      // data-driven mean d_F
  double oscillation_sq = 0.0; // ||d - mean||^2 over gamma~_F
  double c = 0.0;
};

FeatureBoundaryData feature_boundary_data(const Feature& feature, const GlobalFlux& flux,
                                          const ActiveClassification& cls,
                                          const ProblemSpec& spec);

/// Defeaturing indicator of a neglected feature.
double eta_feature(const Feature& feature, const GlobalFlux& flux,
                   const ActiveClassification& cls, const ProblemSpec& spec);

struct ElementIndicators {
  double div = 0.0;
  double g = 0.0;
  double sigma = 0.0;
};

ElementIndicators eta_element(int t, const GlobalFlux& flux, const DiscreteSolution& u,
                              const ProblemSpec& spec, const ActiveClassification& cls);

struct EstimatorReport {
  std::vector<double> eta_div;    // per triangle
  std::vector<double> eta_g;      // per triangle
  std::vector<double> eta_sigma;  // per triangle
  std::vector<double> eta_F;      // per feature (0 for included ones)
  double eta_div_total = 0.0;     // (sum alpha1 eta_div^2)^(1/2)
  double eta_g_total = 0.0;
  double eta_sigma_total = 0.0;
  double eta_num = 0.0;
  double eta_def = 0.0;
  double eta_total = 0.0;
  EstimatorWeights weights;

  /// alpha1 eta_div^2 + alpha2 eta_g^2 + eta_sigma^2 on triangle t.
  double element_indicator_sq(int t) const;
  double feature_indicator_sq(int f) const;
};

EstimatorReport totals(std::vector<double> eta_div, std::vector<double> eta_g,
                       std::vector<double> eta_sigma, std::vector<double> eta_F,
                       const EstimatorWeights& weights = {});

EstimatorReport estimate(const Mesh& mesh, const ActiveClassification& cls,
                         const DiscreteSolution& u, const GlobalFlux& flux,
                         const ProblemSpec& spec, const EstimatorWeights& weights = {});

}  // namespace defeat
