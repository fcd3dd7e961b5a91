#pragma once

#include "wtpgmr/relevance.hpp"
#include "wtpgmr/tpmodel.hpp"

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wtpgmr {

/// How the per-step loss weight relates to the generated covariance norm.
///  - Literal: sigma proportional to |Sigma|_F (taken literally).
///  - Inverse: sigma proportional to 1 / |Sigma|_F, so tight regions cost more.
enum class WeightMode { Literal, Inverse };

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& s);

struct LossConfig {
  WeightMode weight_mode = WeightMode::Inverse;
};

/// sum_m sum_n sigma_mn |x_d - x_g|^2 over spatial channels, with sigma
/// normalised to sum to 1 over each demonstration's steps.
double weighted_loss(const Dataset& dataset, std::span<const Trajectory> generated, const LossConfig& cfg = {});

struct GoldenResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
  std::vector<std::pair<double, double>> trace;
};

/// Bounded golden-section minimisation on [lo, hi]; stops once the bracket is
/// narrower than tol. Returns the best evaluated point.
GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                            int max_iters = 200);

struct AlphaSearchConfig {
  double lo = -8.0;
  double hi = 8.0;
  int scan_points = 33;  ///< 0 = plain golden section over [lo, hi]
  double tol = 1e-3;
  int max_iters = 200;
  int window = 0;  ///< smoothing window; 0 picks default_window(T)
  LossConfig loss;
  StepFitConfig step;
};

struct AlphaSearchResult {
  double alpha_star = 0.0;
  double loss_star = 0.0;
  int window = 1;
  std::vector<std::pair<double, double>> evaluations;
};

/// Total weighted loss when every demonstration is regenerated with its own
/// frames under the smoothed weights for `alpha`.
double alpha_objective(const TPGMM& model, const Dataset& dataset, const StepGaussians& sg, double alpha,
                       int window, const LossConfig& loss);

/// Coarse scan over [lo, hi] followed by golden-section refinement in the
/// best scan bracket.
AlphaSearchResult optimize_alpha(const TPGMM& model, const Dataset& dataset, const AlphaSearchConfig& cfg = {});
/// Same search with precomputed per-step fits (cfg.step is ignored).
AlphaSearchResult optimize_alpha(const TPGMM& model, const Dataset& dataset, const StepGaussians& sg,
                                 const AlphaSearchConfig& cfg);

}  // namespace wtpgmr
