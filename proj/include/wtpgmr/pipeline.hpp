#pragma once

#include "wtpgmr/evalx.hpp"
#include "wtpgmr/relevance.hpp"
#include "wtpgmr/tpmodel.hpp"

#include <optional>
#include <vector>

namespace wtpgmr {

/// Everything a model file carries: the TP-GMM, the per-step fits used for
/// relevance weights, the optimised alpha (if any) and the training context
/// needed to evaluate the model without the original dataset.
struct TrainedModel {
  TPGMM gmm;
  StepGaussians steps;
  std::optional<double> alpha;
  int window = 1;
  std::vector<double> times;
  std::vector<std::vector<TaskFrame>> demo_frames;
  ConstraintBoxes boxes;
  DatasetMeta meta;
  std::vector<double> em_log_likelihood;

  /// Smoothed profile for `a`, or for the stored alpha.
  RelevanceProfile profile(std::optional<double> a = std::nullopt) const;
  ModelBundle bundle(Method method) const;
};

struct TrainConfig {
  int K = 3;
  EmConfig em;
  StepFitConfig step;
  BoxConfig boxes;
};

/// Fits the TP-GMM and per-step Gaussians on an aligned dataset.
TrainedModel train_model(const Dataset& dataset, const TrainConfig& cfg = {});

/// Runs the alpha search on `dataset` with the model's own per-step fits and
/// stores alpha and window in `model`.
AlphaSearchResult fit_alpha(TrainedModel& model, const Dataset& dataset, const AlphaSearchConfig& cfg = {});

}  // namespace wtpgmr
