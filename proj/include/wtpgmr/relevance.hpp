#pragma once

#include "wtpgmr/gaussian.hpp"
#include "wtpgmr/tpmodel.hpp"

#include <span>
#include <vector>

namespace wtpgmr {

struct StepFitConfig {
  /// Per-step covariances get eps = max(rel_eps * mean diagonal, abs_eps) on the diagonal.
  double rel_eps = kDefaultRelativeEps;
  double abs_eps = 1e-12;
};

/// One Gaussian per (time step, frame) over the spatial channels, fitted to
/// the M demonstration points at that step in that frame's coordinates.
struct StepGaussians {
  std::vector<std::vector<Gaussian>> steps;  ///< steps[n][j]
  Mat log_dets;                              ///< T x P cache of log det(cov)

  int T() const { return static_cast<int>(steps.size()); }
  int P() const { return steps.empty() ? 0 : static_cast<int>(steps.front().size()); }
  const Gaussian& at(int n, int j) const { return steps[n][j]; }

  /// Builds from explicit Gaussians (validates and fills the log-det cache).
  static StepGaussians from_grid(std::vector<std::vector<Gaussian>> grid);
};

/// Per-step frame weights. Rows sum to 1.
struct RelevanceProfile {
  Mat weights;  ///< T x P
  double alpha = 0.0;
  int window = 1;

  int T() const { return static_cast<int>(weights.rows()); }
  int P() const { return static_cast<int>(weights.cols()); }
  void validate() const;
};

/// Weights never go below this value; a floored frame is effectively removed.
inline constexpr double kWeightFloor = 1e-12;

StepGaussians fit_step_gaussians(const Dataset& dataset, const StepFitConfig& cfg = {});

/// gamma_{n,j} = det(S_nj)^alpha / sum_j' det(S_nj')^alpha, as a max-shifted
/// softmax of alpha * logdet.
RelevanceProfile frame_weights(const StepGaussians& sg, double alpha);

/// Centred moving average of each frame's weight sequence (truncated at the
/// ends), then row re-normalisation. window must be odd and positive.
RelevanceProfile smooth(const RelevanceProfile& profile, int window);

/// Odd integer nearest T/20, at least 3 (and at most T).
int default_window(int T);

/// User-supplied weights, e.g. hand-tuned confidences. Rows are normalised.
RelevanceProfile manual_profile(const Mat& weights);

/// Fused component i at one time step: product over frames of the placed
/// local Gaussians with covariances divided by gamma_j.
std::vector<Gaussian> weighted_components(const TPGMM& model, std::span<const TaskFrame> frames,
                                          std::span<const double> gamma);

/// wTP-GMR: per step, weighted fusion of every component then GMR at t_n.
Trajectory reproduce_weighted(const TPGMM& model, std::span<const TaskFrame> frames,
                              const RelevanceProfile& profile, std::span<const double> times);

}  // namespace wtpgmr
