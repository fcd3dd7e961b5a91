#include "wtpgmr/relevance.hpp"

#include "wtpgmr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wtpgmr {

namespace {

void floor_and_normalize(Eigen::Ref<Vec> row) {
  row = row.cwiseMax(kWeightFloor);
  row /= row.sum();
}

}  // namespace

StepGaussians StepGaussians::from_grid(std::vector<std::vector<Gaussian>> grid) {
  StepGaussians sg;
  sg.steps = std::move(grid);
  if (sg.steps.empty() || sg.steps.front().empty()) throw ValidationError("step gaussians: empty grid");
  const auto P = sg.steps.front().size();
  sg.log_dets.resize(sg.T(), static_cast<Eigen::Index>(P));
  for (int n = 0; n < sg.T(); ++n) {
    if (sg.steps[n].size() != P) throw ValidationError("step gaussians: ragged grid");
    for (std::size_t j = 0; j < P; ++j) {
      sg.log_dets(n, static_cast<Eigen::Index>(j)) = log_det(sg.steps[n][j].cov);
    }
  }
  return sg;
}

void RelevanceProfile::validate() const {
  if (weights.rows() == 0 || weights.cols() == 0) throw ValidationError("profile: empty");
  if (!weights.allFinite()) throw ValidationError("profile: non-finite weights");
  for (Eigen::Index n = 0; n < weights.rows(); ++n) {
    if (std::abs(weights.row(n).sum() - 1.0) > 1e-9) {
      throw ValidationError("profile: row " + std::to_string(n) + " does not sum to 1");
    }
    if ((weights.row(n).array() <= 0.0).any() || (weights.cols() > 1 && (weights.row(n).array() >= 1.0).any())) {
      throw ValidationError("profile: weights must lie in (0,1)");
    }
  }
}

StepGaussians fit_step_gaussians(const Dataset& dataset, const StepFitConfig& cfg) {
  dataset.validate();
  if (!dataset.aligned()) throw ValidationError("fit_step_gaussians: demonstrations are not aligned (resample first)");
  const int M = dataset.num_demos();
  const int P = dataset.num_frames();
  const int T = static_cast<int>(dataset.demos.front().length());
  const int out = dataset.out_dim();

  std::vector<std::vector<Mat>> local(P);
  for (int j = 0; j < P; ++j) {
    for (const auto& d : dataset.demos) local[j].push_back(project(d, j));
  }

  std::vector<std::vector<Gaussian>> grid(T, std::vector<Gaussian>(P));
  Mat samples(M, out);
  for (int n = 0; n < T; ++n) {
    for (int j = 0; j < P; ++j) {
      for (int m = 0; m < M; ++m) samples.row(m) = local[j][m].row(n).tail(out);
      const Vec mean = samples.colwise().mean().transpose();
      const Mat centered = samples.rowwise() - mean.transpose();
      const Mat cov = symmetrized(centered.transpose() * centered / static_cast<double>(M));
      grid[n][j] = Gaussian(mean, regularize(cov, std::max(cfg.rel_eps * cov.diagonal().mean(), cfg.abs_eps)));
    }
  }
  return StepGaussians::from_grid(std::move(grid));
}

RelevanceProfile frame_weights(const StepGaussians& sg, double alpha) {
  if (sg.T() == 0) throw ValidationError("frame_weights: empty step gaussians");
  if (!sg.log_dets.allFinite()) throw NumericalError("frame_weights: non-finite determinant");
  if (!std::isfinite(alpha)) throw ValidationError("frame_weights: alpha must be finite");
  RelevanceProfile prof;
  prof.alpha = alpha;
  prof.window = 1;
  prof.weights.resize(sg.T(), sg.P());
  for (int n = 0; n < sg.T(); ++n) {
    const Vec logits = alpha * sg.log_dets.row(n).transpose();
    Vec w = (logits.array() - logits.maxCoeff()).exp().matrix();
    w /= w.sum();
    if (sg.P() > 1 && w.minCoeff() < kWeightFloor) floor_and_normalize(w);
    prof.weights.row(n) = w.transpose();
  }
  return prof;
}

RelevanceProfile smooth(const RelevanceProfile& profile, int window) {
  if (window <= 0 || window % 2 == 0) throw ValidationError("smooth: window must be an odd positive integer");
  if (window > profile.T()) throw ValidationError("smooth: window longer than the profile");
  RelevanceProfile out = profile;
  out.window = window;
  if (window == 1) return out;
  const int half = window / 2;
  const int T = profile.T();
  for (int n = 0; n < T; ++n) {
    const int lo = std::max(0, n - half);
    const int hi = std::min(T - 1, n + half);
    Vec row = profile.weights.middleRows(lo, hi - lo + 1).colwise().mean().transpose();
    row /= row.sum();
    out.weights.row(n) = row.transpose();
  }
  return out;
}

int default_window(int T) {
  int w = static_cast<int>(std::lround(T / 20.0));
  if (w % 2 == 0) w += (T / 20.0 >= w) ? 1 : -1;
  w = std::max(w, 3);
  if (w > T) w = (T % 2 == 1) ? T : T - 1;
  return std::max(w, 1);
}

RelevanceProfile manual_profile(const Mat& weights) {
  if (weights.rows() == 0 || weights.cols() == 0) throw ValidationError("manual_profile: empty weights");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw ValidationError("manual_profile: weights must be finite and non-negative");
  }
  RelevanceProfile prof;
  prof.weights = weights;
  for (Eigen::Index n = 0; n < weights.rows(); ++n) {
    Vec row = prof.weights.row(n).transpose();
    if (!(row.sum() > 0.0)) throw ValidationError("manual_profile: row " + std::to_string(n) + " is all zero");
    row /= row.sum();
    if (weights.cols() > 1) floor_and_normalize(row);
    prof.weights.row(n) = row.transpose();
  }
  return prof;
}

namespace {

std::vector<Information> placed_information(const TPGMM& model, std::span<const TaskFrame> frames) {
  if (static_cast<int>(frames.size()) != model.P()) throw ValidationError("weighted reproduction: frame count mismatch");
  std::vector<Information> placed;
  placed.reserve(static_cast<std::size_t>(model.K() * model.P()));
  for (int i = 0; i < model.K(); ++i) {
    for (int j = 0; j < model.P(); ++j) {
      placed.push_back(to_information(transform(model.components[i][j], frames[j].A, frames[j].b)));
    }
  }
  return placed;
}

std::vector<Gaussian> fuse(const std::vector<Information>& placed, int K, int P, std::span<const double> gamma) {
  std::vector<Gaussian> out;
  out.reserve(K);
  for (int i = 0; i < K; ++i) {
    const auto& first = placed[static_cast<std::size_t>(i * P)];
    Information acc{Vec::Zero(first.eta.size()), Mat::Zero(first.precision.rows(), first.precision.cols())};
    for (int j = 0; j < P; ++j) {
      const double g = std::max(gamma[j], kWeightFloor);
      const auto& info = placed[static_cast<std::size_t>(i * P + j)];
      acc.precision += g * info.precision;
      acc.eta += g * info.eta;
    }
    out.push_back(from_information(acc));
  }
  return out;
}

}  // namespace

std::vector<Gaussian> weighted_components(const TPGMM& model, std::span<const TaskFrame> frames,
                                          std::span<const double> gamma) {
  if (static_cast<int>(gamma.size()) != model.P()) throw ValidationError("weighted_components: weight count mismatch");
  return fuse(placed_information(model, frames), model.K(), model.P(), gamma);
}

Trajectory reproduce_weighted(const TPGMM& model, std::span<const TaskFrame> frames,
                              const RelevanceProfile& profile, std::span<const double> times) {
  if (profile.T() != static_cast<int>(times.size())) throw ValidationError("reproduce_weighted: profile length does not match times");
  if (profile.P() != model.P()) throw ValidationError("reproduce_weighted: profile frame count does not match model");
  const auto placed = placed_information(model, frames);
  const auto T = static_cast<Eigen::Index>(times.size());
  Trajectory traj;
  traj.times = Eigen::Map<const Vec>(times.data(), T);
  traj.means.resize(T, model.D() - 1);
  traj.covs.resize(T);
  std::vector<double> gamma(model.P());
  for (Eigen::Index n = 0; n < T; ++n) {
    for (int j = 0; j < model.P(); ++j) gamma[j] = profile.weights(n, j);
    const auto comps = fuse(placed, model.K(), model.P(), gamma);
    const auto r = gmr(comps, model.priors, times[n]);
    traj.means.row(n) = r.output.mean.transpose();
    traj.covs[n] = r.output.cov;
    if (r.fallback) ++traj.fallback_steps;
  }
  return traj;
}

}  // namespace wtpgmr
