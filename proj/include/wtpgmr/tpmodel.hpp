#pragma once

#include "wtpgmr/gaussian.hpp"

#include <span>
#include <string>
#include <vector>

namespace wtpgmr {

/// Affine task frame {A, b}. Local coordinates are A^-1 (x - b).
///
/// For states with a leading time channel, A is block diagonal with A(0,0) = 1
/// and b(0) = 0, so a frame never shifts or scales time.
struct TaskFrame {
  Mat A;
  Vec b;

  TaskFrame() = default;
  TaskFrame(Mat a, Vec offset);

  Eigen::Index dim() const { return b.size(); }

  /// Throws ValidationError if A is not square, is singular, or (with a time
  /// channel) mixes time with the state channels.
  void validate(bool has_time_channel = true) const;

  /// A^-1 (x - b)
  Vec to_local(const Vec& x) const;
  /// A x + b
  Vec to_global(const Vec& x) const;

  static TaskFrame identity(Eigen::Index dim);
  /// Planar frame for (t, x, y) states: b = (0, x, y), A = diag(1, R(angle)).
  static TaskFrame planar(double x, double y, double angle);
};

struct Demonstration {
  Mat points;  ///< T x D, column 0 is time
  std::vector<TaskFrame> frames;

  Eigen::Index length() const { return points.rows(); }
};

struct DatasetMeta {
  std::string name;
  std::vector<std::string> channel_names;
  /// Number of leading spatial channels that are Cartesian positions (metres).
  int position_dims = 0;
};

struct Dataset {
  std::vector<Demonstration> demos;
  DatasetMeta meta;

  int dim() const { return demos.empty() ? 0 : static_cast<int>(demos.front().points.cols()); }
  int num_frames() const { return demos.empty() ? 0 : static_cast<int>(demos.front().frames.size()); }
  int num_demos() const { return static_cast<int>(demos.size()); }
  /// Spatial channels (everything except time).
  int out_dim() const { return dim() - 1; }
  /// Position channel count, defaulting to every spatial channel.
  int position_dims() const { return meta.position_dims > 0 ? meta.position_dims : out_dim(); }

  /// True when every demonstration has the same number of samples.
  bool aligned() const;
  /// Checks shared D and P, frame validity and strictly increasing time.
  void validate() const;
  /// Copy without demonstration `m`.
  Dataset without(int m) const;
};

/// Task-parameterised GMM. components[i][j] is component i seen from frame j.
struct TPGMM {
  Vec priors;
  std::vector<std::vector<Gaussian>> components;

  int K() const { return static_cast<int>(priors.size()); }
  int P() const { return components.empty() ? 0 : static_cast<int>(components.front().size()); }
  int D() const { return P() == 0 ? 0 : static_cast<int>(components.front().front().dim()); }
  void validate() const;
};

/// GMR output along a time grid. means is T x (D-1), one covariance per step.
struct Trajectory {
  Vec times;
  Mat means;
  std::vector<Mat> covs;
  /// Steps where every GMR responsibility underflowed and a uniform mixture was used.
  int fallback_steps = 0;

  Eigen::Index length() const { return times.size(); }
};

/// A^-1 (x_n - b) for every row of the demonstration.
Mat project(const Demonstration& demo, int frame);

enum class TimeAxis { Steps, Normalized };

/// Linear interpolation of every demonstration onto T uniform samples of its
/// normalised time. The time column becomes 1..T (Steps) or 0..1 (Normalized).
Dataset resample(const Dataset& dataset, int T, TimeAxis axis = TimeAxis::Steps);

struct EmConfig {
  double tol = 1e-5;  ///< relative objective improvement
  int max_iters = 200;
  double rel_eps = 1e-6;  ///< covariance floor relative to channel variance
  double abs_eps = 1e-8;  ///< absolute floor for constant channels
  double min_mass = 1.0;  ///< responsibility mass below which a component is degenerate
  int max_restarts = 3;
};

struct EmResult {
  TPGMM model;
  /// Regularised log-likelihood at each iteration; non-decreasing between restarts.
  std::vector<double> log_likelihood;
  /// Indices into log_likelihood at which a degenerate component was reset.
  std::vector<int> restarts;
  int iterations = 0;
  bool converged = false;
};

/// EM over the product-of-frames likelihood with shared responsibilities,
/// initialised by equal time bins.
EmResult fit_em(const Dataset& dataset, int K, const EmConfig& cfg = {});

/// Transform every frame-local component into the world, then multiply across frames.
std::vector<Gaussian> global_components(const TPGMM& model, std::span<const TaskFrame> frames);

struct GmrResult {
  Gaussian output;
  Vec responsibilities;
  bool fallback = false;
};

/// Time-driven GMR: conditions every component on channel 0 = t and
/// moment-matches the resulting mixture.
GmrResult gmr(std::span<const Gaussian> components, const Vec& priors, double t);

/// Baseline TP-GMR with static frames.
Trajectory reproduce(const TPGMM& model, std::span<const TaskFrame> frames, std::span<const double> times);

/// Baseline TP-GMR with one frame set per time step.
Trajectory reproduce(const TPGMM& model, const std::vector<std::vector<TaskFrame>>& frames_per_step,
                     std::span<const double> times);

/// 1..T
std::vector<double> step_times(int T);

/// sqrt(mean_n |x_n - y_n|^2) over the spatial channels of a demo.
double trajectory_rmse(const Demonstration& demo, const Trajectory& traj);

}  // namespace wtpgmr
