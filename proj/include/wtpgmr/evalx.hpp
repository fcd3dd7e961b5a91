#pragma once

#include "wtpgmr/optimize.hpp"
#include "wtpgmr/relevance.hpp"
#include "wtpgmr/tpmodel.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wtpgmr {

enum class Method { TPGMR, WTPGMR };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// Axis-aligned box in a frame's local position coordinates.
struct Box {
  Vec lo;
  Vec hi;
  bool contains(const Vec& p) const;
};

struct ConstraintBoxes {
  Box start_box;
  Box goal_box;
  int n_pts = 10;
  int start_frame = 0;
  int goal_frame = 1;
};

struct BoxConfig {
  int n_pts = 10;
  /// Every side grows by margin times the box's largest side length.
  double margin = 0.05;
  int start_frame = 0;
  int goal_frame = 1;
};

struct TrajMetrics {
  double path_length = 0.0;
  double start_error = 0.0;
  double end_error = 0.0;
  /// Mean of start and end errors ("task error").
  double task_error = 0.0;
  int constraint_error = 0;
  bool failed = false;
  std::string flags;
};

/// Sum of segment lengths over the first `position_dims` spatial channels.
double path_length(const Trajectory& traj, int position_dims);

/// Distances of the first mean to start.b and the last mean to goal.b
/// (position channels only).
std::pair<double, double> endpoint_errors(const Trajectory& traj, const TaskFrame& start, const TaskFrame& goal,
                                          int position_dims);

/// Local position of a trajectory mean (spatial channels) in a frame.
Vec local_position(const Vec& spatial_mean, const TaskFrame& frame, int position_dims);

ConstraintBoxes fit_constraint_boxes(const Dataset& dataset, const BoxConfig& cfg = {});

/// |#inside(start box) - n_pts| + |#inside(goal box) - n_pts|.
int constraint_error(const Trajectory& traj, const TaskFrame& start, const TaskFrame& goal,
                     const ConstraintBoxes& boxes, int position_dims);

struct LooConfig {
  int K = 3;
  EmConfig em;
  AlphaSearchConfig alpha;
  int threads = 1;
};

struct LooFold {
  int held_out = 0;
  double rmse = 0.0;
  double alpha = 0.0;  ///< 0 for TP-GMR
};

struct LooResult {
  double rmse_mean = 0.0;
  double rmse_std = 0.0;  ///< sample standard deviation across folds
  std::vector<LooFold> folds;
};

/// Exhaustive leave-one-out: retrain (and for wTP-GMR re-optimise alpha) on
/// M-1 demonstrations, regenerate the held-out one from its own frames.
LooResult loo_cross_validate(const Dataset& dataset, Method method, const LooConfig& cfg);

/// A trained model plus, for wTP-GMR, the smoothed relevance profile.
struct ModelBundle {
  TPGMM model;
  std::optional<RelevanceProfile> profile;
  std::vector<double> times;

  Trajectory generate(std::span<const TaskFrame> frames) const;
};

enum class OrientationRule { DemoMean, Fixed };

struct GridSpec {
  double x_min = -5.0;
  double x_max = 5.0;
  double y_min = -5.0;
  double y_max = 5.0;
  int cells_per_side = 21;
  OrientationRule orientation_rule = OrientationRule::DemoMean;
  /// Start-frame rotation applied to every cell (resolved from the rule).
  double start_angle = 0.0;
  TaskFrame goal_frame;
  int start_frame = 0;
  int goal_frame_index = 1;

  void validate() const;
  /// Centre of cell (ix, iy).
  std::pair<double, double> cell_center(int ix, int iy) const;
};

/// Rotation angle of a planar frame, atan2(A(2,1), A(1,1)).
double planar_angle(const TaskFrame& frame);

/// Circular mean of the planar angle of frame `frame` over demonstrations.
double mean_frame_angle(const std::vector<std::vector<TaskFrame>>& demo_frames, int frame);

/// Grid centred at the origin spanning `extent` per side. The goal frame is the
/// demonstrations' mean goal frame; the start orientation follows `rule`.
GridSpec make_grid_spec(const std::vector<std::vector<TaskFrame>>& demo_frames, double extent, int cells,
                        OrientationRule rule, double fixed_angle = 0.0, int start_frame = 0, int goal_frame = 1);

struct GridRow {
  double cell_x = 0.0;
  double cell_y = 0.0;
  TrajMetrics metrics;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

struct GridSummary {
  Stat path_length;
  Stat start_error;
  Stat end_error;
  Stat task_error;
  Stat constraint_error;
  int cells = 0;
  int failures = 0;
};

struct GridReport {
  std::vector<GridRow> rows;  ///< row-major: iy outer, ix inner
  GridSummary summary;
};

GridReport grid_eval(const ModelBundle& bundle, const GridSpec& grid, const ConstraintBoxes& boxes, int position_dims,
                     int threads = 1);

/// Mean and sample standard deviation.
Stat mean_std(std::span<const double> values);

/// Reference critical points of a pick-and-place demonstration set.
struct CriticalReference {
  Vec start;        ///< mean global start position
  Vec grasp_local;  ///< mean hand position at closing, in the grasp frame
  Vec place_local;  ///< mean hand position at opening, in the place frame
  int grasp_frame = 0;
  int place_frame = 1;
  int hand_channel = 0;  ///< index into the spatial channels
  int position_dims = 3;
  double threshold = 0.5;
};

struct CriticalErrors {
  double start_error = 0.0;
  double grasp_error = 0.0;
  double place_error = 0.0;
  bool grasp_failed = false;
  bool place_failed = false;
};

/// First step where the hand signal drops below the threshold, and the first
/// later step where it rises back to it. -1 when absent.
std::pair<int, int> hand_events(std::span<const double> hand, double threshold);

CriticalReference fit_critical_reference(const Dataset& dataset, double threshold = 0.5, int grasp_frame = 0,
                                         int place_frame = 1);

CriticalErrors critical_point_errors(const Trajectory& traj, std::span<const TaskFrame> frames,
                                     const CriticalReference& ref);

}  // namespace wtpgmr
