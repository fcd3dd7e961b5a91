#pragma once

#include "wtpgmr/tpmodel.hpp"

#include <cstdint>

namespace wtpgmr {

/// Geometry of the synthetic planar reaching task. Angles in radians,
/// distances in metres. Every demo: straight exit along the start frame's
/// x-axis, a cubic blend, then a vertical descent onto the goal.
struct ReachingSpec {
  double goal_x = -0.8;
  double goal_y = -0.8;
  double start_distance = 1.5;
  double distance_jitter = 0.15;
  double start_bearing = 0.7853981633974483;  ///< direction of the starts seen from the goal
  double bearing_spread = 0.5;                ///< uniform +- around start_bearing
  double heading_spread = 0.6;                ///< exit heading: +- around the line to the approach point
  /// Exit length and approach height at the nominal phase fraction and speed.
  /// Both scale with each demo's phase length and speed factor.
  double exit_length = 0.3;
  double approach_height = 0.3;
  double speed_jitter = 0.0;  ///< relative, uniform +-
  double phase_fraction = 1.0 / 3.0;
  double phase_jitter = 0.05;  ///< uniform +- on the exit and descent fractions
};

/// Tray of grasp targets plus a fixed disposal location.
struct TraySpec {
  int rows = 10;
  int cols = 10;
  double spacing = 0.05;
  double center_x = 0.6;
  double center_y = 0.0;
  double height = 0.0;
  double disposal_x = 0.2;
  double disposal_y = 0.6;
  double disposal_z = 0.15;
  double home_x = 0.3;
  double home_y = -0.3;
  double home_z = 0.45;
  double approach_height = 0.15;
  double grasp_height = 0.02;
  double grasp_jitter = 0.01;  ///< per-demo offset of the grasp point from the target
  /// Draw targets from two clusters (top rows and bottom rows) instead of the
  /// whole tray.
  bool clustered = false;
  double noise_std = 0.002;

  /// Position of tray cell (r, c).
  Vec target(int r, int c) const;
};

/// Reaching demos: state (t, x, y), frames {start, goal}, goal frame identity
/// orientation. Deterministic for a given seed.
Dataset gen_reaching(int M, int T, std::uint64_t seed, double noise_std, const ReachingSpec& spec = {});

/// Pick-and-place demos: state (t, p[3], axis-angle[3], hand), frames
/// {grasp target, disposal}, both with identity orientation. Hand is 1 when
/// open and 0 when closed.
Dataset gen_pickplace(int M, int T, std::uint64_t seed, const TraySpec& tray = {});

/// Frames for a pick-and-place query at tray cell (r, c).
std::vector<TaskFrame> pickplace_frames(const TraySpec& tray, int r, int c);

}  // namespace wtpgmr
