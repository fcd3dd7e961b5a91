#include "wtpgmr/generators.hpp"

#include "wtpgmr/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace wtpgmr {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double half_width) {
  return std::uniform_real_distribution<double>(-half_width, half_width)(rng);
}

Eigen::Vector2d hermite(const Eigen::Vector2d& p0, const Eigen::Vector2d& m0, const Eigen::Vector2d& p1,
                        const Eigen::Vector2d& m1, double s) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
}

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Dataset gen_reaching(int M, int T, std::uint64_t seed, double noise_std, const ReachingSpec& spec) {
  if (M < 2) throw ValidationError("gen_reaching: M must be at least 2");
  if (T < 20) throw ValidationError("gen_reaching: T must be at least 20");
  if (noise_std < 0.0) throw ValidationError("gen_reaching: noise_std must be non-negative");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Eigen::Vector2d goal(spec.goal_x, spec.goal_y);

  Dataset ds;
  ds.meta.name = "reaching";
  ds.meta.channel_names = {"t", "x", "y"};
  ds.meta.position_dims = 2;
  for (int m = 0; m < M; ++m) {
    const double bearing = spec.start_bearing + uniform(rng, spec.bearing_spread);
    const double dist = spec.start_distance + uniform(rng, spec.distance_jitter);
    const Eigen::Vector2d start = goal + dist * Eigen::Vector2d(std::cos(bearing), std::sin(bearing));
    const double f1 = spec.phase_fraction + uniform(rng, spec.phase_jitter);
    const double f3 = spec.phase_fraction + uniform(rng, spec.phase_jitter);
    const double f2 = 1.0 - f1 - f3;
    const double speed = 1.0 + uniform(rng, spec.speed_jitter);
    const double h = spec.approach_height * speed * f3 / spec.phase_fraction;
    const Eigen::Vector2d above = goal + Eigen::Vector2d(0.0, h);
    const Eigen::Vector2d to_above = above - start;
    const double heading = std::atan2(to_above.y(), to_above.x()) + uniform(rng, spec.heading_spread);
    const Eigen::Vector2d u(std::cos(heading), std::sin(heading));
    const double L = spec.exit_length * speed * f1 / spec.phase_fraction;
    const Eigen::Vector2d exit_end = start + L * u;
    const Eigen::Vector2d m0 = u * (L * f2 / f1);
    const Eigen::Vector2d m1 = Eigen::Vector2d(0.0, -1.0) * (h * f2 / f3);

    Demonstration d;
    d.points.resize(T, 3);
    for (int n = 0; n < T; ++n) {
      const double tau = static_cast<double>(n) / (T - 1);
      Eigen::Vector2d p;
      if (tau <= f1) {
        p = start + (tau / f1) * L * u;
      } else if (tau < 1.0 - f3) {
        p = hermite(exit_end, m0, above, m1, (tau - f1) / f2);
      } else {
        p = above - Eigen::Vector2d(0.0, h * (tau - (1.0 - f3)) / f3);
      }
      d.points(n, 0) = n + 1;
      d.points(n, 1) = p.x() + noise_std * noise(rng);
      d.points(n, 2) = p.y() + noise_std * noise(rng);
    }
    d.frames = {TaskFrame::planar(start.x(), start.y(), heading), TaskFrame::planar(goal.x(), goal.y(), 0.0)};
    ds.demos.push_back(std::move(d));
  }
  return ds;
}

Vec TraySpec::target(int r, int c) const {
  if (r < 0 || r >= rows || c < 0 || c >= cols) throw ValidationError("tray: cell out of range");
  Vec p(3);
  p << center_x + (c - 0.5 * (cols - 1)) * spacing, center_y + (r - 0.5 * (rows - 1)) * spacing, height;
  return p;
}

std::vector<TaskFrame> pickplace_frames(const TraySpec& tray, int r, int c) {
  Vec b = Vec::Zero(8);
  b.segment(1, 3) = tray.target(r, c);
  Vec d = Vec::Zero(8);
  d.segment(1, 3) << tray.disposal_x, tray.disposal_y, tray.disposal_z;
  return {TaskFrame(Mat::Identity(8, 8), b), TaskFrame(Mat::Identity(8, 8), d)};
}

Dataset gen_pickplace(int M, int T, std::uint64_t seed, const TraySpec& tray) {
  if (M < 2) throw ValidationError("gen_pickplace: M must be at least 2");
  if (T < 20) throw ValidationError("gen_pickplace: T must be at least 20");
  if (tray.rows < 1 || tray.cols < 1) throw ValidationError("gen_pickplace: empty tray");
  if (tray.noise_std < 0.0 || tray.grasp_jitter < 0.0) throw ValidationError("gen_pickplace: negative noise");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int band = std::max(1, tray.rows / 5);
  const int top_count = (2 * M + 2) / 3;

  Dataset ds;
  ds.meta.name = "pickplace";
  ds.meta.channel_names = {"t", "x", "y", "z", "rx", "ry", "rz", "hand"};
  ds.meta.position_dims = 3;
  const Eigen::Vector3d home(tray.home_x, tray.home_y, tray.home_z);
  const Eigen::Vector3d disposal(tray.disposal_x, tray.disposal_y, tray.disposal_z);
  const Eigen::Vector3d up(0.0, 0.0, tray.approach_height);
  for (int m = 0; m < M; ++m) {
    int r = 0;
    if (tray.clustered) {
      const int k = std::uniform_int_distribution<int>(0, band - 1)(rng);
      r = m < top_count ? tray.rows - 1 - k : k;
    } else {
      r = std::uniform_int_distribution<int>(0, tray.rows - 1)(rng);
    }
    const int c = std::uniform_int_distribution<int>(0, tray.cols - 1)(rng);
    const Vec target = tray.target(r, c);
    Eigen::Vector3d grasp(target(0), target(1), target(2) + tray.grasp_height);
    for (int a = 0; a < 3; ++a) grasp(a) += tray.grasp_jitter * noise(rng);
    const double yaw_grasp = 0.3 + 0.05 * noise(rng);
    const double yaw_place = -0.2 + 0.05 * noise(rng);

    // (start, end, from, to) segments in normalised time
    struct Seg {
      double t0, t1;
      Eigen::Vector3d p0, p1;
    };
    const Seg segs[] = {{0.00, 0.30, home, grasp + up},          {0.30, 0.45, grasp + up, grasp},
                        {0.45, 0.55, grasp, grasp},              {0.55, 0.65, grasp, grasp + up},
                        {0.65, 0.90, grasp + up, disposal},      {0.90, 1.00, disposal, disposal}};

    Demonstration d;
    d.points.resize(T, 8);
    for (int n = 0; n < T; ++n) {
      const double tau = static_cast<double>(n) / (T - 1);
      Eigen::Vector3d p = disposal;
      for (const auto& s : segs) {
        if (tau <= s.t1) {
          p = s.p0 + smoothstep((tau - s.t0) / (s.t1 - s.t0)) * (s.p1 - s.p0);
          break;
        }
      }
      double yaw = 0.0;
      if (tau < 0.45) {
        yaw = yaw_grasp * smoothstep(tau / 0.45);
      } else if (tau < 0.65) {
        yaw = yaw_grasp;
      } else {
        yaw = yaw_grasp + (yaw_place - yaw_grasp) * smoothstep((tau - 0.65) / 0.25);
      }
      const double hand = 1.0 - logistic((tau - 0.5) / 0.01) + logistic((tau - 0.95) / 0.01);
      d.points(n, 0) = n + 1;
      for (int a = 0; a < 3; ++a) d.points(n, 1 + a) = p(a) + tray.noise_std * noise(rng);
      d.points(n, 4) = std::numbers::pi - 0.04 + tray.noise_std * noise(rng);
      d.points(n, 5) = tray.noise_std * noise(rng);
      d.points(n, 6) = yaw + tray.noise_std * noise(rng);
      d.points(n, 7) = std::clamp(hand, 0.0, 1.0);
    }
    d.frames = pickplace_frames(tray, r, c);
    ds.demos.push_back(std::move(d));
  }
  return ds;
}

}  // namespace wtpgmr
