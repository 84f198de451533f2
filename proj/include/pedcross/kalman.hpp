#pragma once

#include <Eigen/Dense>

#include "pedcross/errors.hpp"
#include "pedcross/pose.hpp"

namespace pedcross::track {

/// State: (u, v, a, h) bbox center, aspect ratio, height, plus per-frame
/// velocities of each.
struct KalmanState {
  Eigen::VectorXd mean;        // 8
  Eigen::MatrixXd covariance;  // 8x8
};

struct KalmanParams {
  // Process and measurement noise scale with the current bbox height; the
  // aspect-ratio components use absolute stds.
  double pos_std_weight = 1.0 / 20.0;
  double vel_std_weight = 1.0 / 160.0;
  double meas_std_weight = 1.0 / 20.0;
  double aspect_process_std = 1e-2;
  double aspect_vel_std = 1e-3;
  double aspect_meas_std = 1e-1;
};

/// Generic linear Kalman measurement update (Joseph-form covariance).
/// Returns the posterior (mean, covariance).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> kalman_update_generic(
    const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Eigen::VectorXd& z,
    const Eigen::MatrixXd& H, const Eigen::MatrixXd& R);

/// Constant-velocity motion model over bbox measurements (u, v, a, h).
class BoxMotionModel {
 public:
  static constexpr int kStateDim = 8;
  static constexpr int kMeasDim = 4;

  explicit BoxMotionModel(const KalmanParams& params = {});

  KalmanState initiate(const Eigen::Vector4d& measurement) const;
  KalmanState predict(const KalmanState& s) const;
  KalmanState update(const KalmanState& s, const Eigen::Vector4d& measurement) const;

  /// Predicted measurement and its innovation covariance S = HPH' + R.
  std::pair<Eigen::Vector4d, Eigen::Matrix4d> project(const KalmanState& s) const;

  /// Squared Mahalanobis distance of a measurement from the predicted one.
  double gating_distance(const KalmanState& s, const Eigen::Vector4d& measurement) const;

  const KalmanParams& params() const { return params_; }

 private:
  KalmanParams params_;
  Eigen::MatrixXd transition_;   // 8x8
  Eigen::MatrixXd observation_;  // 4x8
};

Eigen::Vector4d bbox_to_measurement(const pose::BoundingBox& box);
pose::BoundingBox measurement_to_bbox(const Eigen::Vector4d& z);

}  // namespace pedcross::track
