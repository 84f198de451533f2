#include "pedcross/kalman.hpp"

#include <cmath>

namespace pedcross::track {

std::pair<Eigen::VectorXd, Eigen::MatrixXd> kalman_update_generic(
    const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Eigen::VectorXd& z,
    const Eigen::MatrixXd& H, const Eigen::MatrixXd& R) {
  if (!z.allFinite()) throw InputError("kalman update: non-finite measurement");
  const Eigen::VectorXd z_hat = H * mean;
  const Eigen::MatrixXd S = H * cov * H.transpose() + R;
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("kalman update: innovation covariance not positive-definite");
  const Eigen::MatrixXd K = llt.solve(H * cov).transpose();

  Eigen::VectorXd mean_post = mean + K * (z - z_hat);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(mean.size(), mean.size());
  const Eigen::MatrixXd A = I - K * H;
  Eigen::MatrixXd cov_post = A * cov * A.transpose() + K * R * K.transpose();
  cov_post = 0.5 * (cov_post + cov_post.transpose().eval());
  return {std::move(mean_post), std::move(cov_post)};
}

BoxMotionModel::BoxMotionModel(const KalmanParams& params) : params_(params) {
  transition_ = Eigen::MatrixXd::Identity(kStateDim, kStateDim);
  for (int i = 0; i < kMeasDim; ++i) transition_(i, kMeasDim + i) = 1.0;
  observation_ = Eigen::MatrixXd::Zero(kMeasDim, kStateDim);
  observation_.leftCols(kMeasDim).setIdentity();
}

KalmanState BoxMotionModel::initiate(const Eigen::Vector4d& measurement) const {
  if (!measurement.allFinite()) throw InputError("kalman initiate: non-finite measurement");
  KalmanState s;
  s.mean = Eigen::VectorXd::Zero(kStateDim);
  s.mean.head<4>() = measurement;

  const double h = std::abs(measurement(3));
  Eigen::VectorXd std(kStateDim);
  std << 2.0 * params_.pos_std_weight * h, 2.0 * params_.pos_std_weight * h,
      10.0 * params_.aspect_process_std, 2.0 * params_.pos_std_weight * h,
      10.0 * params_.vel_std_weight * h, 10.0 * params_.vel_std_weight * h,
      10.0 * params_.aspect_vel_std, 10.0 * params_.vel_std_weight * h;
  s.covariance = std.array().square().matrix().asDiagonal();
  return s;
}

KalmanState BoxMotionModel::predict(const KalmanState& s) const {
  const double h = std::abs(s.mean(3));
  Eigen::VectorXd std(kStateDim);
  std << params_.pos_std_weight * h, params_.pos_std_weight * h, params_.aspect_process_std,
      params_.pos_std_weight * h, params_.vel_std_weight * h, params_.vel_std_weight * h,
      params_.aspect_vel_std, params_.vel_std_weight * h;
  const Eigen::MatrixXd Q = std.array().square().matrix().asDiagonal();

  KalmanState out;
  out.mean = transition_ * s.mean;
  out.covariance = transition_ * s.covariance * transition_.transpose() + Q;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose().eval());
  return out;
}

std::pair<Eigen::Vector4d, Eigen::Matrix4d> BoxMotionModel::project(const KalmanState& s) const {
  const double h = std::abs(s.mean(3));
  Eigen::Vector4d std;
  std << params_.meas_std_weight * h, params_.meas_std_weight * h, params_.aspect_meas_std,
      params_.meas_std_weight * h;
  const Eigen::Matrix4d R = std.array().square().matrix().asDiagonal();
  Eigen::Vector4d z_hat = observation_ * s.mean;
  Eigen::Matrix4d S = observation_ * s.covariance * observation_.transpose() + R;
  return {z_hat, S};
}

KalmanState BoxMotionModel::update(const KalmanState& s, const Eigen::Vector4d& measurement) const {
  const double h = std::abs(s.mean(3));
  Eigen::Vector4d std;
  std << params_.meas_std_weight * h, params_.meas_std_weight * h, params_.aspect_meas_std,
      params_.meas_std_weight * h;
  const Eigen::Matrix4d R = std.array().square().matrix().asDiagonal();

  auto [mean_post, cov_post] =
      kalman_update_generic(s.mean, s.covariance, measurement, observation_, R);
  return {std::move(mean_post), std::move(cov_post)};
}

double BoxMotionModel::gating_distance(const KalmanState& s,
                                       const Eigen::Vector4d& measurement) const {
  auto [z_hat, S] = project(s);
  Eigen::LLT<Eigen::Matrix4d> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("gating_distance: degenerate innovation covariance");
  const Eigen::Vector4d r = measurement - z_hat;
  return llt.matrixL().solve(r).squaredNorm();
}

Eigen::Vector4d bbox_to_measurement(const pose::BoundingBox& box) {
  return {box.cx(), box.cy(), box.aspect(), box.height};
}

pose::BoundingBox measurement_to_bbox(const Eigen::Vector4d& z) {
  pose::BoundingBox box;
  box.height = z(3);
  box.width = z(2) * z(3);
  box.x = z(0) - 0.5 * box.width;
  box.y = z(1) - 0.5 * box.height;
  return box;
}

}  // namespace pedcross::track
