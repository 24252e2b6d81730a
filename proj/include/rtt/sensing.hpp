#pragma once

#include "rtt/linalg.hpp"

#include <optional>

namespace rtt {

struct SensorModel {
  int robot_id = 0;
  Mat output_matrix;  // H, meas_dim x state_dim
  Mat noise_cov;      // R, meas_dim x meas_dim, SPD
  double sensing_radius = 20.0;

  Eigen::Index meas_dim() const { return output_matrix.rows(); }
  double quality() const { return noise_cov.trace(); }

  void validate() const {
    if (noise_cov.rows() != meas_dim() || noise_cov.cols() != meas_dim())
      throw std::invalid_argument("noise covariance shape does not match output matrix");
    if (!is_pd(noise_cov)) throw std::invalid_argument("noise covariance must be positive definite");
    if (!(sensing_radius > 0.0)) throw std::invalid_argument("sensing radius must be positive");
  }
};

struct DeteriorationEvent {
  std::int64_t epoch = 1;
  int robot_id = 0;
  Mat perturbation;
};

inline bool in_sensing_range(const SensorModel& sensor, const Vec3& robot_pos, const Vec3& target_pos) {
  return (robot_pos - target_pos).norm() <= sensor.sensing_radius;
}

/// z = H x + v when the target lies inside the sensing disc, nothing otherwise.
/// The noise draw is consumed either way so that random streams stay aligned
/// across runs that differ only in geometry.
template <class Rng>
std::optional<Vec> measure(const SensorModel& sensor, const Vec& x_true, const Vec3& robot_pos,
                           const Vec3& target_pos, Rng& rng) {
  Vec noise = sample_gaussian(sensor.noise_cov, rng);
  if (!in_sensing_range(sensor, robot_pos, target_pos)) return std::nullopt;
  return Vec(sensor.output_matrix * x_true + noise);
}

inline SensorModel apply_deterioration(const SensorModel& sensor, const DeteriorationEvent& event) {
  if (event.robot_id != sensor.robot_id)
    throw std::invalid_argument("deterioration event targets a different robot");
  const Mat& d = event.perturbation;
  if (d.rows() != sensor.meas_dim() || d.cols() != sensor.meas_dim())
    throw std::invalid_argument("perturbation shape mismatch");
  if (!is_psd(d) || !d.isApprox(d.transpose(), 1e-12))
    throw std::invalid_argument("perturbation must be symmetric PSD");
  if (!(d.trace() > 0.0))
    throw std::invalid_argument("perturbation must strictly increase Tr(R)");
  SensorModel out = sensor;
  out.noise_cov = symmetrized(sensor.noise_cov + d);
  return out;
}

/// B B^T with B having i.i.d. N(0, scale^2) entries.
template <class Rng>
Mat random_psd(int dim, double scale, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("dimension must be at least 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat b(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) b(i, j) = scale * normal(rng);
  return symmetrized(b * b.transpose());
}

}  // namespace rtt
