#pragma once

#include "rtt/linalg.hpp"

#include <cstdint>

namespace rtt {

/// Linear(ized) state-space model x' = F x + G u + w, w ~ N(0, Q).
struct TargetModel {
  Mat transition;    // F, state_dim x state_dim
  Mat input_matrix;  // G, state_dim x input_dim
  Mat process_noise; // Q, symmetric PSD
  double dt = 0.1;

  Eigen::Index state_dim() const { return transition.rows(); }
  Eigen::Index input_dim() const { return input_matrix.cols(); }

  void validate() const {
    if (transition.rows() != transition.cols())
      throw std::invalid_argument("transition matrix must be square");
    if (input_matrix.rows() != state_dim())
      throw std::invalid_argument("input matrix row count must equal state dimension");
    if (process_noise.rows() != state_dim() || process_noise.cols() != state_dim())
      throw std::invalid_argument("process noise covariance has wrong shape");
    if (!is_psd(process_noise) || !process_noise.isApprox(process_noise.transpose(), 1e-12))
      throw std::invalid_argument("process noise covariance must be symmetric PSD");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  }
};

struct TargetState {
  Vec x;
  std::int64_t epoch = 0;
};

/// Dubins-car target with state [x, y, heading, speed] and input [speed, turn rate].
/// Only the input matrix depends on the heading; re-evaluate it every step.
inline TargetModel dubins_model(double dt, double heading, const Mat& process_noise = Mat::Zero(4, 4)) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  TargetModel m;
  m.dt = dt;
  m.transition = Mat::Identity(4, 4);
  m.transition(3, 3) = 0.0;
  m.input_matrix = Mat::Zero(4, 2);
  m.input_matrix(0, 0) = std::cos(heading) * dt;
  m.input_matrix(1, 0) = std::sin(heading) * dt;
  m.input_matrix(2, 1) = dt;
  m.input_matrix(3, 0) = 1.0;
  m.process_noise = process_noise;
  return m;
}

inline Vec propagate_mean(const TargetModel& model, const Vec& x, const Vec& u) {
  if (x.size() != model.state_dim() || u.size() != model.input_dim())
    throw std::invalid_argument("state/input dimension mismatch");
  return model.transition * x + model.input_matrix * u;
}

template <class Rng>
TargetState step_truth(const TargetModel& model, const TargetState& state, const Vec& u, Rng& rng) {
  TargetState next;
  next.x = propagate_mean(model, state.x, u);
  if (model.process_noise.rows() != model.state_dim())
    throw std::invalid_argument("process noise dimension mismatch");
  next.x += sample_gaussian(model.process_noise, rng);
  next.epoch = state.epoch + 1;
  return next;
}

}  // namespace rtt
