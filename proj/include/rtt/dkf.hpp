#pragma once

#include "rtt/sensing.hpp"
#include "rtt/target_model.hpp"

#include <optional>
#include <vector>

namespace rtt {

struct Belief {
  Vec x_hat;
  Mat P;
  int robot_id = 0;
};

/// Information-form pair (q, Omega) = (P^-1 x, P^-1) at consensus round `round`.
struct InfoPair {
  Vec q;
  Mat omega;
  int round = 0;
};

struct Estimate {
  Vec x;
  Mat P;
};

inline Estimate predict(const TargetModel& model, const Belief& belief, const Vec& u) {
  Estimate out;
  out.x = propagate_mean(model, belief.x_hat, u);
  out.P = symmetrized(model.transition * belief.P * model.transition.transpose() + model.process_noise);
  return out;
}

inline Estimate innovate(const Estimate& prior, const SensorModel& sensor, const Vec& z) {
  const Mat& H = sensor.output_matrix;
  if (z.size() != sensor.meas_dim()) throw std::invalid_argument("measurement dimension mismatch");
  if (H.cols() != prior.x.size()) throw std::invalid_argument("output matrix does not match state dimension");
  const Mat S = symmetrized(H * prior.P * H.transpose() + sensor.noise_cov);
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(S.rows() - 1);
  if (!(lo > 0.0) || hi / lo > 1e12) throw NumericError("innovation covariance is singular");
  Eigen::LLT<Mat> llt(S);
  const Mat K = llt.solve(H * prior.P).transpose();
  Estimate out;
  out.x = prior.x + K * (z - H * prior.x);
  out.P = symmetrized(prior.P - K * H * prior.P);
  return out;
}

inline InfoPair to_info(const Vec& x, const Mat& P) {
  InfoPair pair;
  pair.omega = spd_inverse(P, "covariance");
  pair.q = pair.omega * x;
  return pair;
}

inline Belief from_info(const InfoPair& pair, int robot_id = 0) {
  Belief b;
  b.robot_id = robot_id;
  b.P = spd_inverse(pair.omega, "information matrix");
  b.x_hat = spd_solve(pair.omega, pair.q, "information matrix");
  return b;
}

inline void check_doubly_stochastic(const Mat& weights, double tol = 1e-8) {
  if (weights.rows() != weights.cols()) throw std::invalid_argument("weight matrix must be square");
  const Vec rows = weights.rowwise().sum();
  const Vec cols = weights.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    if (std::abs(rows(i) - 1.0) > tol || std::abs(cols(i) - 1.0) > tol)
      throw std::invalid_argument("weight matrix is not doubly stochastic");
  }
}

/// One synchronous averaging round. Zero weights drop out, so only the
/// self-loop and graph neighbours contribute.
inline std::vector<InfoPair> consensus_round(const std::vector<InfoPair>& pairs, const Mat& weights) {
  check_doubly_stochastic(weights);
  const auto n = static_cast<Eigen::Index>(pairs.size());
  if (weights.rows() != n) throw std::invalid_argument("weight matrix size does not match team size");
  std::vector<InfoPair> next(pairs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    InfoPair& out = next[i];
    out.q = Vec::Zero(pairs[i].q.size());
    out.omega = Mat::Zero(pairs[i].omega.rows(), pairs[i].omega.cols());
    out.round = pairs[i].round + 1;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = weights(i, j);
      if (a == 0.0) continue;
      out.q += a * pairs[j].q;
      out.omega += a * pairs[j].omega;
    }
    out.omega = symmetrized(out.omega);
  }
  return next;
}

inline std::vector<InfoPair> run_consensus(std::vector<InfoPair> pairs, const Mat& weights, int rounds) {
  if (rounds < 0) throw std::invalid_argument("consensus round count must be non-negative");
  for (int l = 0; l < rounds; ++l) pairs = consensus_round(pairs, weights);
  return pairs;
}

/// Individual update for every robot: a measurement update when one is
/// available, the bare prediction otherwise.
inline std::vector<Estimate> local_updates(const std::vector<Belief>& beliefs,
                                           const std::vector<SensorModel>& sensors,
                                           const std::vector<std::optional<Vec>>& measurements,
                                           const TargetModel& model, const Vec& u) {
  if (beliefs.size() != sensors.size() || beliefs.size() != measurements.size())
    throw std::invalid_argument("beliefs, sensors and measurements must have equal length");
  std::vector<Estimate> out;
  out.reserve(beliefs.size());
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    Estimate prior = predict(model, beliefs[i], u);
    out.push_back(measurements[i] ? innovate(prior, sensors[i], *measurements[i]) : std::move(prior));
  }
  return out;
}

/// Post-innovation information matrices Omega_i(0). These do not depend on
/// the measurement values, only on which robots have one.
inline std::vector<Mat> local_information(const std::vector<Belief>& beliefs,
                                          const std::vector<SensorModel>& sensors,
                                          const std::vector<bool>& has_measurement,
                                          const TargetModel& model) {
  std::vector<Mat> out;
  out.reserve(beliefs.size());
  const Vec u0 = Vec::Zero(model.input_dim());
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    Estimate e = predict(model, beliefs[i], u0);
    if (has_measurement[i]) e = innovate(e, sensors[i], sensors[i].output_matrix * e.x);
    out.push_back(spd_inverse(e.P, "post-innovation covariance"));
  }
  return out;
}

inline std::vector<Belief> dkf_step(const std::vector<Belief>& beliefs, const std::vector<SensorModel>& sensors,
                                    const std::vector<std::optional<Vec>>& measurements, const Mat& weights,
                                    const TargetModel& model, const Vec& u, int rounds) {
  const auto local = local_updates(beliefs, sensors, measurements, model, u);
  std::vector<InfoPair> pairs;
  pairs.reserve(local.size());
  for (const auto& e : local) pairs.push_back(to_info(e.x, e.P));
  pairs = run_consensus(std::move(pairs), weights, rounds);
  std::vector<Belief> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back(from_info(pairs[i], beliefs[i].robot_id));
  return out;
}

}  // namespace rtt
