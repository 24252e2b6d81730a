#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace rtt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline bool is_pd(const Mat& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  Eigen::LLT<Mat> llt(symmetrized(m));
  return llt.info() == Eigen::Success;
}

inline bool is_psd(const Mat& m, double tol = 1e-10) {
  return m.rows() == m.cols() && m.allFinite() && min_eigenvalue(m) >= -tol;
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
inline Mat spd_inverse(const Mat& m, const char* what = "matrix") {
  Eigen::LLT<Mat> llt(symmetrized(m));
  if (llt.info() != Eigen::Success)
    throw NumericError(std::string(what) + " is not positive definite");
  return symmetrized(llt.solve(Mat::Identity(m.rows(), m.cols())));
}

inline Vec spd_solve(const Mat& m, const Vec& b, const char* what = "matrix") {
  Eigen::LLT<Mat> llt(symmetrized(m));
  if (llt.info() != Eigen::Success)
    throw NumericError(std::string(what) + " is not positive definite");
  return llt.solve(b);
}

/// Draws x ~ N(0, cov). cov may be singular (only PSD is required).
template <class Rng>
Vec sample_gaussian(const Mat& cov, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(cov.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  if (cov.isZero(0.0)) return Vec::Zero(cov.rows());
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(cov));
  Vec sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sd.asDiagonal() * z;
}

}  // namespace rtt
