#pragma once

#include "rtt/linalg.hpp"

#include <limits>
#include <vector>

namespace rtt {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vec x;
  double value = 0.0;
  int pivots = 0;
};

/// Dense two-phase tableau simplex for
///   maximize c^T x  subject to  A x <= b,  x >= 0.
/// The problems it serves have a few dozen variables and are frequently
/// degenerate, so pivoting favours well-conditioned elements and falls back
/// to Bland's rule if it stalls.
inline LpResult solve_lp(const Vec& c, const Mat& A, const Vec& b, double tol = 1e-10) {
  const Eigen::Index m = A.rows();
  const Eigen::Index nv = A.cols();
  if (c.size() != nv || b.size() != m) throw std::invalid_argument("LP dimension mismatch");

  // Columns: [x (nv) | slack (m) | artificial (m)] then rhs.
  const Eigen::Index n_art = m;
  const Eigen::Index cols = nv + m + n_art;
  Mat T = Mat::Zero(m, cols + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::vector<char> needs_art(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    T.block(i, 0, 1, nv) = sign * A.row(i);
    T(i, nv + i) = sign;
    T(i, cols) = sign * b(i);
    if (sign < 0.0) {
      T(i, nv + m + i) = 1.0;
      basis[static_cast<std::size_t>(i)] = nv + m + i;
      needs_art[static_cast<std::size_t>(i)] = 1;
    } else {
      basis[static_cast<std::size_t>(i)] = nv + i;
    }
  }

  constexpr double kPivotTol = 1e-9;
  constexpr double kGoodPivot = 1e-6;
  constexpr double kFeasTol = 1e-9;
  constexpr int kBlandAfter = 20000;  // fall back to pure Bland ordering if stalling
  LpResult result;
  auto pivot = [&](Eigen::Index row, Eigen::Index col) {
    T.row(row) /= T(row, col);
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r != row && T(r, col) != 0.0) {
        T.row(r) -= T(r, col) * T.row(row);
        // The ratio test tolerates levels a hair below zero; reset them.
        if (T(r, cols) < 0.0 && T(r, cols) > -2.0 * kFeasTol) T(r, cols) = 0.0;
      }
    }
    basis[static_cast<std::size_t>(row)] = col;
    ++result.pivots;
  };

  // Two-pass (Harris) ratio test: the step bound allows each basic variable
  // to go kFeasTol below zero, and within that bound the largest pivot
  // element wins. This keeps degenerate stretches from pivoting on near-zero
  // entries. In Bland mode the lowest basic index wins instead.
  auto ratio_test = [&](Eigen::Index enter, bool bland) -> Eigen::Index {
    double bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i)
      if (T(i, enter) > kPivotTol) bound = std::min(bound, (std::max(T(i, cols), 0.0) + kFeasTol) / T(i, enter));
    Eigen::Index leave = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) <= kPivotTol || T(i, cols) / T(i, enter) > bound) continue;
      if (leave < 0) {
        leave = i;
      } else if (bland) {
        if (basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) leave = i;
      } else if (T(i, enter) > T(leave, enter)) {
        leave = i;
      }
    }
    return leave;
  };

  // Runs simplex iterations maximizing obj over the allowed columns. Entering
  // columns follow Bland's order, skipping any whose pivot would be tiny while
  // a better conditioned column is available.
  auto optimize = [&](const Vec& obj, Eigen::Index allowed_cols) -> LpStatus {
    for (int guard = 0; guard < 100000; ++guard) {
      const bool bland = guard >= kBlandAfter;
      Vec cb(m);
      for (Eigen::Index i = 0; i < m; ++i) cb(i) = obj(basis[static_cast<std::size_t>(i)]);
      Eigen::Index enter = -1, leave = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        const double reduced = obj(j) - cb.dot(T.col(j).head(m));
        if (reduced <= tol) continue;
        const Eigen::Index r = ratio_test(j, bland);
        if (r < 0) return LpStatus::unbounded;
        if (enter < 0) {
          enter = j;
          leave = r;
        }
        if (bland || T(r, j) >= kGoodPivot) {
          enter = j;
          leave = r;
          break;
        }
      }
      if (enter < 0) return LpStatus::optimal;
      pivot(leave, enter);
    }
    throw NumericError("simplex iteration limit reached");
  };

  bool any_art = false;
  for (char f : needs_art) any_art = any_art || f;
  if (any_art) {
    Vec phase1 = Vec::Zero(cols);
    for (Eigen::Index i = 0; i < m; ++i)
      if (needs_art[static_cast<std::size_t>(i)]) phase1(nv + m + i) = -1.0;
    optimize(phase1, cols);
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (basis[static_cast<std::size_t>(i)] >= nv + m) infeas += T(i, cols);
    if (infeas > 1e-9) return result;
    // Drive remaining (zero-level) artificials out of the basis.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (basis[static_cast<std::size_t>(i)] < nv + m) continue;
      for (Eigen::Index j = 0; j < nv + m; ++j) {
        if (std::abs(T(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  Vec phase2 = Vec::Zero(cols);
  phase2.head(nv) = c;
  const LpStatus st = optimize(phase2, nv + m);
  result.status = st;
  if (st != LpStatus::optimal) return result;
  // Recompute the vertex from the final basis against the original data,
  // discarding the round-off accumulated over the pivots.
  Mat B = Mat::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bj = basis[static_cast<std::size_t>(i)];
    if (bj < nv)
      B.col(i) = A.col(bj);
    else if (bj < nv + m)
      B(bj - nv, i) = 1.0;
    else
      B(bj - nv - m, i) = 1.0;  // zero-level artificial on a redundant row
  }
  const Vec level = B.colPivHouseholderQr().solve(b);
  result.x = Vec::Zero(nv);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bj = basis[static_cast<std::size_t>(i)];
    if (bj < nv) result.x(bj) = std::max(0.0, level(i));
  }
  result.value = c.dot(result.x);
  return result;
}

}  // namespace rtt
