#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "semiseg/core.hpp"

namespace semiseg {

struct SvdResult {
  Matrix u;                     // m x n, columns scaled to unit norm (zero for null directions)
  std::vector<double> singular;  // n values, not sorted
  Matrix v;                     // n x n orthogonal
};

/// Thin SVD by one-sided Jacobi rotations on the columns of `a`.
inline SvdResult svd_jacobi(const Matrix& a, int max_sweeps = 60, double tol = 1e-15) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix w = a;
  Matrix v(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += w(i, p) * w(i, p);
          beta += w(i, q) * w(i, q);
          gamma += w(i, p) * w(i, q);
        }
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  SvdResult out{Matrix(m, n, 0.0), std::vector<double>(n, 0.0), std::move(v)};
  for (std::size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm += w(i, j) * w(i, j);
    norm = std::sqrt(norm);
    out.singular[j] = norm;
    if (norm > 0.0)
      for (std::size_t i = 0; i < m; ++i) out.u(i, j) = w(i, j) / norm;
  }
  return out;
}

/// U V^T over singular values above `cutoff`: a subgradient of the nuclear norm.
inline Matrix polar_factor(const Matrix& a, double cutoff = 1e-10) {
  const SvdResult svd = svd_jacobi(a);
  Matrix out(a.rows(), a.cols(), 0.0);
  for (std::size_t k = 0; k < a.cols(); ++k) {
    if (svd.singular[k] <= cutoff) continue;
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += svd.u(i, k) * svd.v(j, k);
  }
  return out;
}

inline double nuclear_norm(const Matrix& a) {
  double total = 0.0;
  for (double s : svd_jacobi(a).singular) total += s;
  return total;
}

}  // namespace semiseg
