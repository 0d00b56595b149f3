#include "signcast/pca_svm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace signcast::pca_svm {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PcaSvmError(PcaSvmError::Code::kDimensionMismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

SymmetricEigen symmetric_eigen(const Matrix& input, std::size_t max_sweeps) {
  if (input.rows != input.cols) {
    throw PcaSvmError(PcaSvmError::Code::kDimensionMismatch, "symmetric_eigen: matrix is not square");
  }
  const std::size_t n = input.rows;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = input(i, j);
  }
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double frob = 0.0;
  for (double x : a.values) frob += x * x;

  bool converged = n <= 1;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * frob || off == 0.0) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J = [c s; -s c] acting on (p, q).
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    throw PcaSvmError(PcaSvmError::Code::kNotConverged, "symmetric_eigen: Jacobi sweeps did not converge");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SymmetricEigen result{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t r = 0; r < n; ++r) {
    result.values[r] = a(order[r], order[r]);
    for (std::size_t k = 0; k < n; ++k) result.vectors(r, k) = v(k, order[r]);
  }
  return result;
}

}  // namespace signcast::pca_svm
