#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "signcast/pca_svm/linalg.hpp"

namespace signcast::pca_svm {

struct PcaModel {
  std::vector<double> mean;                 // d
  Matrix components;                        // k x d, orthonormal rows
  std::vector<double> explained_variance;   // k, non-increasing

  std::size_t input_dim() const noexcept { return mean.size(); }
  std::size_t output_dim() const noexcept { return components.rows; }
};

/// Top-k principal axes of the rows of `data` (n x d), sample covariance with
/// n - 1 in the denominator. When d > n the n x n Gram matrix is
/// diagonalized instead of the d x d covariance. Zero-variance directions are
/// completed to an orthonormal set. The largest-magnitude entry of every
/// component is positive (first one on ties).
PcaModel pca_fit(const Matrix& data, std::size_t k);

std::vector<double> pca_transform(const PcaModel& model, std::span<const double> x);
Matrix pca_transform(const PcaModel& model, const Matrix& data);

/// mean + components^T z
std::vector<double> pca_inverse_transform(const PcaModel& model, std::span<const double> z);

/// Mean squared distance between each row and its reconstruction.
double reconstruction_error(const PcaModel& model, const Matrix& data);

}  // namespace signcast::pca_svm
