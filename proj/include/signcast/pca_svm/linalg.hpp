#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace signcast::pca_svm {

class PcaSvmError : public std::runtime_error {
 public:
  enum class Code {
    kInvalidArgument,
    kEmpty,
    kTooManyComponents,
    kDimensionMismatch,
    kSingleClass,
    kNotConverged,
  };

  PcaSvmError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
/// `vectors` holds one unit eigenvector per row, matching `values`.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};

/// Cyclic Jacobi rotations. Only the upper triangle is read.
SymmetricEigen symmetric_eigen(const Matrix& a, std::size_t max_sweeps = 100);

}  // namespace signcast::pca_svm
