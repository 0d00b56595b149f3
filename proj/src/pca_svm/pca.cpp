#include "signcast/pca_svm/pca.hpp"

#include <algorithm>
#include <cmath>

namespace signcast::pca_svm {

namespace {

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

/// Removes the projections onto rows [0, count) of `basis` from `v`.
void orthogonalize(std::span<double> v, const Matrix& basis, std::size_t count) {
  for (std::size_t r = 0; r < count; ++r) {
    const auto b = basis.row(r);
    const double proj = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * b[i];
  }
}

void check_dim(const PcaModel& model, std::size_t n, const char* what) {
  if (n != model.input_dim()) {
    throw PcaSvmError(PcaSvmError::Code::kDimensionMismatch, std::string(what) + ": expected " +
                                                                   std::to_string(model.input_dim()) +
                                                                   " values, got " + std::to_string(n));
  }
}

}  // namespace

PcaModel pca_fit(const Matrix& data, std::size_t k) {
  const std::size_t n = data.rows, d = data.cols;
  if (n < 2 || d == 0) throw PcaSvmError(PcaSvmError::Code::kEmpty, "pca_fit: need at least 2 rows");
  if (k == 0 || k > std::min(n - 1, d)) {
    throw PcaSvmError(PcaSvmError::Code::kTooManyComponents,
                      "pca_fit: k=" + std::to_string(k) + " outside 1.." + std::to_string(std::min(n - 1, d)));
  }

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += data(r, c);
  for (double& m : model.mean) m /= static_cast<double>(n);
  Matrix x(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) x(r, c) = data(r, c) - model.mean[c];

  const double denom = static_cast<double>(n - 1);
  model.components = Matrix(k, d);
  model.explained_variance.assign(k, 0.0);
  std::size_t found = 0;

  if (d <= n) {
    Matrix cov(d, d);
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = x.row(r);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) cov(i, j) += row[i] * row[j];
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov(i, j) = cov(j, i) = cov(i, j) / denom;
    const SymmetricEigen eig = symmetric_eigen(cov);
    for (; found < k; ++found) {
      std::copy_n(eig.vectors.row(found).begin(), d, model.components.row(found).begin());
      model.explained_variance[found] = std::max(0.0, eig.values[found]);
    }
  } else {
    // Gram trick: if G u = lambda u with G = X X^T / (n-1), then X^T u is an
    // eigenvector of the covariance with the same eigenvalue.
    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) gram(i, j) = gram(j, i) = dot(x.row(i), x.row(j)) / denom;
    const SymmetricEigen eig = symmetric_eigen(gram);
    const double top = std::max(eig.values.front(), 0.0);
    const double floor = top * 1e-12 * static_cast<double>(n);
    for (; found < k && eig.values[found] > floor && eig.values[found] > 0.0; ++found) {
      auto comp = model.components.row(found);
      const auto u = eig.vectors.row(found);
      for (std::size_t r = 0; r < n; ++r) {
        const auto row = x.row(r);
        for (std::size_t c = 0; c < d; ++c) comp[c] += u[r] * row[c];
      }
      // Twice is enough to restore orthogonality to machine precision.
      for (int pass = 0; pass < 2; ++pass) {
        orthogonalize(comp, model.components, found);
        const double len = norm(comp);
        for (double& c : comp) c /= len;
      }
      model.explained_variance[found] = eig.values[found];
    }
  }

  // Complete directions without variance with coordinate axes.
  for (std::size_t axis = 0; found < k && axis < d; ++axis) {
    auto comp = model.components.row(found);
    std::fill(comp.begin(), comp.end(), 0.0);
    comp[axis] = 1.0;
    orthogonalize(comp, model.components, found);
    if (norm(comp) < 0.5) continue;
    orthogonalize(comp, model.components, found);
    const double len = norm(comp);
    for (double& c : comp) c /= len;
    model.explained_variance[found] = 0.0;
    ++found;
  }

  for (std::size_t r = 0; r < k; ++r) {
    auto comp = model.components.row(r);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < d; ++c)
      if (std::abs(comp[c]) > std::abs(comp[arg])) arg = c;
    if (comp[arg] < 0)
      for (double& c : comp) c = -c;
  }
  return model;
}

std::vector<double> pca_transform(const PcaModel& model, std::span<const double> x) {
  check_dim(model, x.size(), "pca_transform");
  std::vector<double> centered(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - model.mean[i];
  std::vector<double> z(model.output_dim());
  for (std::size_t r = 0; r < z.size(); ++r) z[r] = dot(model.components.row(r), centered);
  return z;
}

Matrix pca_transform(const PcaModel& model, const Matrix& data) {
  check_dim(model, data.cols, "pca_transform");
  Matrix out(data.rows, model.output_dim());
  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto z = pca_transform(model, data.row(r));
    std::copy(z.begin(), z.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> pca_inverse_transform(const PcaModel& model, std::span<const double> z) {
  if (z.size() != model.output_dim()) {
    throw PcaSvmError(PcaSvmError::Code::kDimensionMismatch, "pca_inverse_transform: wrong component count");
  }
  std::vector<double> x = model.mean;
  for (std::size_t r = 0; r < z.size(); ++r) {
    const auto comp = model.components.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] += z[r] * comp[c];
  }
  return x;
}

double reconstruction_error(const PcaModel& model, const Matrix& data) {
  check_dim(model, data.cols, "reconstruction_error");
  if (data.rows == 0) throw PcaSvmError(PcaSvmError::Code::kEmpty, "reconstruction_error: no rows");
  double total = 0.0;
  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto back = pca_inverse_transform(model, pca_transform(model, data.row(r)));
    const auto row = data.row(r);
    for (std::size_t c = 0; c < data.cols; ++c) total += (row[c] - back[c]) * (row[c] - back[c]);
  }
  return total / static_cast<double>(data.rows);
}

}  // namespace signcast::pca_svm
