#include <cmath>
#include <cstdint>
#include <string>

#include "topoguard/errors.hpp"
#include "topoguard/kernels.hpp"

namespace topoguard::kernels::parallel {

namespace {

// OpenMP wants signed loop indices.
using Index = std::int64_t;

Index as_index(std::size_t v) { return static_cast<Index>(v); }

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  const Index m = as_index(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  Matrix c(a.rows(), n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    double* out = c.data() + i * n;
    const double* lhs = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double scale = lhs[k];
      if (scale == 0.0) continue;
      const double* rhs = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += scale * rhs[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  const Index m = as_index(a.cols());
  const std::size_t inner = a.rows();
  const std::size_t lhs_cols = a.cols();
  const std::size_t n = b.cols();
  Matrix c(a.cols(), n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    double* out = c.data() + i * n;
    for (std::size_t k = 0; k < inner; ++k) {
      const double scale = a.data()[k * lhs_cols + i];
      if (scale == 0.0) continue;
      const double* rhs = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += scale * rhs[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  const Index m = as_index(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t n = b.rows();
  Matrix c(a.rows(), n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    const double* lhs = a.data() + i * inner;
    double* out = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* rhs = b.data() + j * inner;
      double sum = 0.0;
      for (std::size_t k = 0; k < inner; ++k) sum += lhs[k] * rhs[k];
      out[j] = sum;
    }
  }
  return c;
}

Normalized normalize(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("normalize: adjacency must be square");
  const Index count = as_index(n);
  Normalized out{Matrix(n, n), std::vector<double>(n)};
  std::vector<double> degree(n, 1.0);
  // Column sums, accumulated row by row so each entry keeps a fixed order.
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = adjacency.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) degree[j] += src[j];
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(degree[j] > 0.0))
      throw NumericError("normalize: non-positive degree at node " + std::to_string(j));
    out.inv_sqrt_degree[j] = 1.0 / std::sqrt(degree[j]);
  }
  const double* r = out.inv_sqrt_degree.data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < count; ++i) {
    const double* src = adjacency.data() + i * n;
    double* dst = out.a_tilde.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) dst[j] = r[i] * src[j] * r[j];
    dst[i] = r[i] * (src[i] + 1.0) * r[i];
  }
  return out;
}

Matrix normalize_backward(const Matrix& grad_a_tilde, const Matrix& adjacency,
                          std::span<const double> inv_sqrt_degree) {
  const std::size_t n = adjacency.rows();
  if (!grad_a_tilde.same_shape(adjacency) || inv_sqrt_degree.size() != n)
    throw ShapeError("normalize_backward: shape mismatch");
  const Index count = as_index(n);
  const double* r = inv_sqrt_degree.data();
  const double* g = grad_a_tilde.data();
  const double* adj = adjacency.data();

  std::vector<double> grad_degree(n);
#pragma omp parallel for schedule(static)
  for (Index l = 0; l < count; ++l) {
    double grad_r = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a_lj = adj[l * n + j] + (Index(j) == l ? 1.0 : 0.0);
      const double a_jl = adj[j * n + l] + (Index(j) == l ? 1.0 : 0.0);
      grad_r += g[l * n + j] * a_lj * r[j] + g[j * n + l] * a_jl * r[j];
    }
    grad_degree[l] = -0.5 * r[l] * r[l] * r[l] * grad_r;
  }

  Matrix grad(n, n);
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < count; ++k) {
    double* dst = grad.data() + k * n;
    for (std::size_t l = 0; l < n; ++l) dst[l] = g[k * n + l] * r[k] * r[l] + grad_degree[l];
  }
  return grad;
}

std::vector<double> pair_gradient(const Matrix& grad_a_hat, const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (!grad_a_hat.same_shape(adjacency)) throw ShapeError("pair_gradient: shape mismatch");
  const Index count = as_index(n);
  std::vector<double> grad(n * (n - (n > 0 ? 1 : 0)) / 2);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < count; ++i) {
    // Offset of pair (i, i+1) in upper-triangle row-major order.
    std::size_t k = static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i * (i + 1) / 2);
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j, ++k) {
      const double direction = 1.0 - 2.0 * adjacency(i, j);
      grad[k] = direction * (grad_a_hat(i, j) + grad_a_hat(j, i));
    }
  }
  return grad;
}

}  // namespace topoguard::kernels::parallel
