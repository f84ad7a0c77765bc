#include <cmath>
#include <string>

#include "topoguard/errors.hpp"
#include "topoguard/kernels.hpp"

namespace topoguard::kernels::serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
      c(i, j) = sum;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) sum += a(k, i) * b(k, j);
      c(i, j) = sum;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(j, k);
      c(i, j) = sum;
    }
  return c;
}

Normalized normalize(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("normalize: adjacency must be square");
  Normalized out{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    double degree = 1.0;
    for (std::size_t i = 0; i < n; ++i) degree += adjacency(i, j);
    if (!(degree > 0.0))
      throw NumericError("normalize: non-positive degree at node " + std::to_string(j));
    out.inv_sqrt_degree[j] = 1.0 / std::sqrt(degree);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double a_hat = adjacency(i, j) + (i == j ? 1.0 : 0.0);
      out.a_tilde(i, j) = out.inv_sqrt_degree[i] * a_hat * out.inv_sqrt_degree[j];
    }
  return out;
}

Matrix normalize_backward(const Matrix& grad_a_tilde, const Matrix& adjacency,
                          std::span<const double> inv_sqrt_degree) {
  const std::size_t n = adjacency.rows();
  if (!grad_a_tilde.same_shape(adjacency) || inv_sqrt_degree.size() != n)
    throw ShapeError("normalize_backward: shape mismatch");
  const auto& r = inv_sqrt_degree;
  auto a_hat = [&](std::size_t i, std::size_t j) {
    return adjacency(i, j) + (i == j ? 1.0 : 0.0);
  };

  // d f / d degree_l through both occurrences of r_l in every entry.
  std::vector<double> grad_degree(n);
  for (std::size_t l = 0; l < n; ++l) {
    double grad_r = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      grad_r += grad_a_tilde(l, j) * a_hat(l, j) * r[j] + grad_a_tilde(j, l) * a_hat(j, l) * r[j];
    grad_degree[l] = -0.5 * r[l] * r[l] * r[l] * grad_r;
  }

  Matrix grad(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      grad(k, l) = grad_a_tilde(k, l) * r[k] * r[l] + grad_degree[l];
  return grad;
}

std::vector<double> pair_gradient(const Matrix& grad_a_hat, const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (!grad_a_hat.same_shape(adjacency)) throw ShapeError("pair_gradient: shape mismatch");
  std::vector<double> grad;
  grad.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double direction = 1.0 - 2.0 * adjacency(i, j);
      grad.push_back(direction * (grad_a_hat(i, j) + grad_a_hat(j, i)));
    }
  return grad;
}

}  // namespace topoguard::kernels::serial
