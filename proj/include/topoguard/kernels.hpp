#pragma once

// Dense kernels behind the GCN forward/backward passes.
//
// Every kernel exists twice: `serial` holds the straightforward loop nest used
// as the testing reference, `parallel` holds the OpenMP version used by the
// library. Parallel kernels split work by output row only, so each output
// entry is accumulated in a fixed order and results do not depend on the
// thread count.

#include <span>
#include <vector>

#include "topoguard/matrix.hpp"

namespace topoguard::kernels {

// Symmetric GCN normalization D^{-1/2} (A + I) D^{-1/2} with D the column sums
// of A + I. `inv_sqrt_degree` holds D^{-1/2} for reuse in the backward pass.
//
// `normalize_backward` maps d f / d A~ to d f / d (A' + I), where `adjacency`
// is the perturbed A'. `pair_gradient` then folds that onto the upper-triangle
// perturbation vector through A' = A + C o S, where `adjacency` is the clean A
// and C_ij = 1 - 2 A_ij.
struct Normalized {
  Matrix a_tilde;
  std::vector<double> inv_sqrt_degree;
};

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Normalized normalize(const Matrix& adjacency);
Matrix normalize_backward(const Matrix& grad_a_tilde, const Matrix& adjacency,
                          std::span<const double> inv_sqrt_degree);
std::vector<double> pair_gradient(const Matrix& grad_a_hat, const Matrix& adjacency);

}  // namespace serial

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Normalized normalize(const Matrix& adjacency);
Matrix normalize_backward(const Matrix& grad_a_tilde, const Matrix& adjacency,
                          std::span<const double> inv_sqrt_degree);
std::vector<double> pair_gradient(const Matrix& grad_a_hat, const Matrix& adjacency);

}  // namespace parallel

using parallel::matmul;
using parallel::matmul_nt;
using parallel::matmul_tn;
using parallel::normalize;
using parallel::normalize_backward;
using parallel::pair_gradient;

}  // namespace topoguard::kernels
