#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace topoguard {

// Adam over one flat parameter block; descends along the supplied gradient.
class Adam {
 public:
  explicit Adam(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size), v_(size) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
    }
  }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace topoguard
