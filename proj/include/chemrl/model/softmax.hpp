// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>

namespace chemrl::model {

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

inline Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& z) {
  return z.array() - log_sum_exp(z);
}

inline Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& z) {
  return log_softmax(z).array().exp();
}

// Entropy of softmax(z) in nats.
inline double entropy(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::VectorXd lp = log_softmax(z);
  return -(lp.array().exp() * lp.array()).sum();
}

}  // namespace chemrl::model
