#pragma once

// Scalar-generic kernels for finite-support categorical distributions.

#include <Eigen/Dense>

#include <cmath>

namespace moebius {

template <typename Derived>
using ColumnOf = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
ColumnOf<Derived> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar peak = logits.maxCoeff();
  const auto shifted = logits.array() - peak;
  const Scalar log_norm = std::log(shifted.exp().sum());
  return (shifted - log_norm).matrix();
}

template <typename Derived>
ColumnOf<Derived> softmax(const Eigen::MatrixBase<Derived>& logits) {
  return log_softmax(logits).array().exp().matrix();
}

// Shannon entropy (nats) from log-probabilities; 0 log 0 contributes 0.
template <typename Derived>
typename Derived::Scalar entropy_from_log(const Eigen::MatrixBase<Derived>& log_p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index k = 0; k < log_p.size(); ++k) {
    const Scalar p = std::exp(log_p(k));
    if (p > Scalar(0)) h -= p * log_p(k);
  }
  return h;
}

// KL(p || q) from log-probabilities over a shared support.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_from_log(const Eigen::MatrixBase<DerivedP>& log_p,
                                      const Eigen::MatrixBase<DerivedQ>& log_q) {
  using Scalar = typename DerivedP::Scalar;
  Scalar kl(0);
  for (Eigen::Index k = 0; k < log_p.size(); ++k) {
    const Scalar p = std::exp(log_p(k));
    if (p > Scalar(0)) kl += p * (log_p(k) - log_q(k));
  }
  return kl < Scalar(0) ? Scalar(0) : kl;
}

// Inverse-CDF draw: smallest k with u < p_0 + ... + p_k.
template <typename Derived>
Eigen::Index sample_index(const Eigen::MatrixBase<Derived>& probabilities, double u) {
  typename Derived::Scalar cumulative(0);
  for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
    cumulative += probabilities(k);
    if (u < cumulative) return k;
  }
  // Rounding can leave the total slightly below 1.
  Eigen::Index last = probabilities.size() - 1;
  while (last > 0 && probabilities(last) <= 0) --last;
  return last;
}

}  // namespace moebius
