#pragma once

#include "apac/rng.hpp"
#include "apac/types.hpp"

namespace apac {

/// Discrete Ornstein-Uhlenbeck process over the 2-D action space:
/// x ← x + θ(μ − x) + σ·g with g standard normal per dimension.
class OuProcess {
 public:
  OuProcess(double theta, double mu, double sigma)
      : theta_(theta), mu_(mu), sigma_(sigma) {
    reset();
  }

  void reset() { state_.setConstant(mu_); }
  void set_state(const Vector2d& s) { state_ = s; }
  const Vector2d& state() const { return state_; }

  Vector2d next(Rng& rng) {
    for (int i = 0; i < 2; ++i)
      state_(i) += theta_ * (mu_ - state_(i)) + sigma_ * rng.normal();
    return state_;
  }

 private:
  double theta_;
  double mu_;
  double sigma_;
  Vector2d state_{Vector2d::Zero()};
};

}  // namespace apac
