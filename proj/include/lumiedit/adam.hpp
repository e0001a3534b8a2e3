#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lumiedit/error.hpp"

namespace lumiedit {

struct OptimConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iters = 2000;
  double plateau_tol = 1e-5;  // relative improvement of the best loss
  int plateau_window = 100;
  int divergence_window = 50;  // consecutive increases that count as divergence
  bool frozen_sampling = true;  // one seed for every iteration
  int spp = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lr > 0.0)) throw Error(ErrorKind::kOutOfRange, "lr", "learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(ErrorKind::kOutOfRange, "beta1", "must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error(ErrorKind::kOutOfRange, "beta2", "must lie in [0, 1)");
    if (max_iters < 0) throw Error(ErrorKind::kOutOfRange, "max_iters", "must be >= 0");
  }

  // Seed used by iteration `it`.
  std::uint64_t iteration_seed(int it) const {
    return frozen_sampling ? seed : seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(it + 1);
  }
};

class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(n, lr), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

  explicit Adam(std::size_t n, const OptimConfig& c) : Adam(n, c.lr, c.beta1, c.beta2, c.epsilon) {}

  // Per-coordinate learning rates.
  void set_lr(std::size_t i, double lr) { lr_[i] = lr; }
  double lr(std::size_t i) const { return lr_[i]; }

  void step(std::vector<double>& x, const std::vector<double>& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
      x[i] -= lr_[i] * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

  int iterations() const { return t_; }

 private:
  std::vector<double> lr_;
  double beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

// Tracks the best loss and the stopping rules shared by fitting and refinement.
class ProgressMonitor {
 public:
  explicit ProgressMonitor(const OptimConfig& c) : cfg_(c) {}

  // Returns true when `loss` is a new best.
  bool record(double loss) {
    if (!std::isfinite(loss)) throw Error(ErrorKind::kDivergence, "loss", "loss became non-finite");
    rising_ = (has_last_ && loss > last_) ? rising_ + 1 : 0;
    last_ = loss;
    has_last_ = true;
    if (rising_ >= cfg_.divergence_window) {
      throw Error(ErrorKind::kDivergence, "loss", "loss increased for " + std::to_string(rising_) + " iterations");
    }
    ++count_;
    if (count_ == 1 || loss < best_) {
      if (count_ == 1 || loss < best_ * (1.0 - cfg_.plateau_tol)) since_gain_ = 0;
      else ++since_gain_;
      best_ = loss;
      return true;
    }
    ++since_gain_;
    return false;
  }

  bool plateaued() const { return since_gain_ >= cfg_.plateau_window; }
  double best() const { return best_; }

 private:
  OptimConfig cfg_;
  double best_ = 0.0, last_ = 0.0;
  bool has_last_ = false;
  int rising_ = 0, since_gain_ = 0, count_ = 0;
};

}  // namespace lumiedit
