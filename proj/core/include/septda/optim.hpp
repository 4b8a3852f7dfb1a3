// AdamW with decoupled weight decay, global-norm clipping, plateau scheduler.
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "septda/tensor.hpp"

namespace septda {

template <class S>
struct ParamRef {
  std::string name;
  Tensor<S> tensor;
};

// If the global L2 norm across all gradients exceeds max_norm, every gradient
// is scaled by max_norm / norm. Returns the pre-clip norm.
template <class S>
double clip_global_norm(std::vector<ParamRef<S>>& params, double max_norm) {
  if (max_norm <= 0) throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  double sq = 0;
  for (auto& p : params)
    for (S g : p.tensor.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    S scale = static_cast<S>(max_norm / norm);
    for (auto& p : params)
      for (S& g : p.tensor.grad()) g *= scale;
  }
  return norm;
}

template <class S>
class AdamW {
 public:
  AdamW(std::vector<ParamRef<S>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8, double weight_decay = 1e-2)
      : params_(std::move(params)),
        lr_(lr),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps),
        weight_decay_(weight_decay) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(static_cast<std::size_t>(params_[i].tensor.size()), S(0));
      v_[i].assign(static_cast<std::size_t>(params_[i].tensor.size()), S(0));
    }
  }

  void step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& t = params_[i].tensor;
      if (!t.has_grad())
        throw std::runtime_error("adamw: missing gradient on parameter " + params_[i].name);
      auto& data = t.data();
      const auto& grad = t.grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < data.size(); ++j) {
        double g = static_cast<double>(grad[j]);
        // decoupled weight decay, applied before the moment update
        double p = static_cast<double>(data[j]) * (1.0 - lr_ * weight_decay_);
        double mj = beta1_ * static_cast<double>(m[j]) + (1.0 - beta1_) * g;
        double vj = beta2_ * static_cast<double>(v[j]) + (1.0 - beta2_) * g * g;
        m[j] = static_cast<S>(mj);
        v[j] = static_cast<S>(vj);
        p -= lr_ * (mj / bc1) / (std::sqrt(vj / bc2) + eps_);
        data[j] = static_cast<S>(p);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  std::uint64_t step_count() const { return step_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }
  double weight_decay() const { return weight_decay_; }
  std::vector<ParamRef<S>>& params() { return params_; }
  std::vector<std::vector<S>>& first_moments() { return m_; }
  std::vector<std::vector<S>>& second_moments() { return v_; }
  void set_step_count(std::uint64_t s) { step_ = s; }

 private:
  std::vector<ParamRef<S>> params_;
  std::vector<std::vector<S>> m_, v_;
  std::uint64_t step_ = 0;
  double lr_, beta1_, beta2_, eps_, weight_decay_;
};

// Halves the learning rate after `patience` successive epochs without a
// strict improvement of the validation loss.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, int patience = 5, double factor = 0.5)
      : lr_(initial_lr), patience_(patience), factor_(factor) {}

  // Call once per epoch. Returns true when the learning rate was reduced.
  bool step(double validation_loss) {
    if (validation_loss < best_) {
      best_ = validation_loss;
      since_ = 0;
      return false;
    }
    if (++since_ >= patience_) {
      lr_ *= factor_;
      since_ = 0;
      return true;
    }
    return false;
  }

  double lr() const { return lr_; }
  double best_loss() const { return best_; }
  int epochs_since_improvement() const { return since_; }

 private:
  double lr_;
  int patience_;
  double factor_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_ = 0;
};

}  // namespace septda
