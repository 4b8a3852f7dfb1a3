// Dense row-major tensor with reverse-mode differentiation.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace septda {

namespace flops {
// Multiply-accumulate counter, incremented by every gemm call.
std::uint64_t macs();
void reset_macs();
void add_macs(std::uint64_t n);
}  // namespace flops

namespace detail {
void gemm_f32(bool ta, bool tb, int m, int n, int k, const float* a, const float* b,
              float beta, float* c);
void gemm_f64(bool ta, bool tb, int m, int n, int k, const double* a, const double* b,
              double beta, double* c);

inline void gemm(bool ta, bool tb, int m, int n, int k, const float* a, const float* b,
                 float beta, float* c) {
  gemm_f32(ta, tb, m, n, k, a, b, beta, c);
}
inline void gemm(bool ta, bool tb, int m, int n, int k, const double* a, const double* b,
                 double beta, double* c) {
  gemm_f64(ta, tb, m, n, k, a, b, beta, c);
}
}  // namespace detail

inline std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

template <class S>
struct TensorImpl {
  std::vector<int> shape;
  std::vector<S> data;
  bool requires_grad = false;
  std::vector<S> grad;  // empty until first accumulation
  std::vector<std::shared_ptr<TensorImpl<S>>> parents;
  std::function<void()> backprop;  // reads this->grad, accumulates into parents

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
};

template <class S>
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<int> shape, S fill, bool requires_grad = false) {
    impl_ = std::make_shared<TensorImpl<S>>();
    impl_->shape = std::move(shape);
    impl_->data.assign(static_cast<std::size_t>(shape_numel(impl_->shape)), fill);
    impl_->requires_grad = requires_grad;
  }

  Tensor(std::vector<int> shape, std::vector<S> data, bool requires_grad = false) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
      throw std::invalid_argument("tensor: shape does not match data length");
    impl_ = std::make_shared<TensorImpl<S>>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
  }

  static Tensor scalar(S v, bool requires_grad = false) {
    return Tensor({1}, std::vector<S>{v}, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(impl_->data.size()); }

  // shared-pointer semantics: a const Tensor still aliases mutable storage
  std::vector<S>& data() const { return impl_->data; }
  std::vector<S>& grad() const { return impl_->grad; }
  bool has_grad() const { return !impl_->grad.empty(); }

  void backward();

  S value() const {
    if (size() != 1) throw std::logic_error("tensor: value() on non-scalar");
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool b) { impl_->requires_grad = b; }
  void zero_grad() const { impl_->grad.clear(); }

  std::shared_ptr<TensorImpl<S>>& impl() { return impl_; }
  const std::shared_ptr<TensorImpl<S>>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<S>> impl_;
};

// Backpropagates from a scalar output through the recorded graph.
// Gradients accumulate additively across multiple uses of a tensor.
template <class S>
void backward(Tensor<S>& out) {
  if (out.size() != 1) throw std::invalid_argument("backward: output must be a scalar");
  using Node = TensorImpl<S>;
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  // iterative post-order DFS
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(out.impl().get(), 0);
  seen.insert(out.impl().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  out.impl()->ensure_grad();
  out.impl()->grad[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop && !(*it)->grad.empty()) (*it)->backprop();
  }
}

template <class S>
void Tensor<S>::backward() {
  septda::backward(*this);
}

namespace detail {

// Result node whose gradient flows to `parents`; `backprop` captures what it needs.
template <class S>
Tensor<S> make_node(std::vector<int> shape, std::vector<S> data,
                    std::vector<Tensor<S>> parents,
                    std::function<void(TensorImpl<S>&)> backprop) {
  Tensor<S> out(std::move(shape), std::move(data));
  bool any = false;
  for (auto& p : parents)
    if (p.defined() && p.requires_grad()) any = true;
  if (any) {
    out.set_requires_grad(true);
    for (auto& p : parents)
      if (p.defined()) out.impl()->parents.push_back(p.impl());
    auto self = out.impl().get();
    out.impl()->backprop = [self, fn = std::move(backprop)]() { fn(*self); };
  }
  return out;
}

}  // namespace detail

}  // namespace septda
