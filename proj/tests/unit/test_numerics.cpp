#include <cmath>

#include "doctest.h"
#include "septda/nn.hpp"
#include "septda/ops.hpp"
#include "septda/optim.hpp"

using namespace septda;

namespace {

Tensor<double> randu(Rng& rng, std::vector<int> shape, bool grad = true) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : d) v = rng.uniform(-1.0, 1.0);
  return Tensor<double>(std::move(shape), std::move(d), grad);
}

}  // namespace

TEST_CASE("tensor construction and accessors") {
  Tensor<double> t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.dim(1) == 3);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(t.value(), std::logic_error);
  CHECK(Tensor<double>::scalar(4.0).value() == 4.0);
}

TEST_CASE("elementwise forward values") {
  Tensor<double> a({3}, {1.0, -2.0, 3.0});
  Tensor<double> b({3}, {4.0, 5.0, -6.0});
  auto s = add(a, b);
  CHECK(s.data() == std::vector<double>{5.0, 3.0, -3.0});
  auto m = mul(a, b);
  CHECK(m.data() == std::vector<double>{4.0, -10.0, -18.0});
  CHECK(sub(a, b).data() == std::vector<double>{-3.0, -7.0, 9.0});
  CHECK(div(a, b).data()[0] == doctest::Approx(0.25));
  CHECK(mul_scalar(a, 2.0).data() == std::vector<double>{2.0, -4.0, 6.0});
}

TEST_CASE("broadcasting matches manual expansion") {
  // (2,3) + (3): row-wise
  Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor<double> r({3}, {10, 20, 30});
  CHECK(add(x, r).data() == std::vector<double>{11, 22, 33, 14, 25, 36});
  // (2,3) * (2,1): column-wise
  Tensor<double> c({2, 1}, {2, 3});
  CHECK(mul(x, c).data() == std::vector<double>{2, 4, 6, 12, 15, 18});
  // scalar broadcast
  CHECK(add(x, Tensor<double>::scalar(1.0)).data() == std::vector<double>{2, 3, 4, 5, 6, 7});
  // incompatible
  Tensor<double> bad({4}, 0.0);
  CHECK_THROWS_AS(add(x, bad), std::invalid_argument);
}

TEST_CASE("broadcast gradients reduce over expanded axes") {
  Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Tensor<double> r({3}, {1, 1, 1}, true);
  auto loss = sum_all(mul(x, r));
  loss.backward();
  // d/dr_j = sum_i x[i][j]
  CHECK(r.grad() == std::vector<double>{5, 7, 9});
  CHECK(x.grad() == std::vector<double>{1, 1, 1, 1, 1, 1});
}

TEST_CASE("matmul equals a naive triple loop") {
  Rng rng(3);
  auto a = randu(rng, {4, 5});
  auto b = randu(rng, {5, 3});
  auto c = matmul(a, b);
  REQUIRE(c.shape() == std::vector<int>{4, 3});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 5; ++k) acc += a.data()[i * 5 + k] * b.data()[k * 3 + j];
      CHECK(c.data()[i * 3 + j] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("matmul with shared and batched right operand") {
  Rng rng(4);
  auto a = randu(rng, {2, 3, 4});
  auto b2 = randu(rng, {4, 5});
  auto c = matmul(a, b2);
  REQUIRE(c.shape() == std::vector<int>{2, 3, 5});
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 5; ++j) {
        double acc = 0;
        for (int k = 0; k < 4; ++k) acc += a.data()[(n * 3 + i) * 4 + k] * b2.data()[k * 5 + j];
        CHECK(c.data()[(n * 3 + i) * 5 + j] == doctest::Approx(acc).epsilon(1e-12));
      }
  auto b3 = randu(rng, {2, 4, 5});
  auto cb = matmul(a, b3);
  REQUIRE(cb.shape() == std::vector<int>{2, 3, 5});
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 5; ++j) {
        double acc = 0;
        for (int k = 0; k < 4; ++k)
          acc += a.data()[(n * 3 + i) * 4 + k] * b3.data()[(n * 4 + k) * 5 + j];
        CHECK(cb.data()[(n * 3 + i) * 5 + j] == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("matmul transpose_b") {
  Rng rng(5);
  auto a = randu(rng, {3, 4});
  auto b = randu(rng, {6, 4});  // treated as (6,4) -> b^T is (4,6)
  auto c = matmul(a, b, true);
  REQUIRE(c.shape() == std::vector<int>{3, 6});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 6; ++j) {
      double acc = 0;
      for (int k = 0; k < 4; ++k) acc += a.data()[i * 4 + k] * b.data()[j * 4 + k];
      CHECK(c.data()[i * 6 + j] == doctest::Approx(acc).epsilon(1e-12));
    }
  CHECK_THROWS_AS(matmul(a, randu(rng, {5, 3})), std::invalid_argument);
}

TEST_CASE("matmul counts multiply-accumulates") {
  flops::reset_macs();
  Rng rng(6);
  auto a = randu(rng, {3, 4}, false);
  auto b = randu(rng, {4, 5}, false);
  (void)matmul(a, b);
  CHECK(flops::macs() == 3u * 4u * 5u);
}

TEST_CASE("reshape, permute, slice and concat") {
  Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6});
  auto r = reshape(x, {3, 2});
  CHECK(r.data() == x.data());
  CHECK_THROWS_AS(reshape(x, {4, 2}), std::invalid_argument);
  auto p = permute(x, {1, 0});
  CHECK(p.shape() == std::vector<int>{3, 2});
  CHECK(p.data() == std::vector<double>{1, 4, 2, 5, 3, 6});
  auto s = slice0(x, 1, 1);
  CHECK(s.data() == std::vector<double>{4, 5, 6});
  CHECK_THROWS_AS(slice0(x, 1, 2), std::out_of_range);
  auto c = concat0(std::vector<Tensor<double>>{x, x});
  CHECK(c.dim(0) == 4);

  // permute round trip on a 3-D tensor
  Rng rng(7);
  auto y = randu(rng, {2, 3, 4}, false);
  auto back = permute(permute(y, {2, 0, 1}), {1, 2, 0});
  CHECK(back.data() == y.data());
}

TEST_CASE("softmax matches a naive row computation and handles -inf masks") {
  Rng rng(8);
  auto x = randu(rng, {3, 5});
  auto y = softmax_lastdim(x);
  for (int r = 0; r < 3; ++r) {
    double denom = 0;
    for (int i = 0; i < 5; ++i) denom += std::exp(x.data()[r * 5 + i]);
    double rowsum = 0;
    for (int i = 0; i < 5; ++i) {
      CHECK(y.data()[r * 5 + i] ==
            doctest::Approx(std::exp(x.data()[r * 5 + i]) / denom).epsilon(1e-12));
      rowsum += y.data()[r * 5 + i];
    }
    CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-12));
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  Tensor<double> masked({1, 3}, {0.5, ninf, 1.0});
  auto ym = softmax_lastdim(masked);
  CHECK(ym.data()[1] == 0.0);
  CHECK(ym.data()[0] + ym.data()[2] == doctest::Approx(1.0));

  // softmax over a middle axis equals transposed last-axis softmax
  auto z = randu(rng, {2, 3, 4}, false);
  auto a1 = softmax(z, 1);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 4; ++k) {
      double sum = 0;
      for (int j = 0; j < 3; ++j) sum += a1.data()[(i * 3 + j) * 4 + k];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("layer_norm normalizes rows") {
  Rng rng(9);
  auto x = randu(rng, {4, 6});
  Tensor<double> gamma({6}, 1.0, true);
  Tensor<double> beta({6}, 0.0, true);
  auto y = layer_norm(x, gamma, beta);
  for (int r = 0; r < 4; ++r) {
    double mean = 0, var = 0;
    for (int i = 0; i < 6; ++i) mean += y.data()[r * 6 + i];
    mean /= 6;
    for (int i = 0; i < 6; ++i) var += (y.data()[r * 6 + i] - mean) * (y.data()[r * 6 + i] - mean);
    var /= 6;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // population variance with eps
  }
  CHECK_THROWS_AS(layer_norm(x, Tensor<double>({3}, 1.0), beta), std::invalid_argument);
}

TEST_CASE("gelu and sigmoid at known points") {
  Tensor<double> x({3}, {0.0, 1.0, -1.0});
  auto g = gelu(x);
  CHECK(g.data()[0] == 0.0);
  CHECK(g.data()[1] == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  CHECK(g.data()[2] == doctest::Approx(-0.15865525393145707).epsilon(1e-12));
  auto s = sigmoid(x);
  CHECK(s.data()[0] == 0.5);
  CHECK(s.data()[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("clamp zeroes the gradient outside the range") {
  Tensor<double> x({3}, {-2.0, 0.5, 2.0}, true);
  auto y = sum_all(clamp(x, -1.0, 1.0));
  CHECK(y.value() == doctest::Approx(0.5));
  y.backward();
  CHECK(x.grad() == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("gradient accumulation across shared subexpressions") {
  Tensor<double> x({1}, {3.0}, true);
  auto y = add(mul(x, x), x);  // x^2 + x -> dy/dx = 2x + 1 = 7
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("relative position buckets") {
  const int nb = 32, md = 128;
  CHECK(relative_position_bucket(0, nb, md) == 0);
  // small offsets are exact: negative side in [0,16), positive side offset by 16
  CHECK(relative_position_bucket(-3, nb, md) == 3);
  CHECK(relative_position_bucket(3, nb, md) == 19);
  // log-spaced region caps at the last bucket of each half
  CHECK(relative_position_bucket(-100000, nb, md) == 15);
  CHECK(relative_position_bucket(100000, nb, md) == 31);
  // monotone in |distance| on each side
  int prev = -1;
  for (int d = 0; d < 300; ++d) {
    int bk = relative_position_bucket(d, nb, md);
    CHECK(bk >= prev);
    CHECK(bk < nb);
    prev = bk;
  }
}

TEST_CASE("t5 bias gathers the bucket table per head") {
  const int nb = 32, h = 2;
  Tensor<double> table({nb, h}, 0.0, true);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < h; ++j) table.data()[i * h + j] = 100.0 * i + j;
  auto bias = t5_bias(table, 3, 3, 128);
  REQUIRE(bias.shape() == std::vector<int>{h, 3, 3});
  for (int hd = 0; hd < h; ++hd)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        int bk = relative_position_bucket(j - i, nb, 128);
        CHECK(bias.data()[(hd * 3 + i) * 3 + j] == 100.0 * bk + hd);
      }
}

TEST_CASE("global norm clipping") {
  Tensor<double> a({2}, {3.0, 0.0}, true);
  Tensor<double> b({1}, {4.0}, true);
  a.grad().assign({3.0, 0.0});
  b.grad().assign({4.0});
  std::vector<ParamRef<double>> params{{"a", a}, {"b", b}};
  double norm = clip_global_norm(params, 2.5);  // norm was 5
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad()[0] == doctest::Approx(1.5));
  CHECK(b.grad()[0] == doctest::Approx(2.0));
  // below the threshold nothing changes
  double norm2 = clip_global_norm(params, 10.0);
  CHECK(norm2 == doctest::Approx(2.5));
  CHECK(a.grad()[0] == doctest::Approx(1.5));
  CHECK_THROWS_AS(clip_global_norm(params, 0.0), std::invalid_argument);
}

TEST_CASE("adamw single step against a hand computation") {
  Tensor<double> p({1}, {1.0}, true);
  p.grad().assign({0.5});
  AdamW<double> opt({{"p", p}}, 0.1, 0.9, 0.999, 1e-8, 0.01);
  opt.step();
  // decay first: 1 * (1 - 0.1*0.01) = 0.999
  // m=0.05 -> mhat=0.5 ; v=0.00025 -> vhat=0.25
  // p = 0.999 - 0.1 * 0.5 / (0.5 + 1e-8)
  double expect = 0.999 - 0.1 * 0.5 / (0.5 + 1e-8);
  CHECK(p.data()[0] == doctest::Approx(expect).epsilon(1e-12));
  // missing gradient is an error that names the parameter
  p.zero_grad();
  CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("p"), std::runtime_error);
}

TEST_CASE("plateau scheduler halves after patience epochs without improvement") {
  PlateauScheduler sched(1.0, 2, 0.5);
  CHECK_FALSE(sched.step(5.0));  // new best
  CHECK_FALSE(sched.step(5.0));  // equal is not an improvement (1/2)
  CHECK(sched.step(5.0));        // (2/2) -> halve
  CHECK(sched.lr() == doctest::Approx(0.5));
  CHECK_FALSE(sched.step(4.0));  // improvement resets the counter
  CHECK_FALSE(sched.step(4.5));
  CHECK(sched.step(4.5));
  CHECK(sched.lr() == doctest::Approx(0.25));
}

TEST_CASE("bce_with_logits matches the direct formula") {
  Tensor<double> logits({3}, {2.0, -1.0, 0.5}, true);
  std::vector<double> targets{1.0, 0.0, 1.0};
  auto loss = bce_with_logits(logits, targets);
  double expect = 0;
  for (int i = 0; i < 3; ++i) {
    double l = logits.data()[i];
    double p = 1.0 / (1.0 + std::exp(-l));
    expect += -(targets[i] * std::log(p) + (1 - targets[i]) * std::log(1 - p));
  }
  expect /= 3;
  CHECK(loss.value() == doctest::Approx(expect).epsilon(1e-12));
  loss.backward();
  for (int i = 0; i < 3; ++i) {
    double p = 1.0 / (1.0 + std::exp(-logits.data()[i]));
    CHECK(logits.grad()[i] == doctest::Approx((p - targets[i]) / 3).epsilon(1e-10));
  }
}

TEST_CASE("rng reproducibility") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform(0, 1) == b.uniform(0, 1));
  std::vector<int> v{1, 2, 3, 4, 5}, w{1, 2, 3, 4, 5};
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
}
