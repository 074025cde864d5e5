#include <doctest.h>

#include <cstring>
#include <cmath>

#include "test_support.hpp"
#include "tpgcn/checkpoint.hpp"
#include "tpgcn/gradcheck.hpp"
#include "tpgcn/ops.hpp"

using namespace tpgcn;
using namespace tpgcn::testing;

namespace {

Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> out({a.dim(0), b.dim(1)});
  for (std::int64_t i = 0; i < a.dim(0); ++i) {
    for (std::int64_t j = 0; j < b.dim(1); ++j) {
      for (std::int64_t k = 0; k < a.dim(1); ++k) out.at({i, j}) += a.at({i, k}) * b.at({k, j});
    }
  }
  return out;
}

Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& bias,
                          ops::TemporalConvSpec spec) {
  const std::int64_t b = x.dim(0), ci = x.dim(1), t = x.dim(2), v = x.dim(3), co = w.dim(0), k = w.dim(2);
  const std::int64_t to = (t + 2 * spec.padding - spec.dilation * (k - 1) - 1) / spec.stride + 1;
  Tensor<double> out({b, co, to, v});
  for (std::int64_t n = 0; n < b; ++n) {
    for (std::int64_t o = 0; o < co; ++o) {
      for (std::int64_t s = 0; s < to; ++s) {
        for (std::int64_t j = 0; j < v; ++j) {
          double acc = bias[o];
          for (std::int64_t c = 0; c < ci; ++c) {
            for (std::int64_t q = 0; q < k; ++q) {
              const std::int64_t src = s * spec.stride - spec.padding + q * spec.dilation;
              if (src >= 0 && src < t) acc += w.at({o, c, q}) * x.at({n, c, src, j});
            }
          }
          out.at({n, o, s, j}) = acc;
        }
      }
    }
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("matmul agrees with the loop oracle") {
  std::mt19937_64 rng(1);
  const Tensor<double> a = random_tensor<double>({3, 4}, rng), b = random_tensor<double>({4, 2}, rng);
  CHECK(max_abs_diff(ops::matmul(Var<double>(a), Var<double>(b)).value(), naive_matmul(a, b)) < 1e-12);
  const Tensor<double> x = random_tensor<double>({5, 6}, rng);
  CHECK(max_abs_diff(ops::matmul(Var<double>(Tensor<double>::eye(5)), Var<double>(x)).value(), x) == 0.0);
}

TEST_CASE("temporal convolution agrees with the loop oracle") {
  std::mt19937_64 rng(2);
  for (const ops::TemporalConvSpec spec : {ops::TemporalConvSpec{1, 1, 1}, ops::TemporalConvSpec{2, 1, 1},
                                           ops::TemporalConvSpec{1, 2, 2}, ops::TemporalConvSpec{2, 2, 2}}) {
    const Tensor<double> x = random_tensor<double>({2, 3, 9, 4}, rng);
    const Tensor<double> w = random_tensor<double>({5, 3, 3}, rng);
    const Tensor<double> bias = random_tensor<double>({5}, rng);
    const auto y = ops::conv_temporal<double>(Var<double>(x), Var<double>(w), Var<double>(bias), spec);
    CHECK(max_abs_diff(y.value(), naive_conv(x, w, bias, spec)) < 1e-12);
  }
}

TEST_CASE("graph aggregation agrees with the loop oracle") {
  std::mt19937_64 rng(3);
  const std::int64_t b = 2, k = 3, c = 2, t = 3, v = 5;
  const Tensor<double> y = random_tensor<double>({b, k * c, t, v}, rng);
  const Tensor<double> shared = random_tensor<double>({k, v, v}, rng);
  const Tensor<double> per = random_tensor<double>({b, k, v, v}, rng);
  for (bool per_sample : {false, true}) {
    const Tensor<double>& a = per_sample ? per : shared;
    const Tensor<double> out = ops::graph_aggregate(Var<double>(y), Var<double>(a)).value();
    Tensor<double> ref({b, c, t, v});
    for (std::int64_t n = 0; n < b; ++n) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t s = 0; s < t; ++s) {
          for (std::int64_t w = 0; w < v; ++w) {
            for (std::int64_t d = 0; d < k; ++d) {
              for (std::int64_t u = 0; u < v; ++u) {
                const double adj = per_sample ? a.at({n, d, u, w}) : a.at({d, u, w});
                ref.at({n, ch, s, w}) += y.at({n, d * c + ch, s, u}) * adj;
              }
            }
          }
        }
      }
    }
    CHECK(max_abs_diff(out, ref) < 1e-12);
  }
}

TEST_CASE("softmax, cross entropy and reductions") {
  const auto p = ops::softmax(Var<double>(Tensor<double>({2, 11}, 0.3)));
  for (std::int64_t i = 0; i < p.value().numel(); ++i) CHECK(p.value()[i] == doctest::Approx(1.0 / 11));

  Tensor<double> confident({1, 4});
  confident[2] = 50.0;
  CHECK(ops::cross_entropy(Var<double>(confident), {2}).value()[0] < 1e-12);

  std::mt19937_64 rng(4);
  const Tensor<double> x = random_tensor<double>({3, 4, 5}, rng);
  const auto mean = ops::mean(Var<double>(x), {1}).value();
  const auto sum = ops::sum(Var<double>(x), {1}).value();
  for (std::int64_t i = 0; i < mean.numel(); ++i) CHECK(std::abs(mean[i] - sum[i] / 4.0) < 1e-12);
  const auto mx = ops::max(Var<double>(x), 2).value();
  CHECK(mx.shape() == Shape{3, 4});
  CHECK(mx.at({1, 2}) == *std::max_element(x.data() + (1 * 4 + 2) * 5, x.data() + (1 * 4 + 3) * 5));
}

TEST_CASE("max pooling never picks padding") {
  Tensor<double> x({1, 1, 4, 1}, -5.0);
  const auto y = ops::max_pool_temporal(Var<double>(x), 3, 1, 1).value();
  for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y[i] == -5.0);
}

TEST_CASE("batch norm eval mode is the affine map with running statistics") {
  std::mt19937_64 rng(5);
  const Tensor<double> x = random_tensor<double>({2, 3, 4, 2}, rng);
  Parameter<double> gamma("g", random_tensor<double>({3}, rng)), beta("b", random_tensor<double>({3}, rng));
  ops::BatchNormStats<double> stats(3);
  stats.running_mean = random_tensor<double>({3}, rng);
  stats.running_var = random_tensor<double>({3}, rng, 0.5, 2.0);
  const auto y = ops::batch_norm(Var<double>(x), gamma.var(), beta.var(), stats, {false, 0.1, 1e-5}).value();
  for (std::int64_t n = 0; n < 2; ++n) {
    for (std::int64_t c = 0; c < 3; ++c) {
      for (std::int64_t i = 0; i < 8; ++i) {
        const double in = x[(n * 3 + c) * 8 + i];
        const double ref = gamma.value()[c] * (in - stats.running_mean[c]) / std::sqrt(stats.running_var[c] + 1e-5) + beta.value()[c];
        CHECK(std::abs(y[(n * 3 + c) * 8 + i] - ref) < 1e-12);
      }
    }
  }
  // Training mode normalizes with batch statistics and moves the running ones.
  const Tensor<double> before = stats.running_mean;
  const auto z = ops::batch_norm(Var<double>(x), gamma.var(), beta.var(), stats, {true, 0.1, 1e-5}).value();
  CHECK(max_abs_diff(before, stats.running_mean) > 0.0);
  CHECK(z.shape() == x.shape());
}

TEST_CASE("backward on closed-form losses") {
  std::mt19937_64 rng(6);
  Parameter<double> w("w", random_tensor<double>({3, 4}, rng));
  const Tensor<double> x = random_tensor<double>({3, 4}, rng);
  {
    Tape<double> tape;
    tape.backward(ops::sum_all(ops::mul(w.var(), Var<double>(x))));
  }
  CHECK(max_abs_diff(w.grad(), x) < 1e-15);

  w.zero_grad();
  {
    Tape<double> tape;
    tape.backward(ops::scale(ops::sum_all(ops::mul(w.var(), w.var())), 0.5));
  }
  CHECK(max_abs_diff(w.grad(), w.value()) < 1e-15);

  // Gradients accumulate across sweeps and unreachable parameters stay at zero.
  Parameter<double> unused("u", Tensor<double>({2}, 1.0));
  {
    Tape<double> tape;
    tape.backward(ops::scale(ops::sum_all(ops::mul(w.var(), w.var())), 0.5));
  }
  for (std::int64_t i = 0; i < w.numel(); ++i) CHECK(w.grad()[i] == doctest::Approx(2.0 * w.value()[i]));
  for (std::int64_t i = 0; i < unused.numel(); ++i) CHECK(unused.grad()[i] == 0.0);
}

TEST_CASE("scaling the loss scales every gradient") {
  std::mt19937_64 rng(7);
  Parameter<double> w("w", random_tensor<double>({4, 3}, rng));
  const Tensor<double> x = random_tensor<double>({2, 4}, rng);
  auto loss = [&](double c) {
    w.zero_grad();
    Tape<double> tape;
    const auto y = ops::relu(ops::matmul(Var<double>(x), w.var()));
    tape.backward(ops::scale(ops::cross_entropy(y, {0, 2}), c));
    return w.grad();
  };
  const Tensor<double> g1 = loss(1.0), g3 = loss(3.0);
  for (std::int64_t i = 0; i < g1.numel(); ++i) CHECK(g3[i] == doctest::Approx(3.0 * g1[i]).epsilon(1e-6));
}

TEST_CASE("errors from the engine") {
  const Var<double> a(Tensor<double>({2, 3})), b(Tensor<double>({4, 2}));
  try {
    ops::matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
    CHECK(std::string(e.what()).find("[2, 3]") != std::string::npos);
    CHECK(std::string(e.what()).find("[4, 2]") != std::string::npos);
  }
  Parameter<double> w("w", Tensor<double>({2}, 1.0));
  const auto loss = ops::sum_all(ops::mul(w.var(), w.var()));
  CHECK(code_of([&] { backward(loss); }) == ErrorCode::NoTape);

  set_debug_checks(true);
  Tensor<double> bad({2}, 1.0);
  bad[1] = std::nan("");
  CHECK(code_of([&] { ops::mul(Var<double>(bad), Var<double>(bad)); }) == ErrorCode::NonFiniteDetected);
  set_debug_checks(false);
  CHECK_NOTHROW(ops::mul(Var<double>(bad), Var<double>(bad)));
}

TEST_CASE("grad check passes on correct rules and flags a broken one") {
  std::mt19937_64 rng(8);
  Parameter<double> w("w", random_tensor<double>({3, 2}, rng)), bias("b", random_tensor<double>({2}, rng));
  const Tensor<double> x = random_tensor<double>({4, 3}, rng);
  const auto linear = [&] {
    auto y = ops::add(ops::matmul(Var<double>(x), w.var()), bias.var());
    return ops::cross_entropy(ops::sigmoid(y), {0, 1, 1, 0});
  };
  CHECK(grad_check(linear, {&w, &bias}).passed());

  const auto faulty = [&] {
    const Var<double> in = w.var();
    Tensor<double> sq = in.value();
    for (std::int64_t i = 0; i < sq.numel(); ++i) sq[i] *= sq[i];
    // Reverse rule forgets the factor of two.
    auto y = ops::custom<double>(sq, {in}, [](Node<double>& node) {
      Tensor<double>& g = node.parents[0]->ensure_grad();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += node.grad[i] * node.parents[0]->value[i];
    });
    return ops::sum_all(y);
  };
  const GradCheckReport report = grad_check(faulty, {&w});
  CHECK_FALSE(report.passed());
  CHECK(report.worst() > 1e-2);
}

TEST_CASE("concat, slice and reshape route gradients") {
  std::mt19937_64 rng(9);
  Parameter<double> a("a", random_tensor<double>({2, 3, 2}, rng)), b("b", random_tensor<double>({2, 1, 2}, rng));
  const Tensor<double> probe = random_tensor<double>({2, 2, 2}, rng);
  const auto fn = [&] {
    auto joined = ops::concat<double>({a.var(), b.var()}, 1);
    auto part = ops::slice(joined, 1, 1, 3);
    auto flat = ops::reshape(part, {2, 4});
    return ops::sum_all(ops::mul(ops::reshape(flat, {2, 2, 2}), Var<double>(probe)));
  };
  CHECK(grad_check(fn, {&a, &b}).passed());
}

TEST_CASE("identical seeds give identical values") {
  auto run = [] {
    std::mt19937_64 rng(10);
    const Tensor<float> x = random_tensor<float>({2, 4, 16, 6}, rng);
    const Tensor<float> w = random_tensor<float>({8, 4, 3}, rng);
    return ops::conv_temporal<float>(Var<float>(x), Var<float>(w), std::nullopt, {1, 1, 1}).value();
  };
  const Tensor<float> a = run(), b = run();
  CHECK(std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.numel()) * sizeof(float)) == 0);
}

TEST_CASE("checkpoints round trip and convert precision") {
  std::mt19937_64 rng(11);
  std::vector<NamedTensor<float>> entries{{"a.weight", random_tensor<float>({3, 2}, rng)}, {"b.bias", random_tensor<float>({4}, rng)}};
  const std::string bytes = encode_checkpoint(entries);
  const auto back = decode_checkpoint<float>(bytes);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "a.weight");
  CHECK(max_abs_diff(back[0].value, entries[0].value) == 0.0);
  const auto wide = decode_checkpoint<double>(bytes);
  CHECK(wide[1].value[2] == static_cast<double>(entries[1].value[2]));

  std::string broken = bytes;
  broken[0] = 'Z';
  CHECK(code_of([&] { decode_checkpoint<float>(broken); }) == ErrorCode::BadMagic);
  CHECK_THROWS_AS(decode_checkpoint<float>(bytes.substr(0, bytes.size() - 3)), Error);
}
