#include "dexgrasp/errors.hpp"
#include "dexgrasp/nn/adam.hpp"
#include "dexgrasp/nn/checkpoint.hpp"
#include "dexgrasp/nn/mlp.hpp"
#include "dexgrasp/nn/tape.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

using namespace dexgrasp;
using namespace dexgrasp::nn;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Central differences of f at x against the tape gradient.
double fd_error(const std::function<Var(Tape&, Var)>& f, Matrix x) {
  Tape tape;
  Var in = tape.input(x);
  tape.backward(f(tape, in));
  const Matrix g = tape.grad(in);
  const double h = 1e-6;
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    Tape tp, tm;
    const double fp = f(tp, tp.input(xp)).value()(0, 0);
    const double fm = f(tm, tm.input(xm)).value()(0, 0);
    const double fd = (fp - fm) / (2 * h);
    num += (fd - g.data()[i]) * (fd - g.data()[i]);
    den = std::max({den, fd * fd, g.data()[i] * g.data()[i]});
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dexgrasp_test_nn_" + name);
}

}  // namespace

TEST_CASE("tensor shapes and gradient buffers") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(!t.has_grad());
  t.grad()[4] = 2.0;
  CHECK(t.has_grad());
  t.zero_grad();
  CHECK(t.grad()[4] == 0.0);
  CHECK(shape_string(t.shape()) == "[2x3]");
}

TEST_CASE("elementwise and reduction ops match finite differences") {
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(3, 4, rng, 0.2, 1.5);
  const Matrix y = random_matrix(3, 4, rng, 0.2, 1.5);
  const Matrix row = random_matrix(1, 4, rng);
  const Matrix col = random_matrix(3, 1, rng);

  std::vector<std::pair<const char*, std::function<Var(Tape&, Var)>>> cases = {
      {"add", [&](Tape& t, Var a) { return sum(add(a, t.constant(y))); }},
      {"sub row", [&](Tape& t, Var a) { return sum(square(sub(a, t.constant(row)))); }},
      {"mul col", [&](Tape& t, Var a) { return sum(mul(a, t.constant(col))); }},
      {"div", [&](Tape& t, Var a) { return sum(div(t.constant(y), a)); }},
      {"div self", [&](Tape&, Var a) { return sum(div(a, add_scalar(square(a), 1.0))); }},
      {"tanh", [&](Tape&, Var a) { return mean(tanh(scale(a, 2.0))); }},
      {"exp log", [&](Tape&, Var a) { return sum(log(add_scalar(exp(neg(a)), 0.5))); }},
      {"softplus", [&](Tape&, Var a) { return sum(softplus(scale(a, -3.0))); }},
      {"sqrt", [&](Tape&, Var a) { return sum(sqrt(a)); }},
      {"row ops", [&](Tape& t, Var a) { return sum(mul(row_sum(a), row_dot(a, t.constant(y)))); }},
      {"normalize", [&](Tape& t, Var a) { return sum(mul(row_normalize(a), t.constant(y))); }},
      {"lse", [&](Tape&, Var a) { return logsumexp(scale(a, 3.0)); }},
      {"lse rows", [&](Tape&, Var a) { return mean(logsumexp_rows(a)); }},
      {"matmul_nt", [&](Tape& t, Var a) { return sum(square(matmul_nt(a, t.constant(y)))); }},
      {"concat slice", [&](Tape& t, Var a) {
         return sum(square(slice_cols(concat_cols(t.constant(col), a), 1, 3)));
       }},
      {"minimum", [&](Tape& t, Var a) { return sum(minimum(a, t.constant(y))); }},
  };
  for (const auto& [name, f] : cases) {
    INFO(name);
    CHECK(fd_error(f, x) < 1e-7);
  }
}

TEST_CASE("linear layer gradient wrt weights") {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix b = random_matrix(1, 2, rng);
  auto f = [&](Tape& t, Var w) { return sum(tanh(linear(t.constant(x), w, t.constant(b)))); };
  CHECK(fd_error(f, random_matrix(2, 3, rng)) < 1e-7);
}

TEST_CASE("clamp passes gradient only inside the interval") {
  Tape tape;
  Var x = tape.input((Matrix(1, 3) << -2.0, 0.5, 3.0).finished());
  tape.backward(sum(clamp(x, -1.0, 1.0)));
  const Matrix g = tape.grad(x);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == 1.0);
  CHECK(g(0, 2) == 0.0);
}

TEST_CASE("row_normalize rejects a zero row and names it") {
  Tape tape;
  Var x = tape.input((Matrix(2, 2) << 1.0, 2.0, 0.0, 0.0).finished());
  CHECK_THROWS_WITH_AS(row_normalize(x), doctest::Contains("1"), NumericError);
}

TEST_CASE("mlp tape and tape-free passes agree") {
  std::mt19937_64 rng(7);
  Mlp net({5, 16, 16, 3}, Activation::Relu, Activation::Tanh, rng);
  const Matrix x = random_matrix(6, 5, rng);
  Tape tape;
  const Matrix a = net.forward(tape, tape.constant(x), Grad::Track).value();
  CHECK(a == net.forward(x));
  CHECK(net.parameter_count() == 5 * 16 + 16 + 16 * 16 + 16 + 16 * 3 + 3);
  CHECK_THROWS_AS(net.forward(random_matrix(2, 4, rng)), DimensionError);
}

TEST_CASE("frozen networks receive no gradient") {
  std::mt19937_64 rng(8);
  Mlp net({3, 8, 1}, Activation::Tanh, Activation::Identity, rng);
  zero_grads(net.parameters("n"));
  const Mlp& frozen = net;
  Tape tape;
  Var x = tape.input(random_matrix(4, 3, rng));
  tape.backward(sum(frozen.forward(tape, x)));
  for (auto& p : net.parameters("n")) {
    for (double g : p.tensor->grad()) CHECK(g == 0.0);
  }
  CHECK(tape.grad(x).norm() > 0.0);
}

TEST_CASE("adam matches the bias-corrected update by hand") {
  Tensor w({2}, std::vector<double>{1.0, -2.0});
  ParamList params{{"w", &w}};
  AdamState opt(params, {0.1, 0.9, 0.999, 1e-8});
  w.grad()[0] = 0.5;
  w.grad()[1] = -4.0;
  adam_step(params, opt);
  // first step: m_hat = g, v_hat = g^2, so the step is lr * sign(g) (up to eps)
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + 1e-8)).epsilon(1e-15));
  w.grad()[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(params, opt), NumericError);
}

TEST_CASE("polyak update and copy") {
  std::mt19937_64 rng(9);
  Mlp a({2, 3, 1}, Activation::Relu, Activation::Identity, rng);
  Mlp b({2, 3, 1}, Activation::Relu, Activation::Identity, rng);
  polyak_update(b.parameters("b"), a.parameters("a"), 1.0);
  CHECK(a == b);
  CHECK_THROWS_AS(polyak_update(b.parameters("b"), a.parameters("a"), 0.0), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  std::mt19937_64 rng(11);
  Mlp net({4, 8, 2}, Activation::Tanh, Activation::Identity, rng);
  AdamState opt(net.parameters("net"), {1e-3});
  for (auto& p : net.parameters("net")) {
    for (double& g : p.tensor->grad()) g = 0.25;
  }
  adam_step(net.parameters("net"), opt);

  Checkpoint ckpt;
  ckpt.meta["phase"] = "test";
  ckpt.add_network("net", net);
  ckpt.add_adam("net", opt);
  ckpt.add("odd", Tensor({1}, std::vector<double>{std::nextafter(1.0, 2.0)}));
  const auto path = temp_path("a.ckpt");
  save_checkpoint(path, ckpt);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.network("net") == net);
  CHECK(back.adam("net") == opt);
  CHECK(back.at("odd")[0] == std::nextafter(1.0, 2.0));
  CHECK(back.meta["phase"] == "test");

  const auto path2 = temp_path("b.ckpt");
  save_checkpoint(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);

  // truncation is reported with the tensor name
  std::ofstream(path2, std::ios::binary | std::ios::trunc) << s1.substr(0, s1.size() - 5);
  CHECK_THROWS_WITH_AS(load_checkpoint(path2), doctest::Contains("truncated"), FormatError);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}
