#include <gtest/gtest.h>

#include <cmath>

#include "cmie/nn/optim.hpp"
#include "cmie/nn/tape.hpp"
#include "oracles.hpp"

using namespace cmie;
using nn::Tape;
using nn::Var;

namespace {

// Every op is checked through one parameter feeding it.
void check_op(const std::function<Var(Tape&, Var)>& op, int rows, int cols, int out_rows, int out_cols,
              std::uint64_t seed = 1) {
  Rng rng(seed);
  nn::ParameterSet ps;
  ps.add("x", rows, cols).value = oracle::random_matrix(rng, rows, cols);
  const Matrix proj = oracle::random_matrix(rng, out_rows, out_cols);
  const auto r = oracle::check_module(
      ps, [&](Tape& t) { return op(t, t.param(ps[0])); }, proj, 1e-5, 0, rng);
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

}  // namespace

TEST(Tape, MatmulVariantsAgreeWithDefinition) {
  Tape t;
  Matrix a(2, 3);
  Matrix b(3, 2);
  for (int i = 0; i < 6; ++i) {
    a.data()[i] = i + 1;
    b.data()[i] = 0.5 * i - 1;
  }
  const Matrix& c = t.value(nn::matmul(t, t.constant(a), t.constant(b)));
  EXPECT_DOUBLE_EQ(c(0, 0), 1 * -1 + 2 * 0 + 3 * 1);
  const Matrix& d = t.value(nn::matmul_nt(t, t.constant(a), t.constant(a)));
  EXPECT_DOUBLE_EQ(d(0, 1), 1 * 4 + 2 * 5 + 3 * 6);
}

TEST(Tape, ElementwiseGradients) {
  check_op([](Tape& t, Var x) { return nn::tanh(t, x); }, 3, 4, 3, 4);
  check_op([](Tape& t, Var x) { return nn::sigmoid(t, x); }, 3, 4, 3, 4);
  check_op([](Tape& t, Var x) { return nn::mul(t, x, nn::tanh(t, x)); }, 3, 4, 3, 4);
  check_op([](Tape& t, Var x) { return nn::sub(t, nn::scale(t, x, 3.0), nn::sigmoid(t, x)); }, 2, 2, 2, 2);
}

TEST(Tape, StructuralGradients) {
  check_op([](Tape& t, Var x) { return nn::matmul(t, x, nn::transpose(t, x)); }, 3, 4, 3, 3);
  check_op([](Tape& t, Var x) { return nn::matmul_nt(t, x, x); }, 3, 4, 3, 3);
  check_op([](Tape& t, Var x) { return nn::concat_cols(t, {x, nn::tanh(t, x)}); }, 3, 2, 3, 4);
  check_op([](Tape& t, Var x) { return nn::concat_rows(t, {x, x}); }, 3, 2, 6, 2);
  check_op([](Tape& t, Var x) { return nn::slice_cols(t, x, 1, 2); }, 3, 4, 3, 2);
  check_op([](Tape& t, Var x) { return nn::slice_rows(t, x, 1, 2); }, 4, 3, 2, 3);
  check_op([](Tape& t, Var x) { return nn::shift_rows(t, x, 2); }, 5, 2, 5, 2);
  check_op([](Tape& t, Var x) { return nn::shift_rows(t, x, -1); }, 5, 2, 5, 2);
  check_op([](Tape& t, Var x) { return nn::pad_rows(t, x, 7); }, 5, 2, 7, 2);
  check_op([](Tape& t, Var x) { return nn::softmax_rows(t, x); }, 3, 5, 3, 5);
  check_op([](Tape& t, Var x) { return nn::upsample2_rows(t, x); }, 3, 2, 6, 2);
  check_op([](Tape& t, Var x) { return nn::maxpool2_rows(t, x); }, 6, 3, 3, 3);
  check_op([](Tape& t, Var x) { return nn::add_bias(t, x, nn::slice_rows(t, x, 0, 1)); }, 3, 4, 3, 4);
  const int ids[] = {2, 0, 2, 1};
  check_op([&](Tape& t, Var x) { return nn::gather_rows(t, x, ids); }, 3, 4, 4, 4);
}

TEST(Tape, CrossEntropyGradient) {
  const int targets[] = {0, 3, 1};
  check_op([&](Tape& t, Var x) { return nn::softmax_cross_entropy(t, x, targets); }, 3, 4, 1, 1);
}

TEST(Tape, CrossEntropyValue) {
  Tape t;
  Matrix logits(1, 3);
  logits(0, 1) = std::log(2.0);
  const int target[] = {1};
  const double loss = t.value(nn::softmax_cross_entropy(t, t.constant(logits), target))(0, 0);
  EXPECT_NEAR(loss, -std::log(0.5), 1e-12);
}

TEST(Tape, ReusedNodeAccumulatesGradient) {
  nn::ParameterSet ps;
  ps.add("x", 1, 1).value(0, 0) = 3.0;
  Tape t;
  const Var x = t.param(ps[0]);
  const Var y = nn::mul(t, x, x);
  t.backward(nn::weighted_sum(t, nn::add(t, y, x), Matrix(1, 1, 1.0)));
  EXPECT_DOUBLE_EQ(ps[0].grad(0, 0), 2 * 3.0 + 1);
}

TEST(Adam, MinimizesQuadratic) {
  nn::ParameterSet ps;
  ps.add("w", 1, 2).value = Matrix(1, 2, 5.0);
  nn::Adam opt(ps, {.learning_rate = 0.1});
  for (int i = 0; i < 500; ++i) {
    Tape t;
    const Var w = t.param(ps[0]);
    t.backward(nn::weighted_sum(t, nn::mul(t, w, w), Matrix(1, 2, 1.0)));
    opt.step();
  }
  EXPECT_NEAR(ps[0].value(0, 0), 0.0, 1e-2);
  EXPECT_EQ(opt.steps(), 500);
}

TEST(Adam, ClipsGlobalNorm) {
  nn::ParameterSet ps;
  auto& p = ps.add("w", 1, 2);
  p.grad(0, 0) = 30;
  p.grad(0, 1) = 40;
  nn::Adam opt(ps, {.learning_rate = 0.1, .clip_norm = 1.0});
  EXPECT_DOUBLE_EQ(opt.step(), 50.0);
  EXPECT_EQ(p.grad(0, 0), 0.0);
}

TEST(ParameterSet, RoundToFloatIsIdempotent) {
  Rng rng(2);
  nn::ParameterSet ps;
  ps.add("a", 3, 3).value = oracle::random_matrix(rng, 3, 3);
  ps.round_to_float();
  for (double v : ps[0].value.values()) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  const auto snap = ps.snapshot();
  ps[0].value(0, 0) = 9;
  ps.restore(snap);
  EXPECT_EQ(ps[0].value, snap[0]);
}
