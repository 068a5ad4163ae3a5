#include "cmie/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmie/core/error.hpp"
#include "cmie/kernels/kernels.hpp"

namespace cmie::nn {

Var Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.external_value = &p.value;
  n.external_grad = &p.grad;
  n.requires_grad = true;
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_[v.id].requires_grad;
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[id];
  return n.external_value != nullptr ? *n.external_value : n.value;
}

const Matrix& Tape::value(Var v) const { return value(v.id); }

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.external_grad != nullptr) return *n.external_grad;
  if (n.grad.empty()) {
    const Matrix& v = value(id);
    n.grad = Matrix(v.rows(), v.cols());
  }
  return n.grad;
}

const Matrix* Tape::grad_if_any(int id) const {
  const Node& n = nodes_[id];
  if (n.external_grad != nullptr) return n.external_grad;
  return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::backward(Var loss, double seed) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw UsageError("backward() needs a 1x1 loss node");
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)(0, 0) += seed;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, id);
  }
}

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw UsageError(std::string(op) + ": shape mismatch [" + std::to_string(a.rows()) + "," +
                     std::to_string(a.cols()) + "] vs [" + std::to_string(b.rows()) + "," +
                     std::to_string(b.cols()) + "]");
  }
}

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  const double* src = a.data();
  double* dst = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.cols() == bv.rows(), "matmul", av, bv);
  Matrix out(av.rows(), bv.cols());
  kernels::active().gemm_nn(av.rows(), bv.cols(), av.cols(), av.data(), bv.data(), out.data());
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    const auto& k = kernels::active();
    if (t.requires_grad(a)) {
      k.gemm_nt(g.rows(), bv.rows(), g.cols(), g.data(), bv.data(), t.grad(a.id).data());
    }
    if (t.requires_grad(b)) {
      k.gemm_tn(av.rows(), g.cols(), av.cols(), av.data(), g.data(), t.grad(b.id).data());
    }
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.cols() == bv.cols(), "matmul_nt", av, bv);
  Matrix out(av.rows(), bv.rows());
  kernels::active().gemm_nt(av.rows(), bv.rows(), av.cols(), av.data(), bv.data(), out.data());
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    const auto& k = kernels::active();
    if (t.requires_grad(a)) {
      k.gemm_nn(g.rows(), bv.cols(), g.cols(), g.data(), bv.data(), t.grad(a.id).data());
    }
    if (t.requires_grad(b)) {
      k.gemm_tn(g.rows(), av.cols(), g.cols(), g.data(), av.data(), t.grad(b.id).data());
    }
  });
}

Var transpose(Tape& t, Var a) {
  const Matrix& av = t.value(a);
  Matrix out(av.cols(), av.rows());
  for (int r = 0; r < av.rows(); ++r)
    for (int c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (int r = 0; r < ga.rows(); ++r)
      for (int c = 0; c < ga.cols(); ++c) ga(r, c) += g(c, r);
  });
}

Var add_bias(Tape& t, Var a, Var bias) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(bias);
  require(bv.rows() == 1 && bv.cols() == av.cols(), "add_bias", av, bv);
  Matrix out = av;
  for (int r = 0; r < out.rows(); ++r) {
    double* o = out.row(r);
    for (int c = 0; c < out.cols(); ++c) o[c] += bv(0, c);
  }
  return t.record(std::move(out), {a, bias}, [a, bias](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) {
      kernels::active().axpy(1.0, g.data(), t.grad(a.id).data(), g.size());
    }
    if (t.requires_grad(bias)) {
      Matrix& gb = t.grad(bias.id);
      for (int r = 0; r < g.rows(); ++r) kernels::active().axpy(1.0, g.row(r), gb.data(), g.cols());
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.same_shape(bv), "add", av, bv);
  Matrix out = av;
  kernels::active().axpy(1.0, bv.data(), out.data(), out.size());
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) kernels::active().axpy(1.0, g.data(), t.grad(a.id).data(), g.size());
    if (t.requires_grad(b)) kernels::active().axpy(1.0, g.data(), t.grad(b.id).data(), g.size());
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.same_shape(bv), "sub", av, bv);
  Matrix out = av;
  kernels::active().axpy(-1.0, bv.data(), out.data(), out.size());
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) kernels::active().axpy(1.0, g.data(), t.grad(a.id).data(), g.size());
    if (t.requires_grad(b)) kernels::active().axpy(-1.0, g.data(), t.grad(b.id).data(), g.size());
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.same_shape(bv), "mul", av, bv);
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] * bv.data()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) {
      const Matrix& bv = t.value(b);
      double* ga = t.grad(a.id).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.data()[i] * bv.data()[i];
    }
    if (t.requires_grad(b)) {
      const Matrix& av = t.value(a);
      double* gb = t.grad(b.id).data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g.data()[i] * av.data()[i];
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  Matrix out = map(t.value(a), [s](double x) { return x * s; });
  return t.record(std::move(out), {a}, [a, s](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    kernels::active().axpy(s, g.data(), t.grad(a.id).data(), g.size());
  });
}

Var tanh(Tape& t, Var a) {
  Matrix out = map(t.value(a), [](double x) { return std::tanh(x); });
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    double* ga = t.grad(a.id).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
  });
}

Var sigmoid(Tape& t, Var a) {
  Matrix out = map(t.value(a), [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    double* ga = t.grad(a.id).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.data()[i] * y.data()[i] * (1.0 - y.data()[i]);
  });
}

Var relu(Tape& t, Var a) {
  Matrix out = map(t.value(a), [](double x) { return x > 0.0 ? x : 0.0; });
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(a);
    double* ga = t.grad(a.id).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x.data()[i] > 0.0) ga[i] += g.data()[i];
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const int rows = t.value(parts[0]).rows();
  int cols = 0;
  for (Var p : parts) {
    require(t.value(p).rows() == rows, "concat_cols", t.value(parts[0]), t.value(p));
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  int offset = 0;
  for (Var p : parts) {
    const Matrix& pv = t.value(p);
    for (int r = 0; r < rows; ++r) std::copy(pv.row(r), pv.row(r) + pv.cols(), out.row(r) + offset);
    offset += pv.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [ins](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    int offset = 0;
    for (Var p : ins) {
      const int w = t.value(p).cols();
      if (t.requires_grad(p)) {
        Matrix& gp = t.grad(p.id);
        for (int r = 0; r < g.rows(); ++r) {
          const double* src = g.row(r) + offset;
          double* dst = gp.row(r);
          for (int c = 0; c < w; ++c) dst[c] += src[c];
        }
      }
      offset += w;
    }
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  const int cols = t.value(parts[0]).cols();
  int rows = 0;
  for (Var p : parts) {
    require(t.value(p).cols() == cols, "concat_rows", t.value(parts[0]), t.value(p));
    rows += t.value(p).rows();
  }
  Matrix out(rows, cols);
  double* dst = out.data();
  for (Var p : parts) {
    const Matrix& pv = t.value(p);
    dst = std::copy(pv.data(), pv.data() + pv.size(), dst);
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [ins](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const double* src = g.data();
    for (Var p : ins) {
      const std::size_t n = t.value(p).size();
      if (t.requires_grad(p)) kernels::active().axpy(1.0, src, t.grad(p.id).data(), n);
      src += n;
    }
  });
}

Var slice_cols(Tape& t, Var a, int begin, int count) {
  const Matrix& av = t.value(a);
  if (begin < 0 || count < 0 || begin + count > av.cols()) throw UsageError("slice_cols: out of range");
  Matrix out(av.rows(), count);
  for (int r = 0; r < av.rows(); ++r) std::copy(av.row(r) + begin, av.row(r) + begin + count, out.row(r));
  return t.record(std::move(out), {a}, [a, begin](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (int r = 0; r < g.rows(); ++r) {
      double* dst = ga.row(r) + begin;
      const double* src = g.row(r);
      for (int c = 0; c < g.cols(); ++c) dst[c] += src[c];
    }
  });
}

Var slice_rows(Tape& t, Var a, int begin, int count) {
  const Matrix& av = t.value(a);
  if (begin < 0 || count < 0 || begin + count > av.rows()) throw UsageError("slice_rows: out of range");
  Matrix out(count, av.cols());
  std::copy(av.row(begin), av.row(begin) + static_cast<std::size_t>(count) * av.cols(), out.data());
  return t.record(std::move(out), {a}, [a, begin](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    kernels::active().axpy(1.0, g.data(), t.grad(a.id).row(begin), g.size());
  });
}

Var shift_rows(Tape& t, Var a, int offset) {
  const Matrix& av = t.value(a);
  const int rows = av.rows();
  Matrix out(rows, av.cols());
  for (int r = 0; r < rows; ++r) {
    const int src = r - offset;
    if (src >= 0 && src < rows) std::copy(av.row(src), av.row(src) + av.cols(), out.row(r));
  }
  return t.record(std::move(out), {a}, [a, offset](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (int r = 0; r < g.rows(); ++r) {
      const int src = r - offset;
      if (src >= 0 && src < g.rows()) kernels::active().axpy(1.0, g.row(r), ga.row(src), g.cols());
    }
  });
}

Var pad_rows(Tape& t, Var a, int rows) {
  const Matrix& av = t.value(a);
  if (rows < av.rows()) throw UsageError("pad_rows: target smaller than input");
  if (rows == av.rows()) return a;
  Matrix out(rows, av.cols());
  std::copy(av.data(), av.data() + av.size(), out.data());
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    kernels::active().axpy(1.0, g.data(), ga.data(), ga.size());
  });
}

Var gather_rows(Tape& t, Var table, std::span<const int> ids) {
  const Matrix& tv = t.value(table);
  Matrix out(static_cast<int>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) throw UsageError("gather_rows: index out of range");
    std::copy(tv.row(ids[i]), tv.row(ids[i]) + tv.cols(), out.row(static_cast<int>(i)));
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return t.record(std::move(out), {table}, [table, idx](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& gt = t.grad(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      kernels::active().axpy(1.0, g.row(static_cast<int>(i)), gt.row(idx[i]), g.cols());
    }
  });
}

Var softmax_rows(Tape& t, Var a) {
  const Matrix& av = t.value(a);
  Matrix out(av.rows(), av.cols());
  for (int r = 0; r < av.rows(); ++r) {
    const double* x = av.row(r);
    double* y = out.row(r);
    const double mx = *std::max_element(x, x + av.cols());
    double s = 0.0;
    for (int c = 0; c < av.cols(); ++c) s += (y[c] = std::exp(x[c] - mx));
    for (int c = 0; c < av.cols(); ++c) y[c] /= s;
  }
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad(a.id);
    for (int r = 0; r < g.rows(); ++r) {
      const double inner = kernels::active().dot(g.row(r), y.row(r), g.cols());
      for (int c = 0; c < g.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - inner);
    }
  });
}

Var maxpool2_rows(Tape& t, Var a) {
  const Matrix& av = t.value(a);
  if (av.rows() % 2 != 0) throw UsageError("maxpool2_rows: odd row count");
  Matrix out(av.rows() / 2, av.cols());
  std::vector<int> argmax(out.size());
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < av.cols(); ++c) {
      const double x0 = av(2 * r, c);
      const double x1 = av(2 * r + 1, c);
      const bool second = x1 > x0;
      out(r, c) = second ? x1 : x0;
      argmax[static_cast<std::size_t>(r) * av.cols() + c] = 2 * r + (second ? 1 : 0);
    }
  }
  return t.record(std::move(out), {a}, [a, argmax](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) ga(argmax[static_cast<std::size_t>(r) * g.cols() + c], c) += g(r, c);
  });
}

Var upsample2_rows(Tape& t, Var a) {
  const Matrix& av = t.value(a);
  Matrix out(av.rows() * 2, av.cols());
  for (int r = 0; r < out.rows(); ++r) std::copy(av.row(r / 2), av.row(r / 2) + av.cols(), out.row(r));
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (int r = 0; r < g.rows(); ++r) kernels::active().axpy(1.0, g.row(r), ga.row(r / 2), g.cols());
  });
}

Var weighted_sum(Tape& t, Var a, const Matrix& w) {
  const Matrix& av = t.value(a);
  require(av.same_shape(w), "weighted_sum", av, w);
  Matrix out(1, 1, kernels::scalar_table().dot(av.data(), w.data(), av.size()));
  return t.record(std::move(out), {a}, [a, w](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    kernels::active().axpy(g, w.data(), t.grad(a.id).data(), w.size());
  });
}

Var softmax_cross_entropy(Tape& t, Var logits, std::span<const int> targets) {
  const Matrix& lv = t.value(logits);
  if (static_cast<int>(targets.size()) != lv.rows()) throw UsageError("softmax_cross_entropy: target count mismatch");
  Matrix probs(lv.rows(), lv.cols());
  double loss = 0.0;
  for (int r = 0; r < lv.rows(); ++r) {
    const int y = targets[r];
    if (y < 0 || y >= lv.cols()) throw UsageError("softmax_cross_entropy: target out of range");
    const double* x = lv.row(r);
    const double mx = *std::max_element(x, x + lv.cols());
    double s = 0.0;
    for (int c = 0; c < lv.cols(); ++c) s += (probs(r, c) = std::exp(x[c] - mx));
    for (int c = 0; c < lv.cols(); ++c) probs(r, c) /= s;
    loss += mx + std::log(s) - x[y];
  }
  std::vector<int> ys(targets.begin(), targets.end());
  return t.record(Matrix(1, 1, loss), {logits}, [logits, probs = std::move(probs), ys](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    Matrix& gl = t.grad(logits.id);
    for (int r = 0; r < probs.rows(); ++r) {
      for (int c = 0; c < probs.cols(); ++c) gl(r, c) += g * probs(r, c);
      gl(r, ys[r]) -= g;
    }
  });
}

}  // namespace cmie::nn
