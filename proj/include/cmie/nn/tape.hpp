#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "cmie/core/matrix.hpp"
#include "cmie/nn/parameter.hpp"

namespace cmie::nn {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode autodiff record. Each forward op appends a node holding its
/// value and a closure that pushes the node's gradient to its inputs.
/// Parameter leaves accumulate directly into Parameter::grad.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Var constant(Matrix value);
  Var param(Parameter& p);
  /// Appends an op result. `inputs` decide whether the node needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  const Matrix& value(Var v) const;
  const Matrix& value(int id) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, allocated (zeroed) on first access.
  Matrix& grad(int id);
  /// Gradient of the node if it was ever written; otherwise nullptr.
  const Matrix* grad_if_any(int id) const;

  /// Seeds d(loss) = seed for a 1x1 node and propagates to every input.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external_value = nullptr;
    Matrix grad;
    Matrix* external_grad = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;
};

// Forward ops. Shapes: rows are time steps, columns features.
Var matmul(Tape& t, Var a, Var b);     // [m,k] x [k,n]
Var matmul_nt(Tape& t, Var a, Var b);  // [m,k] x [n,k]^T
Var transpose(Tape& t, Var a);
Var add_bias(Tape& t, Var a, Var bias);  // bias [1,n] broadcast over rows
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var tanh(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var relu(Tape& t, Var a);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var concat_rows(Tape& t, std::span<const Var> parts);
Var slice_cols(Tape& t, Var a, int begin, int count);
Var slice_rows(Tape& t, Var a, int begin, int count);
/// y[r] = a[r - offset] when in range, else zero.
Var shift_rows(Tape& t, Var a, int offset);
/// Appends zero rows up to `rows`.
Var pad_rows(Tape& t, Var a, int rows);
Var gather_rows(Tape& t, Var table, std::span<const int> ids);
Var softmax_rows(Tape& t, Var a);
/// Pairwise max over rows (2r, 2r+1); ties pick the first. rows must be even.
Var maxpool2_rows(Tape& t, Var a);
/// Nearest-neighbour: row r becomes rows 2r and 2r+1.
Var upsample2_rows(Tape& t, Var a);
/// sum(a .* w) as a 1x1 node.
Var weighted_sum(Tape& t, Var a, const Matrix& w);
/// Sum of cross-entropies of row-wise softmax against target column indices.
Var softmax_cross_entropy(Tape& t, Var logits, std::span<const int> targets);

inline Var concat_cols(Tape& t, std::initializer_list<Var> parts) {
  return concat_cols(t, std::span<const Var>(parts.begin(), parts.size()));
}
inline Var concat_rows(Tape& t, std::initializer_list<Var> parts) {
  return concat_rows(t, std::span<const Var>(parts.begin(), parts.size()));
}

}  // namespace cmie::nn
