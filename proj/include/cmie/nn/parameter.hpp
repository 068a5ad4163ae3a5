#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cmie/core/matrix.hpp"
#include "cmie/core/rng.hpp"

namespace cmie::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Owns the trainable tensors of one model. Insertion order is the
/// serialization and optimizer order; addresses stay stable.
class ParameterSet {
 public:
  Parameter& add(std::string name, int rows, int cols);
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = rows.
  Parameter& add_fan_in(std::string name, int rows, int cols, Rng& rng);
  Parameter& add_uniform(std::string name, int rows, int cols, double bound, Rng& rng);

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  std::size_t count() const { return params_.size(); }
  std::size_t scalar_count() const;
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  double grad_norm() const;
  double value_norm() const;
  void scale_grad(double factor);
  /// Rounds every value to the nearest float so a float32 save is lossless.
  void round_to_float();

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace cmie::nn
