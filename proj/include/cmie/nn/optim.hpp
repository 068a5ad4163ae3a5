#pragma once

#include <vector>

#include "cmie/nn/parameter.hpp"

namespace cmie::nn {

/// Adam over a ParameterSet, with optional global-norm gradient clipping
/// applied before each step.
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.0;  // <= 0 disables clipping
  };

  Adam(ParameterSet& params, Options options);

  /// Applies one update from the accumulated gradients and zeroes them.
  /// Returns the pre-clipping gradient norm.
  double step();

  long steps() const { return steps_; }

 private:
  ParameterSet& params_;
  Options options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long steps_ = 0;
};

}  // namespace cmie::nn
