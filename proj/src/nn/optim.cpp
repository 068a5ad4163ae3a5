#include "cmie/nn/optim.hpp"

#include <cmath>

namespace cmie::nn {

Adam::Adam(ParameterSet& params, Options options) : params_(params), options_(options) {
  for (std::size_t i = 0; i < params_.count(); ++i) {
    const Matrix& v = params_[i].value;
    m_.emplace_back(v.rows(), v.cols());
    v_.emplace_back(v.rows(), v.cols());
  }
}

double Adam::step() {
  const double norm = params_.grad_norm();
  double factor = 1.0;
  if (options_.clip_norm > 0.0 && norm > options_.clip_norm) factor = options_.clip_norm / norm;
  ++steps_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  const double lr = options_.learning_rate;
  for (std::size_t i = 0; i < params_.count(); ++i) {
    Parameter& p = params_[i];
    double* w = p.value.data();
    double* g = p.grad.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double gj = g[j] * factor;
      m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * gj;
      v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * gj * gj;
      w[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + options_.epsilon);
      g[j] = 0.0;
    }
  }
  return norm;
}

}  // namespace cmie::nn
