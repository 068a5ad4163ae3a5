#include "cmie/nn/parameter.hpp"

#include <cmath>

#include "cmie/core/error.hpp"

namespace cmie::nn {

Parameter& ParameterSet::add(std::string name, int rows, int cols) {
  if (find(name) != nullptr) throw UsageError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = Matrix(rows, cols);
  p->grad = Matrix(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::add_fan_in(std::string name, int rows, int cols, Rng& rng) {
  return add_uniform(std::move(name), rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)), rng);
}

Parameter& ParameterSet::add_uniform(std::string name, int rows, int cols, double bound, Rng& rng) {
  Parameter& p = add(std::move(name), rows, cols);
  for (double& v : p.value.values()) v = static_cast<float>(rng.uniform(-bound, bound));
  return p;
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw UsageError("no parameter named " + std::string(name));
  return *p;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

double ParameterSet::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_) {
    for (double g : p->grad.values()) s += g * g;
  }
  return std::sqrt(s);
}

double ParameterSet::value_norm() const {
  double s = 0.0;
  for (const auto& p : params_) {
    for (double v : p->value.values()) s += v * v;
  }
  return std::sqrt(s);
}

void ParameterSet::scale_grad(double factor) {
  for (auto& p : params_) {
    for (double& g : p->grad.values()) g *= factor;
  }
}

void ParameterSet::round_to_float() {
  for (auto& p : params_) {
    for (double& v : p->value.values()) v = static_cast<float>(v);
  }
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw UsageError("snapshot does not match parameter set");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i]->value)) throw UsageError("snapshot shape mismatch");
    params_[i]->value = values[i];
  }
}

}  // namespace cmie::nn
