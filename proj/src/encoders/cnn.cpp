#include "cmie/encoders/cnn.hpp"

namespace cmie::encoders {

MultiWidthCnn::MultiWidthCnn(std::vector<Conv1d> branches) : branches_(std::move(branches)) {
  for (const Conv1d& b : branches_) out_dim_ += b.weight->value.cols();
}

MultiWidthCnn MultiWidthCnn::create(ParameterSet& params, const std::string& prefix, int input_dim,
                                    const std::vector<int>& widths, const std::vector<int>& filters, Rng& rng) {
  std::vector<Conv1d> branches;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    branches.push_back(Conv1d::create(params, prefix + ".conv" + std::to_string(widths[i]), widths[i], input_dim,
                                      filters[i], rng));
  }
  return MultiWidthCnn(std::move(branches));
}

Var MultiWidthCnn::forward(Tape& tape, Var x) const {
  std::vector<Var> outs;
  outs.reserve(branches_.size());
  for (const Conv1d& b : branches_) outs.push_back(nn::relu(tape, b(tape, x)));
  return outs.size() == 1 ? outs[0] : nn::concat_cols(tape, outs);
}

}  // namespace cmie::encoders
