// Copyright 2026 The c2f Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "c2f/mlp.h"

#include <cmath>
#include <utility>

namespace c2f {

void Denoiser::CheckInputs(const Tensor& contexts, const Tensor& x,
                           const Tensor& t) const {
  const ModelDims d = dims();
  const std::size_t batch = x.rows();
  if (contexts.rows() != batch || t.rows() != batch || t.cols() != 1) {
    throw ShapeError("denoiser: batch mismatch contexts " +
                     ShapeString(contexts.shape()) + ", x " +
                     ShapeString(x.shape()) + ", t " +
                     ShapeString(t.shape()));
  }
  if (contexts.cols() != d.context_dim) {
    throw ShapeError("denoiser: context width " +
                     std::to_string(contexts.cols()) + ", expected " +
                     std::to_string(d.context_dim));
  }
  if (x.cols() != d.chunk_width()) {
    throw ShapeError("denoiser: chunk width " + std::to_string(x.cols()) +
                     ", expected " + std::to_string(d.chunk_width()));
  }
  for (double v : t.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError("denoiser: time " + std::to_string(v) +
                        " outside [0, 1]");
    }
  }
}

Tensor TimeColumn(std::size_t batch, double t) {
  return Tensor::Matrix(batch, 1, t);
}

Mlp::Mlp(ModelDims dims, const std::vector<std::size_t>& hidden, Rng& rng)
    : dims_(dims) {
  std::vector<std::size_t> widths;
  widths.push_back(dims.input_width());
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(dims.output_width());
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    layers_.push_back(DenseLayer{
        RandomUniform({widths[l], widths[l + 1]}, -bound, bound, rng),
        RandomUniform({widths[l + 1]}, -bound, bound, rng)});
  }
  Validate();
}

Mlp::Mlp(ModelDims dims, std::vector<DenseLayer> layers, Activation activation)
    : dims_(dims), layers_(std::move(layers)), activation_(activation) {
  Validate();
}

void Mlp::Validate() const {
  if (layers_.empty()) throw ShapeError("mlp: no layers");
  std::size_t width = dims_.input_width();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.weight.rank() != 2 || layer.weight.shape()[0] != width ||
        layer.bias.size() != layer.weight.shape()[1]) {
      throw ShapeError("mlp: layer " + std::to_string(l) + " weight " +
                       ShapeString(layer.weight.shape()) + " bias " +
                       ShapeString(layer.bias.shape()) +
                       " does not follow width " + std::to_string(width));
    }
    width = layer.weight.shape()[1];
  }
  if (width != dims_.output_width()) {
    throw ShapeError("mlp: output width " + std::to_string(width) +
                     ", expected " + std::to_string(dims_.output_width()));
  }
}

Tensor Mlp::Forward(const Tensor& contexts, const Tensor& x,
                    const Tensor& t) const {
  CheckInputs(contexts, x, t);
  const Tensor* parts[] = {&contexts, &x, &t};
  Tensor h = ConcatCols(parts);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    Tensor next = MatMul(h, layer.weight);
    const std::size_t cols = next.cols();
    const bool hidden = l + 1 < layers_.size();
    for (std::size_t r = 0; r < next.rows(); ++r) {
      auto row = next.row(r);
      for (std::size_t c = 0; c < cols; ++c) {
        row[c] += layer.bias[c];
        if (hidden) row[c] = std::tanh(row[c]);
      }
    }
    h = std::move(next);
  }
  return h;
}

Var Mlp::Trace(Graph& graph, Var contexts, Var x, Var t) const {
  CheckInputs(graph.value(contexts), graph.value(x), graph.value(t));
  const Var parts[] = {contexts, x, t};
  Var h = graph.ConcatCols(parts);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = graph.Affine(h, graph.Parameter(&layers_[l].weight),
                     graph.Parameter(&layers_[l].bias));
    if (l + 1 < layers_.size()) h = graph.Tanh(h);
  }
  return h;
}

std::vector<std::size_t> Mlp::hidden_widths() const {
  std::vector<std::size_t> widths;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    widths.push_back(layers_[l].weight.shape()[1]);
  }
  return widths;
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (DenseLayer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const DenseLayer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<std::string> Mlp::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    names.push_back("layer" + std::to_string(l) + ".weight");
    names.push_back("layer" + std::to_string(l) + ".bias");
  }
  return names;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) {
    n += layer.weight.size() + layer.bias.size();
  }
  return n;
}

Tensor MlpForward(const Mlp& net, const Tensor& context, const Tensor& x,
                  double t) {
  const ModelDims d = net.dims();
  if (context.size() != d.context_dim || x.size() != d.chunk_width()) {
    throw ShapeError("mlp_forward: got context " +
                     ShapeString(context.shape()) + " and x " +
                     ShapeString(x.shape()) + " for dims m=" +
                     std::to_string(d.context_dim) + ", H=" +
                     std::to_string(d.horizon) + ", d=" +
                     std::to_string(d.action_dim));
  }
  Tensor out = net.Forward(context.Reshaped({1, d.context_dim}),
                           x.Reshaped({1, d.chunk_width()}), TimeColumn(1, t));
  return out.Reshaped({d.output_width()});
}

}  // namespace c2f
