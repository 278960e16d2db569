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

#ifndef C2F_MLP_H_
#define C2F_MLP_H_

#include <cstddef>
#include <string>
#include <vector>

#include "c2f/autodiff.h"
#include "c2f/tensor.h"

namespace c2f {

// Extents shared by every velocity/posterior network: a context vector of
// width m and an action chunk of H rows by d columns, carried flattened.
struct ModelDims {
  std::size_t context_dim = 0;
  std::size_t horizon = 1;
  std::size_t action_dim = 1;

  std::size_t chunk_width() const { return horizon * action_dim; }
  // Context, flattened chunk, then the scalar time.
  std::size_t input_width() const { return context_dim + chunk_width() + 1; }
  // Mean half followed by log-variance half.
  std::size_t output_width() const { return 2 * chunk_width(); }

  bool operator==(const ModelDims&) const = default;
};

// Anything that maps (context, x, t) to raw diagonal-Gaussian parameters.
// Trained networks and analytic oracles both implement it, so samplers and
// losses never care which one they hold.
//
// Shapes: contexts [B x m], x [B x H*d], t [B x 1]; output [B x 2*H*d].
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual ModelDims dims() const = 0;
  virtual Tensor Forward(const Tensor& contexts, const Tensor& x,
                         const Tensor& t) const = 0;
  virtual Var Trace(Graph& graph, Var contexts, Var x, Var t) const = 0;

 protected:
  void CheckInputs(const Tensor& contexts, const Tensor& x,
                   const Tensor& t) const;
};

// Column of B copies of t.
Tensor TimeColumn(std::size_t batch, double t);

enum class Activation { kTanh };

struct DenseLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

// Fully connected network with a smooth activation between layers and a
// linear output layer.
class Mlp : public Denoiser {
 public:
  // Scaled-uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
  Mlp(ModelDims dims, const std::vector<std::size_t>& hidden, Rng& rng);
  Mlp(ModelDims dims, std::vector<DenseLayer> layers,
      Activation activation = Activation::kTanh);

  ModelDims dims() const override { return dims_; }
  Tensor Forward(const Tensor& contexts, const Tensor& x,
                 const Tensor& t) const override;
  Var Trace(Graph& graph, Var contexts, Var x, Var t) const override;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<std::size_t> hidden_widths() const;
  Activation activation() const { return activation_; }

  // Weight then bias per layer, in order.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

 private:
  void Validate() const;

  ModelDims dims_;
  std::vector<DenseLayer> layers_;
  Activation activation_ = Activation::kTanh;
};

// Single-sample convenience: context [m], x [H x d] (or flat), scalar t.
// Returns the raw output row [2*H*d].
Tensor MlpForward(const Mlp& net, const Tensor& context, const Tensor& x,
                  double t);

}  // namespace c2f

#endif  // C2F_MLP_H_
