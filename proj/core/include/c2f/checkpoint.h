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

#ifndef C2F_CHECKPOINT_H_
#define C2F_CHECKPOINT_H_

#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/config.h"
#include "c2f/mlp.h"
#include "c2f/tensor.h"

namespace c2f {

inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  std::vector<NamedArray> arrays;
  RunConfig config;
  std::string rng_state;  // textual engine state
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Checkpoint MakeCheckpoint(const Mlp& net, const RunConfig& config,
                          const Rng& rng);
// Rebuilds the network from the arrays; layer widths come from the shapes.
Mlp RestoreMlp(const Checkpoint& checkpoint);
Rng RestoreRng(const Checkpoint& checkpoint);

// Text format: a version line, the config snapshot, the RNG state, then each
// array as a `name rank dims...` header followed by the IEEE-754 bit
// patterns in hex, row-major.
std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint ParseCheckpoint(const std::string& text);

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace c2f

#endif  // C2F_CHECKPOINT_H_
