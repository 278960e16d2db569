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

#include "c2f/checkpoint.h"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

namespace c2f {

namespace {

constexpr const char* kMagic = "c2f-checkpoint";

std::string ExpectLine(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw CheckpointError(std::string("checkpoint: truncated before ") + what);
  }
  return line;
}

}  // namespace

Checkpoint MakeCheckpoint(const Mlp& net, const RunConfig& config,
                          const Rng& rng) {
  Checkpoint ck;
  ck.config = config;
  const auto params = net.parameters();
  const auto names = net.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ck.arrays.push_back(NamedArray{names[i], *params[i]});
  }
  std::ostringstream state;
  state << rng;
  ck.rng_state = state.str();
  return ck;
}

Mlp RestoreMlp(const Checkpoint& ck) {
  if (ck.arrays.empty() || ck.arrays.size() % 2 != 0) {
    throw CheckpointError("checkpoint: expected weight/bias array pairs");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < ck.arrays.size(); i += 2) {
    const std::string layer = "layer" + std::to_string(i / 2);
    if (ck.arrays[i].name != layer + ".weight" ||
        ck.arrays[i + 1].name != layer + ".bias") {
      throw CheckpointError("checkpoint: unexpected array '" +
                            ck.arrays[i].name + "'");
    }
    layers.push_back(DenseLayer{ck.arrays[i].value, ck.arrays[i + 1].value});
  }
  const TaskSpec task = ck.config.task.Build();
  ModelDims dims{task.context_dim(), task.horizon, task.action_dim};
  try {
    return Mlp(dims, std::move(layers));
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

Rng RestoreRng(const Checkpoint& ck) {
  Rng rng;
  std::istringstream in(ck.rng_state);
  in >> rng;
  if (!in) throw CheckpointError("checkpoint: bad rng state");
  return rng;
}

std::string SerializeCheckpoint(const Checkpoint& ck) {
  std::ostringstream out;
  out << kMagic << ' ' << ck.version << '\n';
  const std::string config = SerializeConfig(ck.config);
  std::size_t config_lines = 0;
  for (char c : config) config_lines += c == '\n';
  out << "config " << config_lines << '\n' << config;
  out << "rng " << ck.rng_state << '\n';
  out << "arrays " << ck.arrays.size() << '\n';
  for (const NamedArray& a : ck.arrays) {
    out << a.name << ' ' << a.value.rank();
    for (std::size_t d : a.value.shape()) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      char buf[20];
      std::snprintf(buf, sizeof(buf), "%016" PRIx64,
                    std::bit_cast<std::uint64_t>(a.value[i]));
      out << buf << ((i + 1) % 8 == 0 || i + 1 == a.value.size() ? '\n' : ' ');
    }
  }
  return out.str();
}

Checkpoint ParseCheckpoint(const std::string& text) {
  std::istringstream in(text);
  Checkpoint ck;
  {
    std::istringstream head(ExpectLine(in, "header"));
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != kMagic) {
      throw CheckpointError("checkpoint: not a c2f checkpoint");
    }
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint: format version " +
                            std::to_string(version) + ", expected " +
                            std::to_string(kCheckpointVersion));
    }
    ck.version = version;
  }
  std::size_t config_lines = 0;
  if (std::sscanf(ExpectLine(in, "config").c_str(), "config %zu",
                  &config_lines) != 1) {
    throw CheckpointError("checkpoint: missing config section");
  }
  std::string config;
  for (std::size_t i = 0; i < config_lines; ++i) {
    config += ExpectLine(in, "config body") + "\n";
  }
  ck.config = ParseConfig(config);
  const std::string rng = ExpectLine(in, "rng");
  if (rng.rfind("rng ", 0) != 0) {
    throw CheckpointError("checkpoint: missing rng section");
  }
  ck.rng_state = rng.substr(4);
  std::size_t count = 0;
  if (std::sscanf(ExpectLine(in, "arrays").c_str(), "arrays %zu", &count) !=
      1) {
    throw CheckpointError("checkpoint: missing arrays section");
  }
  for (std::size_t k = 0; k < count; ++k) {
    std::istringstream head(ExpectLine(in, "array header"));
    NamedArray a;
    std::size_t rank = 0;
    if (!(head >> a.name >> rank) || rank == 0) {
      throw CheckpointError("checkpoint: bad array header");
    }
    Shape shape(rank);
    for (std::size_t& d : shape) {
      if (!(head >> d)) throw CheckpointError("checkpoint: bad array shape");
    }
    a.value = Tensor(shape);
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      std::string word;
      if (!(in >> word) || word.size() != 16) {
        throw CheckpointError("checkpoint: truncated array " + a.name);
      }
      a.value[i] =
          std::bit_cast<double>(std::stoull(word, nullptr, 16));
    }
    in.ignore(1);  // newline after the payload
    ck.arrays.push_back(std::move(a));
  }
  return ck;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out << SerializeCheckpoint(ck);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCheckpoint(buffer.str());
}

}  // namespace c2f
