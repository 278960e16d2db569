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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "c2f/config.h"
#include "commands.h"

namespace {

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> overrides;
  std::vector<std::string> checkpoints;
};

void AddCommon(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "run config file");
  cmd->add_option("--seed", o.seed, "overrides train.seed");
  cmd->add_option("--out", o.out, "output directory (run.out)");
  cmd->add_option("--override", o.overrides, "key=value, repeatable")
      ->take_all();
}

c2f::RunConfig Resolve(const Options& o, const CLI::App* cmd) {
  c2f::RunConfig config = o.config_path.empty()
                              ? c2f::RunConfig{}
                              : c2f::LoadConfigFile(o.config_path);
  for (const std::string& kv : o.overrides) c2f::ApplyOverride(config, kv);
  if (cmd->count("--seed") > 0) config.train.seed = o.seed;
  if (!o.out.empty()) config.out = o.out;
  config.Validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine two-step action sampler: train, evaluate, "
               "benchmark, ablate and sweep on synthetic tasks"};
  app.require_subcommand(1);
  Options o;
  CLI::App* train = app.add_subcommand("train", "train one model");
  CLI::App* eval = app.add_subcommand("eval", "write metrics.csv");
  CLI::App* bench = app.add_subcommand("bench", "write frontier.csv");
  CLI::App* ablate = app.add_subcommand("ablate", "write ablation.csv");
  CLI::App* sweep = app.add_subcommand("sweep", "write sweep.csv");
  for (CLI::App* cmd : {train, eval, bench, ablate, sweep}) AddCommon(cmd, o);
  for (CLI::App* cmd : {eval, bench}) {
    cmd->add_option("--checkpoint", o.checkpoints,
                    "trained checkpoint, repeatable; missing models are "
                    "trained from the config")
        ->take_all();
  }
  CLI11_PARSE(app, argc, argv);

  namespace cli = c2f::cli;
  try {
    if (train->parsed()) return cli::CmdTrain(Resolve(o, train));
    if (eval->parsed()) return cli::CmdEval(Resolve(o, eval), o.checkpoints);
    if (bench->parsed()) {
      return cli::CmdBench(Resolve(o, bench), o.checkpoints);
    }
    if (ablate->parsed()) return cli::CmdAblate(Resolve(o, ablate));
    if (sweep->parsed()) return cli::CmdSweep(Resolve(o, sweep));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
