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

#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "c2f/checkpoint.h"
#include "c2f/eval.h"
#include "test_util.h"

namespace c2f {
namespace {

struct TrainedRun {
  Mlp net;
  Checkpoint checkpoint;
};

TrainedRun Train(RunConfig& config) {
  config.train.hidden = {8, 8};
  config.schedule.phase1_steps = 5;
  config.schedule.phase2_steps = 5;
  const TaskSpec task = config.task.Build();
  Rng init = StreamRng(config.train.seed, 0);
  Mlp net(testing::DimsOf(task), config.train.hidden, init);
  Rng train = StreamRng(config.train.seed, 1);
  TrainCoarseToFine(net, task, config.schedule, config.train, train);
  Checkpoint ckpt = MakeCheckpoint(net, config, train);
  return TrainedRun{std::move(net), std::move(ckpt)};
}

Checkpoint Trained(RunConfig& config) { return Train(config).checkpoint; }

TEST(CheckpointTest, BitwiseRoundTrip) {
  RunConfig config;
  config.schedule.lambda_2 = 0.1 + 0.2;
  const Checkpoint a = Trained(config);
  const Checkpoint b = ParseCheckpoint(SerializeCheckpoint(a));
  EXPECT_EQ(b.version, kCheckpointVersion);
  EXPECT_EQ(b.config, a.config);
  EXPECT_EQ(b.rng_state, a.rng_state);
  ASSERT_EQ(b.arrays.size(), a.arrays.size());
  for (std::size_t i = 0; i < a.arrays.size(); ++i) {
    EXPECT_EQ(b.arrays[i].name, a.arrays[i].name);
    EXPECT_EQ(b.arrays[i].value.shape(), a.arrays[i].value.shape());
    for (std::size_t j = 0; j < a.arrays[i].value.size(); ++j) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(b.arrays[i].value[j]),
                std::bit_cast<std::uint64_t>(a.arrays[i].value[j]));
    }
  }
  EXPECT_EQ(SerializeCheckpoint(b), SerializeCheckpoint(a));
}

TEST(CheckpointTest, FileRoundTripAndRestore) {
  RunConfig config;
  const TrainedRun run = Train(config);
  const Mlp* net = &run.net;
  const Checkpoint& a = run.checkpoint;
  const auto path =
      std::filesystem::temp_directory_path() / "c2f_checkpoint_test.txt";
  SaveCheckpoint(path.string(), a);
  const Checkpoint b = LoadCheckpoint(path.string());
  std::filesystem::remove(path);
  const Mlp restored = RestoreMlp(b);
  ASSERT_EQ(restored.parameters().size(), net->parameters().size());
  for (std::size_t i = 0; i < net->parameters().size(); ++i) {
    EXPECT_EQ(*restored.parameters()[i], *net->parameters()[i]);
  }
  Rng r1 = RestoreRng(b);
  Rng r2 = RestoreRng(a);
  EXPECT_EQ(r1(), r2());
  EXPECT_THROW(LoadCheckpoint("/nonexistent/dir/ckpt"), std::exception);
}

TEST(CheckpointTest, VersionMismatchNamesVersions) {
  RunConfig config;
  std::string text = SerializeCheckpoint(Trained(config));
  text.replace(0, text.find('\n'), "c2f-checkpoint 7");
  try {
    ParseCheckpoint(text);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("7"), std::string::npos);
    EXPECT_NE(msg.find("expected 1"), std::string::npos);
  }
  EXPECT_THROW(ParseCheckpoint("garbage"), CheckpointError);
  EXPECT_THROW(ParseCheckpoint(""), CheckpointError);
}

TEST(CheckpointTest, RejectsTruncatedPayload) {
  RunConfig config;
  const std::string text = SerializeCheckpoint(Trained(config));
  EXPECT_THROW(ParseCheckpoint(text.substr(0, text.size() - 40)),
               CheckpointError);
}

// Resuming with no further updates must reproduce the saved model's metrics.
TEST(CheckpointTest, ZeroStepResumeKeepsMetrics) {
  RunConfig config;
  const TrainedRun run = Train(config);
  const TaskSpec task = config.task.Build();
  const QualityOptions opts{100, 1.0};
  Rng e1(3);
  const QualityReport q1 = EvaluateQuality(
      TwoStepSampler(run.net, config.schedule, "CF@2"), task, opts, e1);
  const Checkpoint loaded =
      ParseCheckpoint(SerializeCheckpoint(run.checkpoint));
  const Mlp resumed = RestoreMlp(loaded);
  Rng e2(3);
  const QualityReport q2 = EvaluateQuality(
      TwoStepSampler(resumed, loaded.config.schedule, "CF@2"), task, opts, e2);
  EXPECT_EQ(q1.energy_distance, q2.energy_distance);
  EXPECT_EQ(q1.mmd, q2.mmd);
  EXPECT_EQ(q1.collapsed_contexts, q2.collapsed_contexts);
}

}  // namespace
}  // namespace c2f
