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

#include "c2f/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <type_traits>
#include <sstream>
#include <utility>

namespace c2f {

TaskSpec TaskConfig::Build() const {
  if (family == TaskFamily::kMixture) {
    return MakeMixtureTask(MixtureParams{contexts, modes, horizon, action_dim,
                                         stddev, radius, waypoint_step});
  }
  return MakeArcTask(
      ArcParams{contexts, horizon, radius, span, chirality_weight, stddev});
}

const char* ModelKindName(ModelKind kind) {
  return kind == ModelKind::kCoarseToFine ? "cf" : "fm";
}

ModelKind ParseModelKind(const std::string& s) {
  if (s == "cf") return ModelKind::kCoarseToFine;
  if (s == "fm") return ModelKind::kFlowMatching;
  throw std::invalid_argument("unknown model '" + s + "'");
}

std::size_t RunConfig::FlowMatchingSteps() const {
  return fm_steps > 0 ? fm_steps
                      : schedule.phase1_steps + schedule.phase2_steps;
}

ConfigError::ConfigError(const std::string& key, std::size_t line,
                         const std::string& message)
    : std::invalid_argument(
          (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
          key + ": " + message),
      key_(key),
      line_(line) {}

namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t ParseUnsigned(const std::string& s) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("expected a non-negative integer, got '" + s +
                                "'");
  }
  return v;
}

bool ParseBool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  if (Trim(s).empty()) return out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(Trim(item));
  return out;
}

template <typename T, typename F>
std::string JoinList(const std::vector<T>& values, F format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += format(values[i]);
  }
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename S, typename T>
Entry Field(std::string key, S RunConfig::*section, T S::*member) {
  Entry e;
  e.key = std::move(key);
  if constexpr (std::is_same_v<T, double>) {
    e.get = [=](const RunConfig& c) {
      return FormatDouble((c.*section).*member);
    };
    e.set = [=](RunConfig& c, const std::string& v) {
      (c.*section).*member = ParseDouble(v);
    };
  } else if constexpr (std::is_same_v<T, bool>) {
    e.get = [=](const RunConfig& c) {
      return std::string((c.*section).*member ? "true" : "false");
    };
    e.set = [=](RunConfig& c, const std::string& v) {
      (c.*section).*member = ParseBool(v);
    };
  } else if constexpr (std::is_same_v<T, int>) {
    e.get = [=](const RunConfig& c) {
      return std::to_string((c.*section).*member);
    };
    e.set = [=](RunConfig& c, const std::string& v) {
      const std::uint64_t n = ParseUnsigned(v);
      if (n > 1000000) throw std::invalid_argument("value too large");
      (c.*section).*member = static_cast<int>(n);
    };
  } else {
    static_assert(std::is_unsigned_v<T>);
    e.get = [=](const RunConfig& c) {
      return std::to_string((c.*section).*member);
    };
    e.set = [=](RunConfig& c, const std::string& v) {
      (c.*section).*member = static_cast<T>(ParseUnsigned(v));
    };
  }
  return e;
}

template <typename S, typename E>
Entry Enum(std::string key, S RunConfig::*section, E S::*member,
           const char* (*name)(E), E (*parse)(const std::string&)) {
  return {std::move(key),
          [=](const RunConfig& c) {
            return std::string(name((c.*section).*member));
          },
          [=](RunConfig& c, const std::string& v) {
            (c.*section).*member = parse(v);
          }};
}

const std::vector<Entry>& Registry() {
  static const std::vector<Entry> entries = [] {
    using R = RunConfig;
    std::vector<Entry> e;
    e.push_back(Enum("task.family", &R::task, &TaskConfig::family,
                     TaskFamilyName, ParseTaskFamily));
    e.push_back(Field("task.contexts", &R::task, &TaskConfig::contexts));
    e.push_back(Field("task.modes", &R::task, &TaskConfig::modes));
    e.push_back(Field("task.horizon", &R::task, &TaskConfig::horizon));
    e.push_back(Field("task.action_dim", &R::task, &TaskConfig::action_dim));
    e.push_back(Field("task.stddev", &R::task, &TaskConfig::stddev));
    e.push_back(Field("task.radius", &R::task, &TaskConfig::radius));
    e.push_back(
        Field("task.waypoint_step", &R::task, &TaskConfig::waypoint_step));
    e.push_back(Field("task.span", &R::task, &TaskConfig::span));
    e.push_back(Field("task.chirality_weight", &R::task,
                      &TaskConfig::chirality_weight));

    using P = PhaseSchedule;
    e.push_back(
        Field("schedule.sigma2_noise", &R::schedule, &P::sigma2_noise));
    e.push_back(Field("schedule.gamma", &R::schedule, &P::gamma));
    e.push_back(Field("schedule.lambda_1", &R::schedule, &P::lambda_1));
    e.push_back(Field("schedule.lambda_2", &R::schedule, &P::lambda_2));
    e.push_back(Field("schedule.alpha", &R::schedule, &P::alpha));
    e.push_back(Field("schedule.t_f", &R::schedule, &P::t_f));
    e.push_back(Field("schedule.t1", &R::schedule, &P::t1));
    e.push_back(Enum("schedule.coarse_start", &R::schedule, &P::coarse_start,
                     CoarseStartName, ParseCoarseStart));
    e.push_back(Enum("schedule.coarse_output", &R::schedule,
                     &P::coarse_output, CoarseOutputName, ParseCoarseOutput));
    e.push_back(Enum("schedule.infer_coarse_output", &R::schedule,
                     &P::infer_coarse_output, CoarseOutputName,
                     ParseCoarseOutput));
    e.push_back(Enum("schedule.coarse_loss_type", &R::schedule,
                     &P::coarse_loss_type, CoarseLossName, ParseCoarseLoss));
    e.push_back(
        Field("schedule.fine_dt_scale", &R::schedule, &P::fine_dt_scale));
    e.push_back(
        Field("schedule.fine_x_scale", &R::schedule, &P::fine_x_scale));
    e.push_back(Field("schedule.refine", &R::schedule, &P::refine));
    e.push_back(
        Field("schedule.learn_variance", &R::schedule, &P::learn_variance));
    e.push_back(
        Field("schedule.noisy_actions", &R::schedule, &P::noisy_actions));
    e.push_back(Field("schedule.flow_num", &R::schedule, &P::flow_num));
    e.push_back(Entry{
        "schedule.times_list_train",
        [](const RunConfig& c) {
          return JoinList(c.schedule.times_list_train, FormatDouble);
        },
        [](RunConfig& c, const std::string& v) {
          std::vector<double> times;
          for (const std::string& s : SplitList(v)) {
            times.push_back(ParseDouble(s));
          }
          c.schedule.times_list_train = std::move(times);
        }});
    e.push_back(
        Field("schedule.phase1_steps", &R::schedule, &P::phase1_steps));
    e.push_back(
        Field("schedule.phase2_steps", &R::schedule, &P::phase2_steps));

    e.push_back(Entry{
        "train.model",
        [](const RunConfig& c) { return std::string(ModelKindName(c.model)); },
        [](RunConfig& c, const std::string& v) {
          c.model = ParseModelKind(v);
        }});
    e.push_back(
        Field("train.learning_rate", &R::train, &TrainConfig::learning_rate));
    e.push_back(
        Field("train.batch_size", &R::train, &TrainConfig::batch_size));
    e.push_back(Field("train.seed", &R::train, &TrainConfig::seed));
    e.push_back(Entry{
        "train.hidden",
        [](const RunConfig& c) {
          return JoinList(c.train.hidden,
                          [](std::size_t n) { return std::to_string(n); });
        },
        [](RunConfig& c, const std::string& v) {
          std::vector<std::size_t> widths;
          for (const std::string& s : SplitList(v)) {
            widths.push_back(ParseUnsigned(s));
          }
          c.train.hidden = std::move(widths);
        }});
    e.push_back(Enum("train.time_law", &R::train, &TrainConfig::time_law,
                     TimeLawName, ParseTimeLaw));
    e.push_back(Entry{
        "train.fm_steps",
        [](const RunConfig& c) { return std::to_string(c.fm_steps); },
        [](RunConfig& c, const std::string& v) {
          c.fm_steps = ParseUnsigned(v);
        }});

    using V = EvalConfig;
    e.push_back(Field("eval.samples_per_context", &R::eval,
                      &V::samples_per_context));
    e.push_back(
        Field("eval.coverage_radius", &R::eval, &V::coverage_radius));
    e.push_back(Entry{
        "eval.fm_nfe",
        [](const RunConfig& c) {
          return JoinList(c.eval.fm_nfe,
                          [](std::size_t n) { return std::to_string(n); });
        },
        [](RunConfig& c, const std::string& v) {
          std::vector<std::size_t> steps;
          for (const std::string& s : SplitList(v)) {
            steps.push_back(ParseUnsigned(s));
          }
          c.eval.fm_nfe = std::move(steps);
        }});
    e.push_back(
        Field("eval.bench_repetitions", &R::eval, &V::bench_repetitions));
    e.push_back(Field("eval.bench_warmup", &R::eval, &V::bench_warmup));
    e.push_back(Field("eval.ablate_seeds", &R::eval, &V::ablate_seeds));
    e.push_back(Entry{
        "eval.sweep_grids",
        [](const RunConfig& c) {
          return JoinList(c.eval.sweep_grids,
                          [](const std::string& s) { return s; });
        },
        [](RunConfig& c, const std::string& v) {
          c.eval.sweep_grids = SplitList(v);
        }});
    e.push_back(Field("eval.sweep_workers", &R::eval, &V::sweep_workers));

    e.push_back(Entry{
        "run.out", [](const RunConfig& c) { return c.out; },
        [](RunConfig& c, const std::string& v) { c.out = v; }});
    return e;
  }();
  return entries;
}

const Entry* FindEntry(const std::string& key) {
  for (const Entry& e : Registry()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void Assign(RunConfig& config, const std::string& key,
            const std::string& value, std::size_t line) {
  const Entry* entry = FindEntry(key);
  if (entry == nullptr) throw ConfigError(key, line, "unknown key");
  try {
    entry->set(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, line, e.what());
  }
}

// Validates and re-attributes errors to the line that set the offending key.
void ValidateWithLines(const RunConfig& config,
                       const std::map<std::string, std::size_t>& lines) {
  try {
    config.Validate();
  } catch (const ConfigError& e) {
    auto it = lines.find(e.key());
    if (it == lines.end()) throw;
    const std::string what = e.what();
    const std::string prefix = e.key() + ": ";
    throw ConfigError(e.key(), it->second, what.substr(prefix.size()));
  }
}

}  // namespace

void RunConfig::Validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError(key, 0, why);
  };
  if (task.contexts < 1) fail("task.contexts", "must be >= 1");
  if (task.modes < 1) fail("task.modes", "must be >= 1");
  if (task.horizon < 1) fail("task.horizon", "must be >= 1");
  if (task.action_dim < 1) fail("task.action_dim", "must be >= 1");
  if (!(task.stddev >= 0.0)) fail("task.stddev", "must be >= 0");
  if (!(task.radius > 0.0)) fail("task.radius", "must be > 0");
  if (!(task.chirality_weight >= 0.0 && task.chirality_weight <= 1.0)) {
    fail("task.chirality_weight", "must lie in [0, 1]");
  }
  try {
    schedule.Validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    const std::string key = what.substr(0, colon);
    throw ConfigError(key, 0,
                      colon == std::string::npos ? what
                                                 : what.substr(colon + 2));
  }
  if (!(train.learning_rate > 0.0)) {
    fail("train.learning_rate", "must be > 0");
  }
  if (train.batch_size < 1) fail("train.batch_size", "must be >= 1");
  for (std::size_t w : train.hidden) {
    if (w < 1) fail("train.hidden", "widths must be >= 1");
  }
  if (eval.samples_per_context < 2) {
    fail("eval.samples_per_context", "must be >= 2");
  }
  if (!(eval.coverage_radius > 0.0)) {
    fail("eval.coverage_radius", "must be > 0");
  }
  for (std::size_t n : eval.fm_nfe) {
    if (n < 1) fail("eval.fm_nfe", "step counts must be >= 1");
  }
  if (eval.bench_repetitions < 30) {
    fail("eval.bench_repetitions", "must be >= 30");
  }
  if (eval.ablate_seeds < 1) fail("eval.ablate_seeds", "must be >= 1");
  for (const std::string& g : eval.sweep_grids) {
    if (g != "sigma2" && g != "gamma" && g != "lambda" && g != "loss") {
      fail("eval.sweep_grids", "unknown grid '" + g + "'");
    }
  }
  if (eval.sweep_workers < 1) fail("eval.sweep_workers", "must be >= 1");
  if (out.empty()) fail("run.out", "must not be empty");
}

RunConfig ParseConfig(const std::string& text) {
  RunConfig config;
  std::map<std::string, std::size_t> lines;
  std::istringstream in(text);
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string line = Trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, number, "expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (lines.count(key) > 0) throw ConfigError(key, number, "duplicate key");
    Assign(config, key, Trim(line.substr(eq + 1)), number);
    lines[key] = number;
  }
  ValidateWithLines(config, lines);
  return config;
}

void ApplyOverride(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(assignment, 0, "override must be key=value");
  }
  RunConfig next = config;
  Assign(next, Trim(assignment.substr(0, eq)),
         Trim(assignment.substr(eq + 1)), 0);
  next.Validate();
  config = std::move(next);
}

std::string SerializeConfig(const RunConfig& config) {
  std::string out;
  for (const Entry& e : Registry()) {
    out += e.key + " = " + e.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const Entry& e : Registry()) keys.push_back(e.key);
  return keys;
}

RunConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

}  // namespace c2f
