// Copyright 2026 The FleetOps Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cicd/staging.h"
#include "common/time.h"

namespace fleetops::cicd {

enum class ChangeKind { kRtl, kSoftware, kBoth };

struct Changeset {
  std::string id;
  std::string author;
  ChangeKind kind = ChangeKind::kBoth;
  std::vector<std::string> software_refs;
};

enum class Job { kRtlSim, kBitfileBuild, kSwBuild, kHwTest, kReleaseBuild };
inline constexpr int kJobCount = 5;
enum class Outcome { kPending, kPass, kFail };
enum class Pool { kHardenedEda, kHardwareTest };
enum class PipelineState { kSubmitted, kBuilding, kStaged, kHwTesting, kVoted, kApproved, kReleased, kFailed };

std::string_view JobName(Job j);
std::optional<Job> JobFromName(std::string_view name);
std::string_view OutcomeName(Outcome o);
std::string_view PoolName(Pool p);
std::string_view PipelineStateName(PipelineState s);
std::optional<ChangeKind> ChangeKindFromName(std::string_view name);
/// Executor pool a job is confined to.
Pool PoolOf(Job j);

struct JobStatus {
  bool required = false;
  bool queued = false;
  bool started = false;
  Outcome outcome = Outcome::kPending;
  std::string cause;
  Nanos start = -1;
  Nanos end = -1;
};

struct Pipeline {
  Changeset changeset;
  PipelineState state = PipelineState::kSubmitted;
  std::array<JobStatus, kJobCount> jobs;
  std::optional<int> vote;
  std::string report;
  bool approved = false;
  /// Bitfile under test: the pipeline's own build, or the stable one.
  std::string bitfile_id;
  std::string checksum;
  JobStatus &job(Job j) { return jobs[static_cast<int>(j)]; }
  const JobStatus &job(Job j) const { return jobs[static_cast<int>(j)]; }
};

struct PipelineLogRecord {
  Nanos t = 0;
  std::string pipeline;
  std::string transition;
  std::string job;
  std::string outcome;
  std::string detail;
  std::string system;
};

nlohmann::json ToJson(const PipelineLogRecord &r);
PipelineLogRecord PipelineLogRecordFromJson(const nlohmann::json &j);

struct PoolConfig {
  int eda_parallelism = 4;
  int hw_parallelism = 2;
};

/// Changeset-to-release state machine. Jobs are handed to the environment
/// through the start callback when a pool slot frees up; the environment
/// reports results back through CompleteJob.
class CiEngine {
 public:
  using StartJob = std::function<void(const std::string &pipeline, Job job, Nanos now)>;

  CiEngine(PoolConfig pools, StagingArea *staging, std::string stable_bitfile = "stable-0");

  void SetStartJob(StartJob f) { start_job_ = std::move(f); }
  using Observer = std::function<void(const PipelineLogRecord &)>;
  void SetObserver(Observer f) { observer_ = std::move(f); }

  const Pipeline &Submit(const Changeset &c, Nanos now);
  const Pipeline &CompleteJob(const std::string &pipeline, Job job, Outcome outcome, Nanos now,
                              std::string cause = {});
  const Pipeline &Approve(const std::string &pipeline, const std::string &approver, Nanos now);
  /// Logged when the hardware test actually begins on an allocated system.
  void MarkHwTestStart(const std::string &pipeline, const std::string &system, Nanos now);

  const Pipeline &pipeline(const std::string &id) const;
  const std::map<std::string, Pipeline> &pipelines() const { return pipelines_; }
  const std::vector<PipelineLogRecord> &log() const { return log_; }
  const std::string &stable_bitfile() const { return stable_bitfile_; }
  const std::string &stable_checksum() const { return stable_checksum_; }
  int busy(Pool p) const { return busy_[static_cast<int>(p)]; }
  int capacity(Pool p) const;

  /// Deterministic bitfile image for a build.
  static std::string BitfileImage(const std::string &bitfile_id, Nanos build_time);

 private:
  Pipeline &Get(const std::string &id);
  void Request(Pipeline &p, Job job, Nanos now);
  void Dispatch(Nanos now);
  void Start(Pipeline &p, Job job, Nanos now);
  void MaybeScheduleHwTest(Pipeline &p, Nanos now);
  void MaybeVote(Pipeline &p, Nanos now);
  void Log(Nanos t, const Pipeline &p, const char *transition, std::optional<Job> job = {},
           std::string outcome = {}, std::string detail = {});

  PoolConfig config_;
  StagingArea *staging_;
  std::string stable_bitfile_;
  std::string stable_checksum_;
  std::map<std::string, Pipeline> pipelines_;
  std::array<std::deque<std::pair<std::string, Job>>, 2> waiting_;
  std::array<int, 2> busy_{};
  std::vector<PipelineLogRecord> log_;
  StartJob start_job_;
  Observer observer_;
};

}  // namespace fleetops::cicd
