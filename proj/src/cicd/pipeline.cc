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

#include "cicd/pipeline.h"

#include "common/error.h"

namespace fleetops::cicd {

std::string_view JobName(Job j) {
  switch (j) {
    case Job::kRtlSim: return "rtl_sim";
    case Job::kBitfileBuild: return "bitfile_build";
    case Job::kSwBuild: return "sw_build";
    case Job::kHwTest: return "hw_test";
    case Job::kReleaseBuild: return "release_build";
  }
  return "?";
}

std::optional<Job> JobFromName(std::string_view name) {
  for (int i = 0; i < kJobCount; ++i)
    if (JobName(static_cast<Job>(i)) == name) return static_cast<Job>(i);
  return std::nullopt;
}

std::string_view OutcomeName(Outcome o) {
  switch (o) {
    case Outcome::kPending: return "Pending";
    case Outcome::kPass: return "Pass";
    case Outcome::kFail: return "Fail";
  }
  return "?";
}

std::string_view PoolName(Pool p) { return p == Pool::kHardenedEda ? "HardenedEda" : "HardwareTest"; }

std::string_view PipelineStateName(PipelineState s) {
  switch (s) {
    case PipelineState::kSubmitted: return "Submitted";
    case PipelineState::kBuilding: return "Building";
    case PipelineState::kStaged: return "Staged";
    case PipelineState::kHwTesting: return "HwTesting";
    case PipelineState::kVoted: return "Voted";
    case PipelineState::kApproved: return "Approved";
    case PipelineState::kReleased: return "Released";
    case PipelineState::kFailed: return "Failed";
  }
  return "?";
}

std::optional<ChangeKind> ChangeKindFromName(std::string_view name) {
  if (name == "RtlChange") return ChangeKind::kRtl;
  if (name == "SoftwareChange") return ChangeKind::kSoftware;
  if (name == "Both") return ChangeKind::kBoth;
  return std::nullopt;
}

Pool PoolOf(Job j) {
  switch (j) {
    case Job::kRtlSim:
    case Job::kBitfileBuild:
    case Job::kReleaseBuild: return Pool::kHardenedEda;
    case Job::kSwBuild:
    case Job::kHwTest: return Pool::kHardwareTest;
  }
  return Pool::kHardenedEda;
}

nlohmann::json ToJson(const PipelineLogRecord &r) {
  nlohmann::json j = {{"t", r.t}, {"pipeline", r.pipeline}, {"transition", r.transition}, {"job", r.job},
                      {"outcome", r.outcome}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  if (!r.system.empty()) j["system"] = r.system;
  return j;
}

PipelineLogRecord PipelineLogRecordFromJson(const nlohmann::json &j) {
  try {
    PipelineLogRecord r;
    r.t = j.at("t").get<Nanos>();
    r.pipeline = j.at("pipeline").get<std::string>();
    r.transition = j.at("transition").get<std::string>();
    r.job = j.value("job", "");
    r.outcome = j.value("outcome", "");
    r.detail = j.value("detail", "");
    r.system = j.value("system", "");
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kParseError, std::string("pipeline log record: ") + e.what());
  }
}

std::string CiEngine::BitfileImage(const std::string &bitfile_id, Nanos build_time) {
  std::string img = "BITFILE\n" + bitfile_id + "\n" + std::to_string(build_time) + "\n";
  // Pad to a plausible configuration-image size pattern.
  while (img.size() < 4096) img += bitfile_id;
  return img;
}

CiEngine::CiEngine(PoolConfig pools, StagingArea *staging, std::string stable_bitfile)
    : config_(pools), staging_(staging), stable_bitfile_(std::move(stable_bitfile)) {
  if (!staging_) throw Error(ErrorCode::kInvalidArgument, "staging area required");
  if (config_.eda_parallelism <= 0 || config_.hw_parallelism <= 0)
    throw Error(ErrorCode::kInvalidConfig, "pool parallelism must be positive");
  StagingEntry e;
  e.bitfile_id = stable_bitfile_;
  e.changeset = "initial";
  stable_checksum_ = staging_->Write(e, BitfileImage(stable_bitfile_, 0));
}

int CiEngine::capacity(Pool p) const {
  return p == Pool::kHardenedEda ? config_.eda_parallelism : config_.hw_parallelism;
}

Pipeline &CiEngine::Get(const std::string &id) {
  auto it = pipelines_.find(id);
  if (it == pipelines_.end()) throw Error(ErrorCode::kUnknownPipeline, id);
  return it->second;
}

const Pipeline &CiEngine::pipeline(const std::string &id) const {
  auto it = pipelines_.find(id);
  if (it == pipelines_.end()) throw Error(ErrorCode::kUnknownPipeline, id);
  return it->second;
}

const Pipeline &CiEngine::Submit(const Changeset &c, Nanos now) {
  if (c.id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty changeset id");
  if (pipelines_.count(c.id)) throw Error(ErrorCode::kDuplicateChangeset, c.id);
  Pipeline &p = pipelines_[c.id];
  p.changeset = c;
  const bool rtl = c.kind != ChangeKind::kSoftware;
  p.job(Job::kRtlSim).required = rtl;
  p.job(Job::kBitfileBuild).required = rtl;
  p.job(Job::kSwBuild).required = true;
  p.job(Job::kHwTest).required = true;
  if (rtl) {
    p.bitfile_id = "bf-" + c.id;
  } else {
    p.bitfile_id = stable_bitfile_;
    p.checksum = stable_checksum_;
  }
  Log(now, p, "submitted");
  p.state = PipelineState::kBuilding;
  if (rtl) {
    Request(p, Job::kRtlSim, now);
    Request(p, Job::kBitfileBuild, now);
  }
  Request(p, Job::kSwBuild, now);
  Dispatch(now);
  return p;
}

void CiEngine::Request(Pipeline &p, Job job, Nanos now) {
  p.job(job).queued = true;
  waiting_[static_cast<int>(PoolOf(job))].emplace_back(p.changeset.id, job);
  Log(now, p, "job_queued", job, {}, std::string(PoolName(PoolOf(job))));
}

void CiEngine::Dispatch(Nanos now) {
  for (int pool = 0; pool < 2; ++pool) {
    auto &q = waiting_[pool];
    while (!q.empty() && busy_[pool] < capacity(static_cast<Pool>(pool))) {
      auto [id, job] = q.front();
      q.pop_front();
      Start(Get(id), job, now);
    }
  }
}

void CiEngine::Start(Pipeline &p, Job job, Nanos now) {
  ++busy_[static_cast<int>(PoolOf(job))];
  JobStatus &s = p.job(job);
  s.started = true;
  s.start = now;
  Log(now, p, "job_start", job, {}, std::string(PoolName(PoolOf(job))));
  if (start_job_) start_job_(p.changeset.id, job, now);
}

const Pipeline &CiEngine::CompleteJob(const std::string &id, Job job, Outcome outcome, Nanos now,
                                      std::string cause) {
  Pipeline &p = Get(id);
  JobStatus &s = p.job(job);
  if (!s.started || s.outcome != Outcome::kPending || outcome == Outcome::kPending)
    throw Error(ErrorCode::kJobNotPending, id + "/" + std::string(JobName(job)));
  s.outcome = outcome;
  s.end = now;
  s.cause = cause;
  --busy_[static_cast<int>(PoolOf(job))];
  Log(now, p, "job_done", job, std::string(OutcomeName(outcome)), cause);

  if (job == Job::kReleaseBuild) {
    if (outcome == Outcome::kPass) {
      p.state = PipelineState::kReleased;
      if (p.job(Job::kBitfileBuild).required) {
        stable_bitfile_ = p.bitfile_id;
        stable_checksum_ = p.checksum;
      }
      Log(now, p, "released", {}, {}, p.bitfile_id);
    } else {
      p.state = PipelineState::kFailed;
      Log(now, p, "release_failed");
    }
  } else {
    if (job == Job::kBitfileBuild && outcome == Outcome::kPass) {
      StagingEntry e;
      e.bitfile_id = p.bitfile_id;
      e.changeset = p.changeset.id;
      e.build_time = now;
      p.checksum = staging_->Write(e, BitfileImage(p.bitfile_id, now));
      p.state = PipelineState::kStaged;
      Log(now, p, "staged", {}, {}, p.checksum);
    }
    MaybeScheduleHwTest(p, now);
    MaybeVote(p, now);
  }
  Dispatch(now);
  return p;
}

void CiEngine::MaybeScheduleHwTest(Pipeline &p, Nanos now) {
  JobStatus &hw = p.job(Job::kHwTest);
  if (hw.queued) return;
  if (p.job(Job::kSwBuild).outcome != Outcome::kPass) return;
  if (p.job(Job::kBitfileBuild).required && p.job(Job::kBitfileBuild).outcome != Outcome::kPass) return;
  p.state = PipelineState::kHwTesting;
  Request(p, Job::kHwTest, now);
}

void CiEngine::MaybeVote(Pipeline &p, Nanos now) {
  if (p.vote) return;
  const bool hw_blocked = p.job(Job::kSwBuild).outcome == Outcome::kFail ||
                          p.job(Job::kBitfileBuild).outcome == Outcome::kFail;
  bool all_pass = true;
  for (Job j : {Job::kRtlSim, Job::kBitfileBuild, Job::kSwBuild, Job::kHwTest}) {
    const JobStatus &s = p.job(j);
    if (!s.required) continue;
    if (s.outcome == Outcome::kPending) {
      if (j == Job::kHwTest && hw_blocked && !s.queued) {
        all_pass = false;
        continue;
      }
      return;  // evidence still outstanding
    }
    if (s.outcome != Outcome::kPass) all_pass = false;
  }
  p.vote = all_pass ? 1 : -1;
  p.state = PipelineState::kVoted;
  p.report.clear();
  for (Job j : {Job::kRtlSim, Job::kBitfileBuild, Job::kSwBuild, Job::kHwTest}) {
    const JobStatus &s = p.job(j);
    if (!s.required) continue;
    if (!p.report.empty()) p.report += ", ";
    p.report += std::string(JobName(j)) + "=" +
                (s.outcome == Outcome::kPending ? std::string("NotRun") : std::string(OutcomeName(s.outcome)));
    if (!s.cause.empty()) p.report += "(" + s.cause + ")";
  }
  Log(now, p, "voted", {}, all_pass ? "+1" : "-1", p.report);
}

const Pipeline &CiEngine::Approve(const std::string &id, const std::string &approver, Nanos now) {
  Pipeline &p = Get(id);
  if (p.state != PipelineState::kVoted || p.vote != 1) {
    Log(now, p, "approve_rejected", {}, {}, approver);
    throw Error(ErrorCode::kNotVotedPositive, id + " is " + std::string(PipelineStateName(p.state)));
  }
  p.approved = true;
  p.state = PipelineState::kApproved;
  Log(now, p, "approved", {}, {}, approver);
  Request(p, Job::kReleaseBuild, now);
  Dispatch(now);
  return p;
}

void CiEngine::MarkHwTestStart(const std::string &id, const std::string &system, Nanos now) {
  Pipeline &p = Get(id);
  PipelineLogRecord r{now, id, "hw_test_start", "hw_test", "", p.checksum, system};
  log_.push_back(r);
  if (observer_) observer_(r);
}

void CiEngine::Log(Nanos t, const Pipeline &p, const char *transition, std::optional<Job> job, std::string outcome,
                   std::string detail) {
  PipelineLogRecord r{t, p.changeset.id, transition, job ? std::string(JobName(*job)) : std::string(),
                      std::move(outcome), std::move(detail), {}};
  log_.push_back(r);
  if (observer_) observer_(r);
}

}  // namespace fleetops::cicd
