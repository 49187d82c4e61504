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

#include "common/error.h"

namespace fleetops {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDanglingReference: return "DanglingReference";
    case ErrorCode::kNoPath: return "NoPath";
    case ErrorCode::kUnknownFlow: return "UnknownFlow";
    case ErrorCode::kUnknownSystem: return "UnknownSystem";
    case ErrorCode::kUnknownAllocation: return "UnknownAllocation";
    case ErrorCode::kSystemDrained: return "SystemDrained";
    case ErrorCode::kNotActive: return "NotActive";
    case ErrorCode::kNotDrained: return "NotDrained";
    case ErrorCode::kControllerDown: return "ControllerDown";
    case ErrorCode::kSystemOccupied: return "SystemOccupied";
    case ErrorCode::kNoFreeSystem: return "NoFreeSystem";
    case ErrorCode::kOutOfRetention: return "OutOfRetention";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kNonMonotonicSample: return "NonMonotonicSample";
    case ErrorCode::kDuplicateChangeset: return "DuplicateChangeset";
    case ErrorCode::kUnknownPipeline: return "UnknownPipeline";
    case ErrorCode::kJobNotPending: return "JobNotPending";
    case ErrorCode::kStagingMissing: return "StagingMissing";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kNotVotedPositive: return "NotVotedPositive";
    case ErrorCode::kUnknownEntity: return "UnknownEntity";
    case ErrorCode::kOutOfWindow: return "OutOfWindow";
    case ErrorCode::kAlreadyApplied: return "AlreadyApplied";
    case ErrorCode::kNotApplied: return "NotApplied";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kUnknownCheck: return "UnknownCheck";
  }
  return "Unknown";
}

}  // namespace fleetops
