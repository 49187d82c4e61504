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

#include <stdexcept>
#include <string>
#include <string_view>

namespace fleetops {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kParseError,
  kDanglingReference,
  kNoPath,
  kUnknownFlow,
  kUnknownSystem,
  kUnknownAllocation,
  kSystemDrained,
  kNotActive,
  kNotDrained,
  kControllerDown,
  kSystemOccupied,
  kNoFreeSystem,
  kOutOfRetention,
  kInvalidRange,
  kInvalidConfig,
  kNonMonotonicSample,
  kDuplicateChangeset,
  kUnknownPipeline,
  kJobNotPending,
  kStagingMissing,
  kChecksumMismatch,
  kNotVotedPositive,
  kUnknownEntity,
  kOutOfWindow,
  kAlreadyApplied,
  kNotApplied,
  kBindFailure,
  kUnknownCheck,
};

std::string_view ErrorCodeName(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// one of the codes above; the C API maps them onto fo_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fleetops
