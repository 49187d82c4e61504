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

#include <map>
#include <optional>
#include <string>

#include "common/time.h"

namespace fleetops::cicd {

std::string Sha256Hex(const std::string &data);

struct StagingEntry {
  std::string bitfile_id;
  std::string changeset;
  std::string toolchain = "eda-2026.1";
  Nanos build_time = 0;
  std::string checksum;
};

/// Content-addressed store for built bitfiles. Entries are immutable once
/// written; reads re-hash the content. With a root directory set, entries
/// are mirrored to `<root>/<checksum>/{bitfile,meta}`.
class StagingArea {
 public:
  explicit StagingArea(std::string root = {}) : root_(std::move(root)) {}

  /// Returns the checksum the entry is filed under.
  std::string Write(StagingEntry meta, const std::string &content);
  /// Throws StagingMissing or ChecksumMismatch.
  const StagingEntry &Read(const std::string &checksum) const;
  bool Contains(const std::string &checksum) const { return entries_.count(checksum) != 0; }
  /// Flips stored bytes without touching the recorded checksum.
  void Corrupt(const std::string &checksum);
  std::size_t size() const { return entries_.size(); }

 private:
  struct Stored {
    StagingEntry meta;
    std::string content;
  };
  void Mirror(const Stored &s) const;

  std::string root_;
  std::map<std::string, Stored> entries_;
};

}  // namespace fleetops::cicd
