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

#include "cicd/staging.h"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "common/error.h"

namespace fleetops::cicd {

std::string Sha256Hex(const std::string &data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kIo, "sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string StagingArea::Write(StagingEntry meta, const std::string &content) {
  meta.checksum = Sha256Hex(content);
  auto it = entries_.find(meta.checksum);
  if (it != entries_.end()) return meta.checksum;  // identical content is already filed
  auto [pos, _] = entries_.emplace(meta.checksum, Stored{meta, content});
  Mirror(pos->second);
  return meta.checksum;
}

const StagingEntry &StagingArea::Read(const std::string &checksum) const {
  auto it = entries_.find(checksum);
  if (it == entries_.end()) throw Error(ErrorCode::kStagingMissing, checksum);
  if (Sha256Hex(it->second.content) != checksum) throw Error(ErrorCode::kChecksumMismatch, checksum);
  return it->second.meta;
}

void StagingArea::Corrupt(const std::string &checksum) {
  auto it = entries_.find(checksum);
  if (it == entries_.end()) throw Error(ErrorCode::kStagingMissing, checksum);
  std::string &c = it->second.content;
  if (c.empty()) c.push_back('\x01');
  else c[0] = static_cast<char>(c[0] ^ 0x5a);
  Mirror(it->second);
}

void StagingArea::Mirror(const Stored &s) const {
  if (root_.empty()) return;
  namespace fs = std::filesystem;
  fs::path dir = fs::path(root_) / s.meta.checksum;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
  std::ofstream(dir / "bitfile", std::ios::binary) << s.content;
  nlohmann::json meta = {{"bitfile_id", s.meta.bitfile_id},
                         {"changeset", s.meta.changeset},
                         {"toolchain", s.meta.toolchain},
                         {"build_time", s.meta.build_time},
                         {"checksum", s.meta.checksum}};
  std::ofstream(dir / "meta") << meta.dump(2) << "\n";
}

}  // namespace fleetops::cicd
