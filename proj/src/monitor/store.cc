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

#include "monitor/store.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "common/error.h"

namespace fleetops::monitor {
namespace {

constexpr std::size_t kChunkPoints = 4096;
constexpr char kMagic[8] = {'F', 'O', 'S', 'T', 'O', 'R', 'E', '1'};
constexpr std::uint32_t kFormatVersion = 1;

Nanos FloorTo(Nanos t, Nanos res) {
  Nanos q = t / res;
  if (t % res != 0 && t < 0) --q;
  return q * res;
}

struct Acc {
  std::uint64_t count = 0;
  double min = 0;
  double max = 0;
  ExactSum sum;

  void Add(double v) {
    if (count == 0 || v < min) min = v;
    if (count == 0 || v > max) max = v;
    ++count;
    sum.Add(v);
  }
  void Merge(std::uint64_t n, double lo, double hi, const ExactSum &s) {
    if (count == 0 || lo < min) min = lo;
    if (count == 0 || hi > max) max = hi;
    count += n;
    sum.Merge(s);
  }
};

class Writer {
 public:
  explicit Writer(const std::string &path) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path);
  }
  template <typename T>
  void Put(const T &v) {
    out_.write(reinterpret_cast<const char *>(&v), sizeof(v));
  }
  void PutString(const std::string &s) {
    Put<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void PutDoubles(const std::vector<double> &v) {
    Put<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char *>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void Finish(const std::string &path) {
    out_.flush();
    if (!out_) throw Error(ErrorCode::kIo, "write failed: " + path);
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string &path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error(ErrorCode::kIo, "cannot read " + path);
  }
  template <typename T>
  T Get() {
    T v{};
    in_.read(reinterpret_cast<char *>(&v), sizeof(v));
    if (!in_) Corrupt();
    return v;
  }
  std::string GetString() {
    auto n = Get<std::uint64_t>();
    if (n > (1u << 20)) Corrupt();
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) Corrupt();
    return s;
  }
  std::vector<double> GetDoubles() {
    auto n = Get<std::uint64_t>();
    if (n > (1u << 28)) Corrupt();
    std::vector<double> v(n);
    in_.read(reinterpret_cast<char *>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) Corrupt();
    return v;
  }
  [[noreturn]] void Corrupt() { throw Error(ErrorCode::kParseError, "corrupt store file " + path_); }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

std::vector<RetentionTier> DefaultTiers() { return {{kSecond, 90 * kDay}, {kMinute, 400 * kDay}}; }

Store::Store(std::vector<RetentionTier> tiers) : tiers_(std::move(tiers)) {
  if (tiers_.empty()) throw Error(ErrorCode::kInvalidConfig, "at least one retention tier required");
  if (tiers_[0].horizon < kMinFinestHorizon)
    throw Error(ErrorCode::kInvalidConfig, "finest retention horizon must be at least 90 days");
  for (std::size_t i = 0; i < tiers_.size(); ++i) {
    if (tiers_[i].resolution <= 0) throw Error(ErrorCode::kInvalidConfig, "tier resolution must be positive");
    if (i == 0) continue;
    if (tiers_[i].resolution <= tiers_[i - 1].resolution || tiers_[i].horizon <= tiers_[i - 1].horizon)
      throw Error(ErrorCode::kInvalidConfig, "tiers must increase in resolution and horizon");
    if (tiers_[i].resolution % tiers_[i - 1].resolution != 0)
      throw Error(ErrorCode::kInvalidConfig, "tier resolution must be a multiple of the previous tier");
  }
}

SeriesId Store::Series(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  SeriesId id = static_cast<SeriesId>(series_.size());
  SeriesData d;
  d.name = std::string(name);
  d.tiers.resize(tiers_.size() - 1);
  series_.push_back(std::move(d));
  index_.emplace(std::string(name), id);
  return id;
}

std::optional<SeriesId> Store::FindSeries(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Store::SeriesNames(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const auto &s : series_)
    if (s.name.compare(0, prefix.size(), prefix) == 0) out.push_back(s.name);
  std::sort(out.begin(), out.end());
  return out;
}

void Store::Ingest(SeriesId id, Nanos t, double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::kInvalidArgument, "non-finite sample");
  SeriesData &s = series_.at(id);
  if (s.last_t && t < *s.last_t)
    throw Error(ErrorCode::kNonMonotonicSample, s.name + " at " + std::to_string(t));
  s.last_t = t;
  clock_ = std::max(clock_, t);
  ++s.raw_points;
  if (!s.raw.empty()) {
    Chunk &c = s.raw.back();
    const std::size_t n = c.values.size();
    if (n < kChunkPoints) {
      if (n == 1) {
        c.step = t - c.t0;
        c.values.push_back(value);
        return;
      }
      if (c.time(n) == t) {
        c.values.push_back(value);
        return;
      }
    }
  }
  s.raw.push_back(Chunk{t, 0, {value}});
}

std::vector<Aggregate> Store::Query(SeriesId id, Nanos t0, Nanos t1, Nanos resolution) const {
  if (resolution <= 0) throw Error(ErrorCode::kInvalidArgument, "resolution must be positive");
  if (t1 <= t0) throw Error(ErrorCode::kInvalidRange, "empty query range");
  if (t1 <= clock_ - tiers_.back().horizon) throw Error(ErrorCode::kOutOfRetention, "range older than all tiers");
  const SeriesData &s = series_.at(id);
  std::map<Nanos, Acc> out;
  for (std::size_t k = s.tiers.size(); k-- > 0;) {
    const auto &tier = s.tiers[k];
    auto it = std::lower_bound(tier.begin(), tier.end(), t0, [](const Bucket &b, Nanos t) { return b.t < t; });
    if (it != tier.end() && it->t < t1 && resolution % tiers_[k + 1].resolution != 0)
      throw Error(ErrorCode::kInvalidArgument, "resolution finer than the retained tier");
    for (; it != tier.end() && it->t < t1; ++it) out[FloorTo(it->t, resolution)].Merge(it->count, it->min, it->max, it->sum);
  }
  auto ci = std::lower_bound(s.raw.begin(), s.raw.end(), t0,
                             [](const Chunk &c, Nanos t) { return c.time(c.values.size() - 1) < t; });
  Acc *cur = nullptr;
  Nanos cur_key = 0;
  for (; ci != s.raw.end() && ci->t0 < t1; ++ci) {
    for (std::size_t i = 0; i < ci->values.size(); ++i) {
      const Nanos t = ci->time(i);
      if (t < t0) continue;
      if (t >= t1) break;
      const Nanos key = FloorTo(t, resolution);
      if (!cur || key != cur_key) {
        cur = &out[key];
        cur_key = key;
      }
      cur->Add(ci->values[i]);
    }
  }
  std::vector<Aggregate> result;
  result.reserve(out.size());
  for (const auto &[t, a] : out) {
    Aggregate g;
    g.t = t;
    g.count = a.count;
    g.min = a.min;
    g.max = a.max;
    g.sum = a.sum.value();
    g.mean = g.sum / static_cast<double>(a.count);
    result.push_back(g);
  }
  return result;
}

std::vector<std::pair<Nanos, double>> Store::Raw(SeriesId id, Nanos t0, Nanos t1) const {
  const SeriesData &s = series_.at(id);
  std::vector<std::pair<Nanos, double>> out;
  auto ci = std::lower_bound(s.raw.begin(), s.raw.end(), t0,
                             [](const Chunk &c, Nanos t) { return c.time(c.values.size() - 1) < t; });
  for (; ci != s.raw.end() && ci->t0 < t1; ++ci)
    for (std::size_t i = 0; i < ci->values.size(); ++i) {
      const Nanos t = ci->time(i);
      if (t >= t0 && t < t1) out.emplace_back(t, ci->values[i]);
    }
  return out;
}

std::optional<std::pair<Nanos, double>> Store::Last(SeriesId id) const {
  const SeriesData &s = series_.at(id);
  if (s.raw.empty()) return std::nullopt;
  const Chunk &c = s.raw.back();
  return std::make_pair(c.time(c.values.size() - 1), c.values.back());
}

void Store::Fold(std::deque<Bucket> &dst, Nanos resolution, const Bucket &b) {
  const Nanos key = FloorTo(b.t, resolution);
  if (dst.empty() || dst.back().t != key) {
    Bucket nb{key, b.count, b.min, b.max, b.sum};
    dst.push_back(std::move(nb));
    return;
  }
  Bucket &d = dst.back();
  d.count += b.count;
  d.min = std::min(d.min, b.min);
  d.max = std::max(d.max, b.max);
  d.sum.Merge(b.sum);
}

RetentionCounts Store::EnforceRetention(Nanos now) {
  clock_ = std::max(clock_, now);
  RetentionCounts counts;
  const std::size_t nt = tiers_.size();
  for (auto &s : series_) {
    // Raw tier.
    const Nanos raw_cutoff = now - tiers_[0].horizon;
    while (!s.raw.empty() && s.raw.front().t0 < raw_cutoff) {
      Chunk &c = s.raw.front();
      std::size_t n = 0;
      while (n < c.values.size() && c.time(n) < raw_cutoff) {
        if (nt > 1) {
          Bucket b{c.time(n), 1, c.values[n], c.values[n], {}};
          b.sum.Add(c.values[n]);
          Fold(s.tiers[0], tiers_[1].resolution, b);
          ++counts.downsampled;
        } else {
          ++counts.expired;
        }
        ++n;
      }
      s.raw_points -= n;
      if (n == c.values.size()) {
        s.raw.pop_front();
      } else {
        c.t0 = c.time(n);
        c.values.erase(c.values.begin(), c.values.begin() + static_cast<std::ptrdiff_t>(n));
        if (c.values.size() == 1) c.step = 0;
        break;
      }
    }
    // Aggregate tiers.
    for (std::size_t k = 1; k < nt; ++k) {
      auto &tier = s.tiers[k - 1];
      const Nanos cutoff = now - tiers_[k].horizon;
      while (!tier.empty() && tier.front().t + tiers_[k].resolution <= cutoff) {
        if (k + 1 < nt) {
          Fold(s.tiers[k], tiers_[k + 1].resolution, tier.front());
          ++counts.downsampled;
        } else {
          ++counts.expired;
        }
        tier.pop_front();
      }
    }
  }
  return counts;
}

std::uint64_t Store::raw_count(SeriesId id) const { return series_.at(id).raw_points; }

std::uint64_t Store::bucket_count(SeriesId id, std::size_t tier) const {
  if (tier == 0 || tier >= tiers_.size()) throw Error(ErrorCode::kInvalidArgument, "not an aggregate tier");
  return series_.at(id).tiers[tier - 1].size();
}

void Store::Save(const std::string &path) const {
  Writer w(path);
  for (char c : kMagic) w.Put(c);
  w.Put(kFormatVersion);
  w.Put<std::uint64_t>(tiers_.size());
  for (const auto &t : tiers_) {
    w.Put(t.resolution);
    w.Put(t.horizon);
  }
  w.Put(clock_);
  w.Put<std::uint64_t>(series_.size());
  for (const auto &s : series_) {
    w.PutString(s.name);
    w.Put<std::uint8_t>(s.last_t.has_value());
    w.Put(s.last_t.value_or(0));
    w.Put<std::uint64_t>(s.raw.size());
    for (const auto &c : s.raw) {
      w.Put(c.t0);
      w.Put(c.step);
      w.PutDoubles(c.values);
    }
    for (const auto &tier : s.tiers) {
      w.Put<std::uint64_t>(tier.size());
      for (const auto &b : tier) {
        w.Put(b.t);
        w.Put(b.count);
        w.Put(b.min);
        w.Put(b.max);
        w.PutDoubles(b.sum.partials());
      }
    }
  }
  w.Finish(path);
}

Store Store::Load(const std::string &path) {
  Reader r(path);
  for (char c : kMagic)
    if (r.Get<char>() != c) throw Error(ErrorCode::kParseError, path + " is not a store file");
  if (r.Get<std::uint32_t>() != kFormatVersion) throw Error(ErrorCode::kParseError, "unsupported store version");
  std::vector<RetentionTier> tiers(r.Get<std::uint64_t>());
  if (tiers.size() > 16) r.Corrupt();
  for (auto &t : tiers) {
    t.resolution = r.Get<Nanos>();
    t.horizon = r.Get<Nanos>();
  }
  Store st(tiers);
  st.clock_ = r.Get<Nanos>();
  auto n = r.Get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    SeriesData &s = st.series_[st.Series(r.GetString())];
    bool has_last = r.Get<std::uint8_t>();
    Nanos last = r.Get<Nanos>();
    if (has_last) s.last_t = last;
    auto chunks = r.Get<std::uint64_t>();
    for (std::uint64_t c = 0; c < chunks; ++c) {
      Chunk ch;
      ch.t0 = r.Get<Nanos>();
      ch.step = r.Get<Nanos>();
      ch.values = r.GetDoubles();
      if (ch.values.empty()) r.Corrupt();
      s.raw_points += ch.values.size();
      s.raw.push_back(std::move(ch));
    }
    for (auto &tier : s.tiers) {
      auto nb = r.Get<std::uint64_t>();
      for (std::uint64_t b = 0; b < nb; ++b) {
        Bucket bk{};
        bk.t = r.Get<Nanos>();
        bk.count = r.Get<std::uint64_t>();
        bk.min = r.Get<double>();
        bk.max = r.Get<double>();
        bk.sum.set_partials(r.GetDoubles());
        tier.push_back(std::move(bk));
      }
    }
  }
  return st;
}

}  // namespace fleetops::monitor
