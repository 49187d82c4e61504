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

#include <gtest/gtest.h>

#include <random>

#include "allocman/allocman.h"
#include "common/error.h"

namespace fleetops::allocman {
namespace {

using topology::Vlan;

std::shared_ptr<const Topology> Fleet() {
  static auto topo = std::make_shared<const Topology>(Topology::Load(topology::DefaultFleetDocument()));
  return topo;
}

AllocationRequest Req(std::string selector = kAnyProductive, std::string user = "alice", std::string node = "node01") {
  return {std::move(user), std::move(node), std::move(selector), kHour};
}

TEST(Submit, AnyProductiveTakesLowestFreeSystem) {
  AllocManager m(Fleet());
  Allocation a = m.Submit(Req(), 0);
  EXPECT_EQ(a.state, AllocState::kActive);
  EXPECT_EQ(Fleet()->systems()[*a.system].id, "sys01");
  Allocation b = m.Submit(Req(), 1);
  EXPECT_EQ(Fleet()->systems()[*b.system].id, "sys02");
}

TEST(Submit, AnyProductiveNeverPicksNonProductive) {
  AllocManager m(Fleet());
  for (int i = 0; i < 13; ++i) EXPECT_EQ(m.Submit(Req(), i).state, AllocState::kActive);
  Allocation q = m.Submit(Req(), 20);
  EXPECT_EQ(q.state, AllocState::kQueued);
  EXPECT_EQ(m.state(*Fleet()->FindSystem("sys14")), SystemState::kFree);
  // Named requests can still reach non-productive systems.
  EXPECT_EQ(m.Submit(Req("sys14"), 21).state, AllocState::kActive);
}

TEST(Submit, AllAllocatedQueues) {
  AllocManager m(Fleet());
  for (const auto &s : Fleet()->systems()) m.Submit(Req(s.id), 0);
  EXPECT_EQ(m.Submit(Req("sys03"), 1).state, AllocState::kQueued);
  EXPECT_EQ(m.queue().size(), 1u);
}

TEST(Submit, Errors) {
  AllocManager m(Fleet());
  m.Drain("sys02", 0);
  try {
    m.Submit(Req("sys02"), 1);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kSystemDrained);
  }
  try {
    m.Submit(Req("sys99"), 1);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownSystem);
  }
  AllocationRequest zero = Req();
  zero.walltime = 0;
  EXPECT_THROW(m.Submit(zero, 1), Error);
  EXPECT_THROW(m.Submit(Req(kAnyProductive, "bob", "sys01.fpga0"), 1), Error);
}

TEST(Release, EmptyQueueFreesSystemAndClosesPair) {
  AllocManager m(Fleet());
  Allocation a = m.Submit(Req(), 0);
  EXPECT_EQ(m.rules().allow.size(), 1u);
  Allocation r = m.Release(a.id, 10);
  EXPECT_EQ(r.state, AllocState::kCompleted);
  EXPECT_EQ(m.state(*a.system), SystemState::kFree);
  EXPECT_TRUE(m.rules().allow.empty());
}

TEST(Release, PromotesQueuedInSameStep) {
  AllocManager m(Fleet());
  Allocation a = m.Submit(Req("sys05"), 0);
  Allocation q = m.Submit(Req("sys05", "bob", "node02"), 1);
  ASSERT_EQ(q.state, AllocState::kQueued);
  std::uint64_t gen = m.rules().generation;
  m.Release(a.id, 5);
  const Allocation &p = m.allocation(q.id);
  EXPECT_EQ(p.state, AllocState::kActive);
  EXPECT_EQ(p.t_start, 5);
  EXPECT_EQ(m.rules().generation, gen + 1);
  EXPECT_EQ(m.rules().allow, (std::set<std::pair<std::string, std::string>>{{"node02", "sys05"}}));
}

TEST(Release, DoubleReleaseIsNotActive) {
  AllocManager m(Fleet());
  Allocation a = m.Submit(Req(), 0);
  m.Release(a.id, 1);
  try {
    m.Release(a.id, 2);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotActive);
  }
}

TEST(Expire, NoOpAfterRelease) {
  AllocManager m(Fleet());
  Allocation a = m.Submit(Req(), 0);
  m.Release(a.id, 1);
  EXPECT_FALSE(m.Expire(a.id, kHour));
  Allocation b = m.Submit(Req(), 2);
  auto e = m.Expire(b.id, kHour + 2);
  ASSERT_TRUE(e);
  EXPECT_EQ(m.log().back().op, "expire");
}

TEST(DeriveFirewall, Cardinality) {
  const Topology &t = *Fleet();
  EXPECT_TRUE(DeriveFirewall(t, {}, 1).allow.empty());
  std::vector<Allocation> as;
  for (int i = 0; i < 3; ++i) {
    Allocation a;
    a.node = "node0" + std::to_string(i + 1);
    a.system = i;
    a.state = AllocState::kActive;
    as.push_back(a);
  }
  EXPECT_EQ(DeriveFirewall(t, as, 2).allow.size(), 3u);
  as[2].state = AllocState::kCompleted;
  EXPECT_EQ(DeriveFirewall(t, as, 3).allow.size(), 2u);
}

TEST(DeriveFirewall, SameUserTwoSystems) {
  AllocManager m(Fleet());
  m.Submit(Req(), 0);
  m.Submit(Req(), 0);
  EXPECT_EQ(m.rules().allow,
            (std::set<std::pair<std::string, std::string>>{{"node01", "sys01"}, {"node01", "sys02"}}));
}

TEST(Permit, Cases) {
  auto t = Fleet();
  AllocManager m(t, {"monitor"});
  auto n = [&](const char *id) { return t->NodeByName(id); };
  netsim::FrameHeader to_fpga{n("node01"), n("sys01.fpga0"), Vlan::kExperimentData, 1500};
  EXPECT_FALSE(m.Permit(to_fpga));
  EXPECT_TRUE(m.Permit({n("monitor"), n("sys07.ctrl"), Vlan::kSystemMgmt, 64}));
  m.Submit(Req(), 0);
  EXPECT_TRUE(m.Permit(to_fpga));
  EXPECT_TRUE(m.Permit({n("sys01.fpga1"), n("node01"), Vlan::kExperimentData, 1500}));
  EXPECT_FALSE(m.Permit({n("node02"), n("sys01.fpga0"), Vlan::kExperimentData, 1500}));
  EXPECT_FALSE(m.Permit({n("node01"), n("sys02.fpga0"), Vlan::kExperimentData, 1500}));
  EXPECT_TRUE(m.Permit({n("monitor"), n("sys09.fpga1"), Vlan::kExperimentData, 64}));
  // Endpoint-to-endpoint across systems is never a pair.
  EXPECT_FALSE(m.Permit({n("sys01.fpga0"), n("sys02.fpga0"), Vlan::kExperimentData, 64}));
}

TEST(Drain, FreeSystemDrainsImmediately) {
  AllocManager m(Fleet());
  EXPECT_EQ(m.Drain("sys01", 0), SystemState::kDrained);
  EXPECT_EQ(Fleet()->systems()[*m.Submit(Req(), 1).system].id, "sys02");
  EXPECT_EQ(m.Undrain("sys01", 2), SystemState::kFree);
  EXPECT_EQ(Fleet()->systems()[*m.Submit(Req(), 3).system].id, "sys01");
}

TEST(Drain, AllocatedDrainsAtReleaseWithNoAllocationInBetween) {
  AllocManager m(Fleet());
  for (int i = 0; i < 13; ++i) m.Submit(Req(), 0);
  SystemIndex s3 = *Fleet()->FindSystem("sys03");
  AllocId on3 = *m.active_on(s3);
  EXPECT_EQ(m.Drain("sys03", 5), SystemState::kAllocated);
  Allocation q = m.Submit(Req(), 6);
  ASSERT_EQ(q.state, AllocState::kQueued);
  m.Release(on3, 10);
  EXPECT_EQ(m.state(s3), SystemState::kDrained);
  EXPECT_EQ(m.allocation(q.id).state, AllocState::kQueued);
  // Replay: after drain_pending, no activate on sys03.
  bool pending = false;
  for (const auto &r : m.log()) {
    if (r.op == "drain_pending" && r.system == "sys03") pending = true;
    if (pending) EXPECT_FALSE(r.op == "activate" && r.system == "sys03");
  }
  try {
    m.Undrain("sys04", 11);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotDrained);
  }
  m.Undrain("sys03", 12);
  EXPECT_EQ(m.allocation(q.id).state, AllocState::kActive);
  EXPECT_EQ(*m.allocation(q.id).system, s3);
}

TEST(Cancel, RemovesQueued) {
  AllocManager m(Fleet());
  Allocation a = m.Submit(Req("sys01"), 0);
  Allocation q = m.Submit(Req("sys01"), 1);
  EXPECT_EQ(m.Cancel(q.id, 2).state, AllocState::kCancelled);
  EXPECT_TRUE(m.queue().empty());
  EXPECT_THROW(m.Cancel(a.id, 3), Error);
}

TEST(Properties, ExclusivityAndGenerationOverRandomSequences) {
  auto t = Fleet();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    AllocManager m(t);
    std::uint64_t last_gen = 0;
    std::vector<AllocId> ids;
    for (int step = 0; step < 500; ++step) {
      Nanos now = step * kSecond;
      int op = rng() % 10;
      try {
        if (op < 5) {
          std::string sel = rng() % 3 ? std::string(kAnyProductive) : t->systems()[rng() % 16].id;
          ids.push_back(m.Submit(Req(sel, "u" + std::to_string(rng() % 5), "node0" + std::to_string(1 + rng() % 9)),
                                 now)
                            .id);
        } else if (op < 8 && !ids.empty()) {
          m.Release(ids[rng() % ids.size()], now);
        } else if (op == 8) {
          m.Drain(t->systems()[rng() % 16].id, now);
        } else {
          m.Undrain(t->systems()[rng() % 16].id, now);
        }
      } catch (const Error &) {
      }
      // At most one Active allocation per system, consistent with states.
      std::vector<int> active(16, 0);
      for (const auto &[id, a] : m.allocations())
        if (a.state == AllocState::kActive) ++active[*a.system];
      for (SystemIndex s = 0; s < 16; ++s) {
        EXPECT_LE(active[s], 1);
        EXPECT_EQ(active[s] == 1, m.state(s) == SystemState::kAllocated);
      }
      // Allow set is exactly the active pairs.
      std::set<std::pair<std::string, std::string>> want;
      for (const auto &[id, a] : m.allocations())
        if (a.state == AllocState::kActive) want.emplace(a.node, t->systems()[*a.system].id);
      EXPECT_EQ(m.rules().allow, want);
      EXPECT_GE(m.rules().generation, last_gen);
      last_gen = m.rules().generation;
    }
    // Derivations in the log are strictly increasing where they change.
    std::uint64_t prev = 0;
    for (const auto &r : m.log())
      if (r.op == "activate" || r.op == "release" || r.op == "expire") {
        EXPECT_GE(r.generation, prev);
        prev = r.generation;
      }
  }
}

TEST(AllocLog, JsonRoundTrip) {
  AllocLogRecord r{42, "activate", "alice", "node01", "sys01", 7, 3};
  AllocLogRecord back = AllocLogRecordFromJson(ToJson(r));
  EXPECT_EQ(back.t, 42);
  EXPECT_EQ(back.op, "activate");
  EXPECT_EQ(back.system, "sys01");
  EXPECT_EQ(back.generation, 3u);
  EXPECT_THROW(AllocLogRecordFromJson(nlohmann::json::object()), Error);
}

}  // namespace
}  // namespace fleetops::allocman
