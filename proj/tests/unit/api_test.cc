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

#include <httplib.h>

#include <chrono>
#include <thread>

#include "api/server.h"
#include "common/error.h"
#include "faults/scenario.h"

namespace fleetops::api {
namespace {

using nlohmann::json;

faults::Scenario Quiet(double duration = 86400) {
  return faults::LoadScenario({{"name", "api"},
                               {"topology", "default"},
                               {"duration", duration},
                               {"config",
                                {{"monitor",
                                  {{"telemetry", true}, {"probes", false}, {"health_checks", false}, {"fidelity", false}}}}}});
}

class Api : public ::testing::Test {
 protected:
  void Boot(faults::Scenario s, double pace = 1.0) {
    ServeOptions o;
    o.port = 0;
    o.pace = pace;
    server_ = std::make_unique<ApiServer>(std::move(s), o);
    server_->Start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", server_->port());
    client_->set_read_timeout(10, 0);
  }
  void SetUp() override { Boot(Quiet()); }
  void TearDown() override {
    if (server_) server_->Stop();
  }

  json Get(const std::string &path, int want = 200) {
    auto r = client_->Get(path);
    EXPECT_TRUE(r) << path;
    if (!r) return nullptr;
    EXPECT_EQ(r->status, want) << path << " " << r->body;
    return r->get_header_value("Content-Type").find("ndjson") == std::string::npos ? json::parse(r->body)
                                                                                     : json(r->body);
  }
  json Post(const std::string &path, const json &body, int want = 200) {
    auto r = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r) << path;
    if (!r) return nullptr;
    EXPECT_EQ(r->status, want) << path << " " << r->body;
    return json::parse(r->body);
  }

  std::unique_ptr<ApiServer> server_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(Api, FleetStartsAllFree) {
  json f = Get("/fleet");
  ASSERT_EQ(f["systems"].size(), 16u);
  int productive = 0;
  for (const auto &s : f["systems"]) {
    productive += s["productive"].get<bool>();
    EXPECT_EQ(s["state"], "Free") << s["id"];
  }
  EXPECT_EQ(productive, 13);
  EXPECT_EQ(f["summary"]["free"], 16);
}

TEST_F(Api, DrainAllocatedSystemIsAccepted) {
  json a = Post("/allocations", {{"user", "alice"}, {"node", "node01"}, {"selector", "sys03"}});
  EXPECT_EQ(a["result"]["state"], "Active");
  json d = Post("/systems/sys03/drain", json::object(), 202);
  EXPECT_TRUE(d["result"]["drain_pending"].get<bool>());
  json free = Post("/systems/sys05/drain", json::object());
  EXPECT_EQ(free["result"]["state"], "Drained");
  // Read-your-writes: the snapshot already shows the change.
  for (const auto &s : Get("/fleet")["systems"])
    if (s["id"] == "sys05") EXPECT_EQ(s["state"], "Drained");
  Post("/systems/sys05/undrain", json::object());
  Post("/systems/nope/drain", json::object(), 404);
}

TEST_F(Api, AllocationQueuesWhenProductivePoolFull) {
  for (int i = 0; i < 13; ++i) Post("/allocations", {{"user", "u"}, {"node", "node01"}});
  json q = Post("/allocations", {{"user", "u"}, {"node", "node01"}});
  EXPECT_EQ(q["result"]["state"], "Queued");
  const auto first = Post("/allocations", {{"user", "v"}, {"node", "node02"}, {"selector", "sys14"}});
  auto del = client_->Delete("/allocations/" + std::to_string(first["result"]["alloc_id"].get<int>()));
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 200);
  del = client_->Delete("/allocations/" + std::to_string(first["result"]["alloc_id"].get<int>()));
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 409);
  EXPECT_EQ(json::parse(del->body)["error"], "NotActive");
  del = client_->Delete("/allocations/9999");
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 404);
}

TEST_F(Api, HealthCheck) {
  json h = Post("/systems/sys02/health_check", json::object());
  EXPECT_TRUE(h["result"].contains("sram_ok"));
  Post("/allocations", {{"user", "alice"}, {"node", "node01"}, {"selector", "sys02"}});
  json busy = Post("/systems/sys02/health_check", json::object(), 409);
  EXPECT_EQ(busy["error"], "SystemOccupied");
}

TEST_F(Api, Annotations) {
  json a = Post("/annotations", {{"text", "cooling work"}, {"t0", 0}, {"category", "Maintenance"}, {"author", "op"}});
  EXPECT_EQ(a["result"]["text"], "cooling work");
  json all = Get("/annotations");
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0]["author"], "op");
  EXPECT_EQ(Get("/annotations?from=0&to=1").size(), 1u);
  json err = Get("/annotations?from=10&to=5", 400);
  EXPECT_EQ(err["error"], "InvalidRange");
  Post("/annotations", {{"text", "bad"}, {"t0", 10}, {"t1", 5}}, 400);
  Post("/annotations", json::object(), 400);
}

TEST_F(Api, BadJsonBodyIs400) {
  auto r = client_->Post("/annotations", "{nope", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST_F(Api, MetricsListAndRange) {
  std::this_thread::sleep_for(std::chrono::milliseconds(1500));
  json names = Get("/systems/sys01/metrics");
  EXPECT_FALSE(names["series"].empty());
  json pts = Get("/systems/sys01/metrics?series=in_12v&from=0&to=1");
  ASSERT_EQ(pts["points"].size(), 1u);
  EXPECT_EQ(pts["points"][0][0], 0.0);
  json agg = Get("/systems/sys01/metrics?series=in_12v&from=0&to=60&res=60");
  ASSERT_EQ(agg["aggregates"].size(), 1u);
  Get("/systems/sys01/metrics?series=nope", 404);
  Get("/systems/sys99/metrics", 404);
}

TEST_F(Api, EventsAreGaplessAndResumable) {
  Post("/annotations", {{"text", "a"}});
  Post("/systems/sys09/drain", json::object());
  const std::string body = Get("/events?follow=0").get<std::string>();
  std::istringstream in(body);
  std::string line;
  std::uint64_t expect = 1;
  while (std::getline(in, line)) {
    json e = json::parse(line);
    EXPECT_EQ(e["seq"], expect++);
  }
  ASSERT_GE(expect, 3u);
  const std::uint64_t mid = expect / 2;
  const std::string rest = Get("/events?follow=0&since=" + std::to_string(mid)).get<std::string>();
  std::istringstream in2(rest);
  ASSERT_TRUE(std::getline(in2, line));
  EXPECT_EQ(json::parse(line)["seq"], mid + 1);
}

TEST_F(Api, EventsFollowStreams) {
  std::string received;
  std::thread poster([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    httplib::Client c("127.0.0.1", server_->port());
    c.Post("/annotations", json{{"text", "live"}}.dump(), "application/json");
  });
  httplib::Client c("127.0.0.1", server_->port());
  c.set_read_timeout(5, 0);
  c.Get("/events?since=0&follow=1", [&](const char *data, std::size_t n) {
    received.append(data, n);
    return received.find("live") == std::string::npos;
  });
  poster.join();
  EXPECT_NE(received.find("\"annotation\""), std::string::npos);
}

TEST_F(Api, CorsPreflight) {
  auto r = client_->Options("/fleet");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(Api, ReadsNeverMutateFinishedRun) {
  server_->Stop();
  Boot(Quiet(60), 1e6);
  json st;
  for (int i = 0; i < 200; ++i) {
    st = Get("/status");
    if (st["finished"].get<bool>()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ASSERT_TRUE(st["finished"].get<bool>());
  for (const char *path : {"/fleet", "/alerts", "/pipelines", "/annotations", "/systems/sys01/metrics",
                           "/systems/sys01/metrics?series=in_12v&from=0&to=60&res=60", "/events?follow=0"})
    Get(path);
  json again = Get("/status");
  EXPECT_EQ(again["trace_hash"], st["trace_hash"]);
  EXPECT_EQ(again["events"], st["events"]);
}

TEST_F(Api, ApprovingNegativeVoteConflicts) {
  server_->Stop();
  Boot(faults::LoadScenarioFile(faults::ResolveScenarioPath("ci_bitfile_fail")), 1e6);
  json p;
  for (int i = 0; i < 500; ++i) {
    p = Get("/pipelines");
    if (!p.empty() && p[0]["state"] == "Voted") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ASSERT_FALSE(p.empty());
  ASSERT_EQ(p[0]["state"], "Voted");
  json r = Post("/pipelines/cs-bad/approve", {{"approver", "rev"}}, 409);
  EXPECT_EQ(r["error"], "NotVotedPositive");
  Post("/pipelines/unknown/approve", json::object(), 404);
}

TEST(ApiServerOptions, NonPositivePaceRejected) {
  ServeOptions o;
  o.pace = 0;
  try {
    ApiServer s(Quiet(), o);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(ApiServerOptions, PortInUseIsBindFailure) {
  ServeOptions o;
  o.port = 0;
  ApiServer a(Quiet(), o);
  a.Start();
  o.port = a.port();
  ApiServer b(Quiet(), o);
  try {
    b.Start();
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kBindFailure);
  }
  a.Stop();
}

TEST(ApiServerOptions, StatusMapping) {
  EXPECT_EQ(HttpStatus(ErrorCode::kInvalidArgument), 400);
  EXPECT_EQ(HttpStatus(ErrorCode::kUnknownSystem), 404);
  EXPECT_EQ(HttpStatus(ErrorCode::kOutOfRetention), 410);
  EXPECT_EQ(HttpStatus(ErrorCode::kNotVotedPositive), 409);
  EXPECT_EQ(HttpStatus(ErrorCode::kIo), 500);
}

}  // namespace
}  // namespace fleetops::api
