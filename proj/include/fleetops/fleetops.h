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

#ifndef FLEETOPS_FLEETOPS_H_
#define FLEETOPS_FLEETOPS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(FLEETOPS_BUILDING_LIBRARY)
#define FO_API __attribute__((visibility("default")))
#else
#define FO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. FO_OK is zero; every other value names a failure class. */
typedef enum fo_status {
  FO_OK = 0,
  FO_INVALID_ARGUMENT,
  FO_IO_ERROR,
  FO_PARSE_ERROR,
  FO_DANGLING_REFERENCE,
  FO_NO_PATH,
  FO_UNKNOWN_FLOW,
  FO_UNKNOWN_SYSTEM,
  FO_UNKNOWN_ALLOCATION,
  FO_SYSTEM_DRAINED,
  FO_NOT_ACTIVE,
  FO_NOT_DRAINED,
  FO_CONTROLLER_DOWN,
  FO_SYSTEM_OCCUPIED,
  FO_NO_FREE_SYSTEM,
  FO_OUT_OF_RETENTION,
  FO_INVALID_RANGE,
  FO_INVALID_CONFIG,
  FO_NON_MONOTONIC_SAMPLE,
  FO_DUPLICATE_CHANGESET,
  FO_UNKNOWN_PIPELINE,
  FO_JOB_NOT_PENDING,
  FO_STAGING_MISSING,
  FO_CHECKSUM_MISMATCH,
  FO_NOT_VOTED_POSITIVE,
  FO_UNKNOWN_ENTITY,
  FO_OUT_OF_WINDOW,
  FO_ALREADY_APPLIED,
  FO_NOT_APPLIED,
  FO_BIND_FAILURE,
  FO_UNKNOWN_CHECK,
  FO_INTERNAL = 100
} fo_status;

typedef struct fo_scenario fo_scenario;
typedef struct fo_sim fo_sim;
typedef struct fo_server fo_server;

FO_API const char *fo_version(void);
FO_API const char *fo_status_name(fo_status status);
/* Message of the last failure on the calling thread; never NULL. */
FO_API const char *fo_last_error(void);
/* Releases any string handed out by this library. */
FO_API void fo_free(char *p);

/* Topology. The report is {"violations": [{"kind", "subject", "message"}]}. */
FO_API fo_status fo_topology_validate_file(const char *path, char **report_json, size_t *violations);
FO_API fo_status fo_default_fleet_json(char **out_json);

/* Scenarios, by file path or by shipped name. */
FO_API fo_status fo_scenario_load(const char *name_or_path, fo_scenario **out);
FO_API fo_status fo_scenario_load_json(const char *json, const char *base_dir, fo_scenario **out);
FO_API fo_status fo_scenario_set_seed(fo_scenario *s, uint64_t seed);
FO_API uint64_t fo_scenario_seed(const fo_scenario *s);
FO_API void fo_scenario_free(fo_scenario *s);

/* Batch run. out_dir may be NULL to skip writing traces. *passed is 1 when
 * every declared check passed. */
FO_API fo_status fo_run(const fo_scenario *s, const char *out_dir, char **report_json, int *passed);
/* Offline check over a trace directory written by fo_run. */
FO_API fo_status fo_replay(const char *trace_dir, const char *check, char **result_json, int *passed);
/* Names of the replay checks, as a JSON array. */
FO_API fo_status fo_replay_checks(char **out_json);

/* Stepped simulation. Times are simulated seconds. */
FO_API fo_status fo_sim_create(const fo_scenario *s, const char *staging_dir, fo_sim **out);
FO_API void fo_sim_free(fo_sim *sim);
FO_API fo_status fo_sim_run_until(fo_sim *sim, double t);
FO_API double fo_sim_now(const fo_sim *sim);
FO_API fo_status fo_sim_command(fo_sim *sim, const char *command_json, char **result_json);
FO_API fo_status fo_sim_snapshot(const fo_sim *sim, char **out_json);
FO_API fo_status fo_sim_trace_hash(const fo_sim *sim, uint64_t *out);

/* HTTP control plane. port 0 picks a free port; pace must be positive. */
FO_API fo_status fo_server_start(const fo_scenario *s, const char *host, int port, double pace,
                                 const char *staging_dir, fo_server **out);
FO_API int fo_server_port(const fo_server *server);
/* Blocks until fo_server_stop is called from another thread. */
FO_API void fo_server_wait(fo_server *server);
FO_API void fo_server_stop(fo_server *server);
FO_API void fo_server_free(fo_server *server);

#ifdef __cplusplus
}
#endif

#endif  /* FLEETOPS_FLEETOPS_H_ */
