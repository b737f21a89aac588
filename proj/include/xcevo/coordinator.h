// Copyright 2026 The xcevo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef XCEVO_COORDINATOR_H_
#define XCEVO_COORDINATOR_H_

// Distributed search: a population service (single writer, server-side
// budget), a fingerprint service (first-write-wins), worker loops, and the
// message schema they share over in-process or TCP endpoints.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "xcevo/evolution.h"

namespace xcevo {

enum class MessageKind {
  kGetParent,
  kParent,
  kSubmitChild,
  kAck,
  kFpCheck,
  kFpHit,
  kFpMiss,
  kFpStore,
  kShutdown,
  kError,
};

std::string_view MessageKindName(MessageKind k);
std::optional<MessageKind> MessageKindFromName(std::string_view name);

// The response kind a request must get (kError is always legal too).
std::optional<MessageKind> ResponseKind(MessageKind request);

// Error codes carried by kError frames.
inline constexpr std::string_view kErrEmptyPopulation = "empty-population";
inline constexpr std::string_view kErrBudgetExhausted = "budget-exhausted";
inline constexpr std::string_view kErrMalformed = "malformed-frame";
inline constexpr std::string_view kErrUnsupported = "unsupported-kind";

// Only the fields of the given kind are encoded:
//   PARENT        form, params, j_train, j_val, birth_index, fingerprints
//   SUBMIT_CHILD  form, params, j_train, j_val, fingerprints, parent_digest,
//                 evaluations_used, wall_ms, cache_hit
//   ACK           accepted, birth_index, remaining
//   FP_CHECK      fingerprints
//   FP_HIT        params, j_train, j_val
//   FP_STORE      fingerprints, params, j_train, j_val
//   ERROR         error_code, error_message
struct Message {
  MessageKind kind = MessageKind::kError;
  std::optional<FunctionalForm> form;
  std::vector<double> params;
  double j_train = 0.0;
  double j_val = 0.0;
  uint64_t birth_index = 0;
  FingerprintTriple fingerprints{};
  uint64_t parent_digest = 0;
  uint64_t evaluations_used = 0;
  double wall_ms = 0.0;
  bool cache_hit = false;
  bool accepted = false;
  uint64_t remaining = 0;
  std::string error_code;
  std::string error_message;

  static Message Of(MessageKind kind);
  static Message Error(std::string_view code, std::string message);
};

// Equality over the fields the kind encodes; doubles compare bitwise.
bool WireEqual(const Message& a, const Message& b);

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string EncodeMessage(const Message& m);
// Throws ProtocolError.
Message DecodeMessage(std::string_view body);

inline constexpr size_t kMaxFrameBytes = 64u << 20;

// 4-byte big-endian length, then the body.
std::string FrameBody(std::string_view body);
// Length of the body announced by a 4-byte prefix.
uint32_t FrameLength(const unsigned char prefix[4]);

using Handler = std::function<Message(const Message&)>;

// Owner of the population. All reads and writes go through one mutex, so
// birth indices are consecutive in acceptance order.
class PopulationService {
 public:
  // `engine` must already hold the trained seeds.
  PopulationService(SearchEngine& engine, size_t budget);

  Message Handle(const Message& request);

  size_t accepted() const;
  bool done() const;
  // Stops handing out parents; later submissions are refused.
  void Stop();
  // Blocks until the budget is used up or Stop() was called, or until the
  // timeout passes; returns done().
  bool WaitDone(std::chrono::milliseconds timeout);

  // Snapshot checks under the lock.
  bool InvariantsHold() const;

 private:
  SearchEngine& engine_;
  size_t budget_;
  size_t accepted_ = 0;
  bool stopped_ = false;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

class FingerprintService {
 public:
  explicit FingerprintService(FingerprintCache& cache) : cache_(cache) {}
  Message Handle(const Message& request);

 private:
  FingerprintCache& cache_;
};

// Routes population kinds and fingerprint kinds; SHUTDOWN is acknowledged
// and forwarded to `on_shutdown`.
Handler MakeCoordinatorHandler(PopulationService* population,
                               FingerprintService* fingerprints,
                               std::function<void()> on_shutdown = {});

class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  // One request, one response. Throws EndpointError on permanent failure.
  virtual Message Call(const Message& request) = 0;
};

// Passes every message through the wire encoding so both modes see the
// same bytes.
class InProcessEndpoint : public Endpoint {
 public:
  explicit InProcessEndpoint(Handler handler) : handler_(std::move(handler)) {}
  Message Call(const Message& request) override;

 private:
  Handler handler_;
};

struct BackoffPolicy {
  std::chrono::milliseconds initial{50};
  std::chrono::milliseconds max{2000};
  size_t max_retries = 8;
};

// host:port client. Reconnects with exponential backoff; gives up with
// EndpointError after max_retries consecutive failures.
class TcpEndpoint : public Endpoint {
 public:
  TcpEndpoint(std::string address, BackoffPolicy backoff);
  ~TcpEndpoint() override;
  Message Call(const Message& request) override;

 private:
  void Connect();
  void Close();

  std::string host_;
  uint16_t port_ = 0;
  BackoffPolicy backoff_;
  int fd_ = -1;
};

// Splits "host:port"; throws EndpointError.
void ParseAddress(const std::string& address, std::string* host,
                  uint16_t* port);

// Thread per connection. A malformed frame gets an ERROR frame and the
// connection is closed.
class TcpServer {
 public:
  // Port 0 picks a free port. Throws EndpointError when binding fails.
  TcpServer(const std::string& address, Handler handler);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  uint16_t port() const { return port_; }
  size_t active_connections() const { return active_.load(); }
  // Stops accepting, lets in-flight requests finish, joins all threads.
  void Shutdown();

 private:
  void AcceptLoop();
  void Serve(int fd);

  Handler handler_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<size_t> active_{0};
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

struct TranscriptEntry {
  MessageKind request;
  MessageKind response;
  uint64_t digest;  // child digest for SUBMIT_CHILD and FP kinds, else 0
  double j_val;     // of the response where it carries one
};

struct WorkerOptions {
  uint64_t seed = 1;
  MutationConfig mutation;
  // Stop after this many submissions (0: until the server refuses).
  size_t max_children = 0;
};

struct WorkerStats {
  size_t submitted = 0;
  size_t accepted = 0;
  size_t cache_hits = 0;
  // 0: stopped by the server; 1: permanent disconnect.
  int exit_status = 0;
  std::string error;
};

// GET_PARENT, mutate, FP_CHECK, train on a miss, FP_STORE, SUBMIT_CHILD.
WorkerStats WorkerLoop(Endpoint& population, Endpoint& fingerprints,
                       const Trainer& trainer, const WorkerOptions& options,
                       std::vector<TranscriptEntry>* transcript = nullptr);

}  // namespace xcevo

#endif  // XCEVO_COORDINATOR_H_
