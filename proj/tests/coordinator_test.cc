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


#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "doctest.h"
#include "test_support.h"
#include "xcevo/coordinator.h"
#include "xcevo/mutation.h"

using namespace xcevo;
using xcevo::testing::CheapB97;
using xcevo::testing::Small;

namespace {

double RandomDouble(Rng& rng) {
  switch (UniformIndex(rng, 6)) {
    case 0:
      return std::numeric_limits<double>::quiet_NaN();
    case 1:
      return -std::numeric_limits<double>::infinity();
    case 2:
      return -0.0;
    case 3:
      return std::numeric_limits<double>::denorm_min();
    default:
      return StandardNormal(rng) * std::pow(10.0, UniformReal(rng, -30, 30));
  }
}

FunctionalForm RandomForm(Rng& rng) {
  FunctionalForm f = Wb97mvForm();
  for (size_t k = 0; k < kNumFactors; ++k) {
    f.mutable_factor(k) = WithSpareCapacity(f.factor(k), 2, 2);
  }
  MutationConfig cfg;
  const size_t steps = UniformIndex(rng, 20);
  for (size_t i = 0; i < steps; ++i) f = Mutate(f, cfg, rng).form;
  return f;
}

std::string RandomText(Rng& rng) {
  std::string s;
  const size_t n = UniformIndex(rng, 12);
  for (size_t i = 0; i < n; ++i) {
    static const char* const kPieces[] = {"a", "b", "\"", "\\", "\n", " ",
                                          "{", "}", ":", "\t", "\xc3\xa9"};
    s += kPieces[UniformIndex(rng, 11)];
  }
  return s;
}

Message RandomMessage(MessageKind kind, Rng& rng) {
  Message m = Message::Of(kind);
  const auto fill_fp = [&] {
    for (auto& d : m.fingerprints) d = rng();
  };
  switch (kind) {
    case MessageKind::kParent:
    case MessageKind::kSubmitChild:
      m.form = RandomForm(rng);
      m.params.resize(m.form->num_params());
      for (double& p : m.params) p = RandomDouble(rng);
      m.j_train = RandomDouble(rng);
      m.j_val = RandomDouble(rng);
      fill_fp();
      m.birth_index = rng();
      m.parent_digest = rng();
      m.evaluations_used = rng();
      m.wall_ms = RandomDouble(rng);
      m.cache_hit = rng() & 1;
      break;
    case MessageKind::kAck:
      m.accepted = rng() & 1;
      m.birth_index = rng();
      m.remaining = rng();
      break;
    case MessageKind::kFpCheck:
      fill_fp();
      break;
    case MessageKind::kFpHit:
    case MessageKind::kFpStore:
      m.params.resize(UniformIndex(rng, 20));
      for (double& p : m.params) p = RandomDouble(rng);
      m.j_train = RandomDouble(rng);
      m.j_val = RandomDouble(rng);
      fill_fp();
      break;
    case MessageKind::kError:
      m.error_code = RandomText(rng);
      m.error_message = RandomText(rng);
      break;
    default:
      break;
  }
  return m;
}

constexpr MessageKind kAllKinds[] = {
    MessageKind::kGetParent, MessageKind::kParent, MessageKind::kSubmitChild,
    MessageKind::kAck,       MessageKind::kFpCheck, MessageKind::kFpHit,
    MessageKind::kFpMiss,    MessageKind::kFpStore, MessageKind::kShutdown,
    MessageKind::kError};

// Raw client socket for frame-level tests.
int ConnectRaw(uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  return fd;
}

bool ReadExact(int fd, char* buf, size_t n) {
  while (n > 0) {
    const ssize_t r = ::read(fd, buf, n);
    if (r <= 0) return false;
    buf += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

std::optional<Message> ReadReply(int fd) {
  unsigned char prefix[4];
  if (!ReadExact(fd, reinterpret_cast<char*>(prefix), 4)) return std::nullopt;
  std::string body(FrameLength(prefix), '\0');
  if (!ReadExact(fd, body.data(), body.size())) return std::nullopt;
  return DecodeMessage(body);
}

void WriteRaw(int fd, const std::string& bytes) {
  REQUIRE(::write(fd, bytes.data(), bytes.size()) ==
          static_cast<ssize_t>(bytes.size()));
}

std::string Address(uint16_t port) {
  return "127.0.0.1:" + std::to_string(port);
}

BackoffPolicy Fast() {
  return {std::chrono::milliseconds(1), std::chrono::milliseconds(4), 3};
}

struct Services {
  Small s;
  SearchConfig cfg;
  SearchEngine engine;
  PopulationService population;
  FingerprintService fingerprints;
  Trainer trainer;

  explicit Services(size_t budget, bool seeded = true)
      : cfg(CheapB97(budget, 21)),
        engine(cfg, *s.train, *s.val),
        population(engine, budget),
        fingerprints(engine.cache()),
        trainer{s.train.get(), s.val.get(), cfg.cmaes} {
    if (seeded) engine.AddSeed(EmptyB97SearchForm());
  }
  Handler handler() {
    return MakeCoordinatorHandler(&population, &fingerprints);
  }
};

}  // namespace

TEST_CASE("message kinds and names") {
  for (MessageKind k : kAllKinds) {
    CHECK(MessageKindFromName(MessageKindName(k)) == k);
  }
  CHECK_FALSE(MessageKindFromName("PING"));
  CHECK(ResponseKind(MessageKind::kGetParent) == MessageKind::kParent);
  CHECK(ResponseKind(MessageKind::kSubmitChild) == MessageKind::kAck);
  CHECK(ResponseKind(MessageKind::kFpStore) == MessageKind::kAck);
  CHECK(ResponseKind(MessageKind::kShutdown) == MessageKind::kAck);
  CHECK_FALSE(ResponseKind(MessageKind::kAck));
  CHECK_FALSE(ResponseKind(MessageKind::kFpMiss));
}

TEST_CASE("encode then decode is the identity for random payloads") {
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    for (MessageKind k : kAllKinds) {
      const Message m = RandomMessage(k, rng);
      const std::string body = EncodeMessage(m);
      const Message back = DecodeMessage(body);
      CHECK(WireEqual(m, back));
      CHECK(EncodeMessage(back) == body);
    }
  }
}

TEST_CASE("malformed bodies are protocol errors") {
  CHECK_THROWS_AS(DecodeMessage("not json"), ProtocolError);
  CHECK_THROWS_AS(DecodeMessage("[1,2]"), ProtocolError);
  CHECK_THROWS_AS(DecodeMessage(R"({"kind":"PING"})"), ProtocolError);
  CHECK_THROWS_AS(DecodeMessage(R"({"kind":"ACK","accepted":true})"),
                  ProtocolError);
  CHECK_THROWS_AS(
      DecodeMessage(R"({"kind":"FP_CHECK","fingerprints":["1","2"]})"),
      ProtocolError);
  CHECK_THROWS_AS(
      DecodeMessage(R"({"kind":"FP_CHECK","fingerprints":["1","2","xyz"]})"),
      ProtocolError);
  // A form whose parameter list does not match.
  Rng rng(3);
  Message m = RandomMessage(MessageKind::kSubmitChild, rng);
  m.params.push_back(1.0);
  CHECK_THROWS_AS(DecodeMessage(EncodeMessage(m)), ProtocolError);
  Message bad = Message::Of(MessageKind::kParent);
  CHECK_THROWS_AS(EncodeMessage(bad), ProtocolError);
}

TEST_CASE("invalid UTF-8 in error text still encodes") {
  const Message m = Message::Error(kErrMalformed, "bad \xff\xfe byte");
  const Message back = DecodeMessage(EncodeMessage(m));
  CHECK(back.error_code == kErrMalformed);
  CHECK(back.error_message.rfind("bad ", 0) == 0);
}

TEST_CASE("frame prefix is big-endian") {
  const std::string f = FrameBody(std::string(0x010203, 'x'));
  REQUIRE(f.size() == 0x010203 + 4);
  CHECK(f.substr(0, 4) == std::string("\x00\x01\x02\x03", 4));
  CHECK(FrameLength(reinterpret_cast<const unsigned char*>(f.data())) ==
        0x010203);
}

TEST_CASE("population service") {
  SUBCASE("empty population") {
    Services sv(5, false);
    const Message r = sv.population.Handle(Message::Of(MessageKind::kGetParent));
    CHECK(r.kind == MessageKind::kError);
    CHECK(r.error_code == kErrEmptyPopulation);
  }
  SUBCASE("parent snapshot and budget") {
    Services sv(2);
    const Message p = sv.population.Handle(Message::Of(MessageKind::kGetParent));
    REQUIRE(p.kind == MessageKind::kParent);
    CHECK(p.birth_index == 0);
    CHECK(*p.form == EmptyB97SearchForm());
    Message child = Message::Of(MessageKind::kSubmitChild);
    child.form = p.form;
    child.params = p.params;
    child.j_val = 1.0;
    const Message a1 = sv.population.Handle(child);
    CHECK(a1.accepted);
    CHECK(a1.birth_index == 1);
    CHECK(a1.remaining == 1);
    const Message a2 = sv.population.Handle(child);
    CHECK(a2.remaining == 0);
    CHECK(sv.population.done());
    CHECK_FALSE(sv.population.Handle(child).accepted);
    CHECK(sv.population.Handle(Message::Of(MessageKind::kGetParent)).error_code ==
          kErrBudgetExhausted);
    CHECK(sv.population.accepted() == 2);
    CHECK(sv.engine.history().size() == 3);
    CHECK(sv.population.InvariantsHold());
  }
  SUBCASE("concurrent submissions get consecutive birth indices") {
    Services sv(400);
    const Message p = sv.population.Handle(Message::Of(MessageKind::kGetParent));
    std::vector<std::vector<uint64_t>> births(8);
    std::vector<std::thread> threads;
    for (size_t t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < 50; ++i) {
          Message child = Message::Of(MessageKind::kSubmitChild);
          child.form = p.form;
          child.params = p.params;
          child.j_val = static_cast<double>(t * 100 + i);
          const Message ack = sv.population.Handle(child);
          births[t].push_back(ack.birth_index);
        }
      });
    }
    for (auto& th : threads) th.join();
    std::vector<uint64_t> all;
    for (const auto& b : births) {
      CHECK(std::is_sorted(b.begin(), b.end()));
      all.insert(all.end(), b.begin(), b.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<uint64_t> want(400);
    std::iota(want.begin(), want.end(), 1);
    CHECK(all == want);
    CHECK(sv.population.InvariantsHold());
    CHECK(sv.engine.population().size() == sv.cfg.capacity);
  }
  SUBCASE("shutdown stops handing out parents") {
    Services sv(10);
    bool called = false;
    Handler h = MakeCoordinatorHandler(&sv.population, &sv.fingerprints,
                                       [&] { called = true; });
    const Message ack = h(Message::Of(MessageKind::kShutdown));
    CHECK(ack.kind == MessageKind::kAck);
    CHECK(called);
    CHECK(sv.population.done());
    CHECK(h(Message::Of(MessageKind::kGetParent)).error_code ==
          kErrBudgetExhausted);
    CHECK(sv.population.WaitDone(std::chrono::milliseconds(1)));
  }
  SUBCASE("services reject foreign kinds") {
    Services sv(1);
    CHECK(sv.population.Handle(Message::Of(MessageKind::kFpCheck)).error_code ==
          kErrUnsupported);
    CHECK(sv.fingerprints.Handle(Message::Of(MessageKind::kGetParent))
              .error_code == kErrUnsupported);
    Handler only_fp = MakeCoordinatorHandler(nullptr, &sv.fingerprints);
    CHECK(only_fp(Message::Of(MessageKind::kGetParent)).error_code ==
          kErrUnsupported);
  }
}

TEST_CASE("fingerprint service") {
  FingerprintCache cache;
  FingerprintService fp(cache);
  Message check = Message::Of(MessageKind::kFpCheck);
  check.fingerprints = {1, 2, 3};
  CHECK(fp.Handle(check).kind == MessageKind::kFpMiss);
  Message store = Message::Of(MessageKind::kFpStore);
  store.fingerprints = check.fingerprints;
  store.j_val = 0.5;
  store.params = {1.0};
  CHECK(fp.Handle(store).accepted);
  store.j_val = 0.4;
  // Replays and later stores are no-ops.
  CHECK_FALSE(fp.Handle(store).accepted);
  CHECK_FALSE(fp.Handle(store).accepted);
  const Message hit = fp.Handle(check);
  CHECK(hit.kind == MessageKind::kFpHit);
  CHECK(hit.j_val == 0.5);
  CHECK(cache.size() == 1);
}

TEST_CASE("1000 concurrent stores over TCP are all retrievable") {
  FingerprintCache cache;
  FingerprintService fp(cache);
  TcpServer server("127.0.0.1:0", MakeCoordinatorHandler(nullptr, &fp));
  std::vector<std::thread> threads;
  std::vector<int> failures(8, 0);
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      TcpEndpoint ep(Address(server.port()), Fast());
      for (int i = 0; i < 125; ++i) {
        Message store = Message::Of(MessageKind::kFpStore);
        const uint64_t id = static_cast<uint64_t>(t * 125 + i);
        store.fingerprints = {id, id * 7 + 1, ~id};
        store.j_val = static_cast<double>(id);
        store.params = {static_cast<double>(id), -1.0};
        if (!ep.Call(store).accepted) ++failures[t];
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(std::accumulate(failures.begin(), failures.end(), 0) == 0);
  CHECK(cache.size() == 1000);
  TcpEndpoint ep(Address(server.port()), Fast());
  for (uint64_t id = 0; id < 1000; ++id) {
    Message check = Message::Of(MessageKind::kFpCheck);
    check.fingerprints = {id, id * 7 + 1, ~id};
    const Message r = ep.Call(check);
    REQUIRE(r.kind == MessageKind::kFpHit);
    CHECK(r.j_val == static_cast<double>(id));
    CHECK(r.params == std::vector<double>{static_cast<double>(id), -1.0});
  }
  server.Shutdown();
}

TEST_CASE("address parsing") {
  std::string host;
  uint16_t port = 0;
  ParseAddress("localhost:80", &host, &port);
  CHECK(host == "localhost");
  CHECK(port == 80);
  CHECK_THROWS_AS(ParseAddress("localhost", &host, &port), EndpointError);
  CHECK_THROWS_AS(ParseAddress(":80", &host, &port), EndpointError);
  CHECK_THROWS_AS(ParseAddress("h:", &host, &port), EndpointError);
  CHECK_THROWS_AS(ParseAddress("h:70000", &host, &port), EndpointError);
  CHECK_THROWS_AS(ParseAddress("h:8a", &host, &port), EndpointError);
}

TEST_CASE("malformed frame gets an error frame and the connection closes") {
  Services sv(5);
  TcpServer server("127.0.0.1:0", sv.handler());
  const int fd = ConnectRaw(server.port());
  WriteRaw(fd, FrameBody("{\"kind\": 12"));
  const auto reply = ReadReply(fd);
  REQUIRE(reply);
  CHECK(reply->kind == MessageKind::kError);
  CHECK(reply->error_code == kErrMalformed);
  char c;
  CHECK(::read(fd, &c, 1) == 0);
  ::close(fd);

  // Oversized length prefix.
  const int fd2 = ConnectRaw(server.port());
  WriteRaw(fd2, std::string("\x7f\xff\xff\xff", 4));
  const auto big = ReadReply(fd2);
  REQUIRE(big);
  CHECK(big->error_code == kErrMalformed);
  ::close(fd2);

  // A client vanishing mid-frame leaves the server usable.
  const int fd3 = ConnectRaw(server.port());
  WriteRaw(fd3, std::string("\x00\x00\x01\x00{\"ki", 8));
  ::close(fd3);
  TcpEndpoint ep(Address(server.port()), Fast());
  CHECK(ep.Call(Message::Of(MessageKind::kGetParent)).kind ==
        MessageKind::kParent);
  server.Shutdown();
}

TEST_CASE("unreachable server gives a permanent failure") {
  uint16_t port = 0;
  {
    TcpServer probe("127.0.0.1:0", [](const Message&) {
      return Message::Of(MessageKind::kAck);
    });
    port = probe.port();
  }
  TcpEndpoint ep(Address(port), Fast());
  CHECK_THROWS_AS(ep.Call(Message::Of(MessageKind::kGetParent)), EndpointError);

  Small s;
  const SearchConfig cfg = CheapB97(5, 1);
  Trainer trainer{s.train.get(), s.val.get(), cfg.cmaes};
  TcpEndpoint pop(Address(port), Fast());
  TcpEndpoint fps(Address(port), Fast());
  const WorkerStats st =
      WorkerLoop(pop, fps, trainer, WorkerOptions{1, cfg.mutation, 0});
  CHECK(st.exit_status == 1);
  CHECK_FALSE(st.error.empty());
  CHECK(st.submitted == 0);
}

TEST_CASE("shutdown drains in-flight requests") {
  std::atomic<int> started{0};
  TcpServer server("127.0.0.1:0", [&](const Message&) {
    ++started;
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    Message ack = Message::Of(MessageKind::kAck);
    ack.remaining = 7;
    return ack;
  });
  std::optional<Message> reply;
  std::thread client([&] {
    TcpEndpoint ep(Address(server.port()), Fast());
    reply = ep.Call(Message::Of(MessageKind::kShutdown));
  });
  while (started == 0) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  server.Shutdown();
  client.join();
  REQUIRE(reply);
  CHECK(reply->remaining == 7);
  CHECK(server.active_connections() == 0);
  TcpEndpoint late(Address(server.port()), Fast());
  CHECK_THROWS_AS(late.Call(Message::Of(MessageKind::kGetParent)),
                  EndpointError);
}

TEST_CASE("in-process and TCP transcripts agree for one worker") {
  const auto run = [](bool tcp) {
    Services sv(15);
    std::vector<TranscriptEntry> transcript;
    const WorkerOptions opt{11, sv.cfg.mutation, 0};
    WorkerStats st;
    if (tcp) {
      TcpServer server("127.0.0.1:0", sv.handler());
      TcpEndpoint pop(Address(server.port()), Fast());
      TcpEndpoint fps(Address(server.port()), Fast());
      st = WorkerLoop(pop, fps, sv.trainer, opt, &transcript);
      server.Shutdown();
    } else {
      InProcessEndpoint pop(sv.handler());
      InProcessEndpoint fps(sv.handler());
      st = WorkerLoop(pop, fps, sv.trainer, opt, &transcript);
    }
    CHECK(st.exit_status == 0);
    CHECK(st.accepted == 15);
    CHECK(sv.population.InvariantsHold());
    return transcript;
  };
  const auto a = run(false);
  const auto b = run(true);
  REQUIRE(a.size() == b.size());
  size_t submits = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].request == b[i].request);
    CHECK(a[i].response == b[i].response);
    CHECK(a[i].digest == b[i].digest);
    CHECK(std::bit_cast<uint64_t>(a[i].j_val) ==
          std::bit_cast<uint64_t>(b[i].j_val));
    // Every request kind has its one legal response kind.
    if (a[i].request == MessageKind::kFpCheck) {
      CHECK((a[i].response == MessageKind::kFpHit ||
             a[i].response == MessageKind::kFpMiss));
    } else {
      CHECK(ResponseKind(a[i].request) == a[i].response);
    }
    if (a[i].request == MessageKind::kSubmitChild) ++submits;
  }
  CHECK(submits == 15);
}

TEST_CASE("four TCP workers use exactly the budget") {
  Services sv(40);
  TcpServer server("127.0.0.1:0", sv.handler());
  std::vector<WorkerStats> stats(4);
  std::vector<std::thread> threads;
  for (size_t w = 0; w < 4; ++w) {
    threads.emplace_back([&, w] {
      TcpEndpoint pop(Address(server.port()), Fast());
      TcpEndpoint fps(Address(server.port()), Fast());
      stats[w] = WorkerLoop(pop, fps, sv.trainer,
                            WorkerOptions{100 + w, sv.cfg.mutation, 0});
    });
  }
  CHECK(sv.population.WaitDone(std::chrono::seconds(60)));
  for (auto& th : threads) th.join();
  server.Shutdown();
  size_t accepted = 0;
  for (const auto& st : stats) {
    CHECK(st.exit_status == 0);
    accepted += st.accepted;
  }
  CHECK(accepted == 40);
  CHECK(sv.population.accepted() == 40);
  CHECK(sv.engine.history().size() == 41);
  CHECK(sv.population.InvariantsHold());
}
