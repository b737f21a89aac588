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

#include "xcevo/coordinator.h"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "json.hpp"
#include "xcevo/dsl.h"
#include "xcevo/fingerprint.h"

namespace xcevo {

namespace {

using nlohmann::json;

struct KindName {
  MessageKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {MessageKind::kGetParent, "GET_PARENT"},
    {MessageKind::kParent, "PARENT"},
    {MessageKind::kSubmitChild, "SUBMIT_CHILD"},
    {MessageKind::kAck, "ACK"},
    {MessageKind::kFpCheck, "FP_CHECK"},
    {MessageKind::kFpHit, "FP_HIT"},
    {MessageKind::kFpMiss, "FP_MISS"},
    {MessageKind::kFpStore, "FP_STORE"},
    {MessageKind::kShutdown, "SHUTDOWN"},
    {MessageKind::kError, "ERROR"},
};

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

uint64_t ParseHex(const json& j, const char* field) {
  if (!j.is_string()) {
    throw ProtocolError(std::string(field) + ": expected a hex string");
  }
  const std::string s = j.get<std::string>();
  if (s.empty() || s.size() > 16) {
    throw ProtocolError(std::string(field) + ": bad hex digest");
  }
  uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<uint64_t>(c - 'a' + 10);
    } else {
      throw ProtocolError(std::string(field) + ": bad hex digest");
    }
  }
  return v;
}

// Doubles travel as their IEEE bit pattern so every value, including
// non-finite ones, round-trips exactly.
std::string Bits(double v) { return Hex(std::bit_cast<uint64_t>(v)); }

double ParseBits(const json& j, const char* field) {
  return std::bit_cast<double>(ParseHex(j, field));
}

const json& Field(const json& root, const char* name) {
  auto it = root.find(name);
  if (it == root.end()) {
    throw ProtocolError(std::string("missing field \"") + name + "\"");
  }
  return *it;
}

uint64_t ParseUint(const json& j, const char* field) {
  if (!j.is_number_unsigned()) {
    throw ProtocolError(std::string(field) + ": expected an unsigned integer");
  }
  return j.get<uint64_t>();
}

bool ParseBool(const json& j, const char* field) {
  if (!j.is_boolean()) {
    throw ProtocolError(std::string(field) + ": expected a boolean");
  }
  return j.get<bool>();
}

std::string ParseString(const json& j, const char* field) {
  if (!j.is_string()) {
    throw ProtocolError(std::string(field) + ": expected a string");
  }
  return j.get<std::string>();
}

json EncodeForm(const FunctionalForm& form) {
  json out = json::object();
  for (size_t f = 0; f < kNumFactors; ++f) {
    out[std::string(kFactorNames[f])] = ToText(form.factor(f));
  }
  return out;
}

FunctionalForm DecodeForm(const json& j) {
  if (!j.is_object()) throw ProtocolError("form: expected an object");
  std::vector<Program> programs;
  for (size_t f = 0; f < kNumFactors; ++f) {
    const std::string text =
        ParseString(Field(j, std::string(kFactorNames[f]).c_str()), "form");
    try {
      programs.push_back(ParseProgram(text));
    } catch (const ParseError& e) {
      throw ProtocolError(std::string("form.") + std::string(kFactorNames[f]) +
                          ": " + e.what());
    }
  }
  return FunctionalForm(std::move(programs[0]), std::move(programs[1]),
                        std::move(programs[2]));
}

json EncodeParams(const std::vector<double>& p) {
  json out = json::array();
  for (double v : p) out.push_back(Bits(v));
  return out;
}

std::vector<double> DecodeParams(const json& j) {
  if (!j.is_array()) throw ProtocolError("params: expected an array");
  std::vector<double> out;
  for (const json& e : j) out.push_back(ParseBits(e, "params"));
  return out;
}

json EncodeFingerprints(const FingerprintTriple& fp) {
  json out = json::array();
  for (uint64_t v : fp) out.push_back(Hex(v));
  return out;
}

FingerprintTriple DecodeFingerprints(const json& j) {
  if (!j.is_array() || j.size() != kNumFactors) {
    throw ProtocolError("fingerprints: expected 3 digests");
  }
  FingerprintTriple fp{};
  for (size_t f = 0; f < kNumFactors; ++f) {
    fp[f] = ParseHex(j[f], "fingerprints");
  }
  return fp;
}

bool SameBits(double a, double b) {
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

bool SameParams(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!SameBits(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

std::string_view MessageKindName(MessageKind k) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "?";
}

std::optional<MessageKind> MessageKindFromName(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (kn.name == name) return kn.kind;
  }
  return std::nullopt;
}

std::optional<MessageKind> ResponseKind(MessageKind request) {
  switch (request) {
    case MessageKind::kGetParent:
      return MessageKind::kParent;
    case MessageKind::kSubmitChild:
      return MessageKind::kAck;
    case MessageKind::kFpStore:
      return MessageKind::kAck;
    case MessageKind::kShutdown:
      return MessageKind::kAck;
    case MessageKind::kFpCheck:
      // FP_HIT or FP_MISS; FP_HIT stands for the pair.
      return MessageKind::kFpHit;
    default:
      return std::nullopt;
  }
}

Message Message::Of(MessageKind kind) {
  Message m;
  m.kind = kind;
  return m;
}

Message Message::Error(std::string_view code, std::string message) {
  Message m = Of(MessageKind::kError);
  m.error_code = std::string(code);
  m.error_message = std::move(message);
  return m;
}

std::string EncodeMessage(const Message& m) {
  json j;
  j["kind"] = std::string(MessageKindName(m.kind));
  switch (m.kind) {
    case MessageKind::kParent:
    case MessageKind::kSubmitChild:
      if (!m.form) throw ProtocolError("message needs a form");
      j["form"] = EncodeForm(*m.form);
      j["params"] = EncodeParams(m.params);
      j["j_train"] = Bits(m.j_train);
      j["j_val"] = Bits(m.j_val);
      j["fingerprints"] = EncodeFingerprints(m.fingerprints);
      if (m.kind == MessageKind::kParent) {
        j["birth_index"] = m.birth_index;
      } else {
        j["parent_digest"] = Hex(m.parent_digest);
        j["evaluations_used"] = m.evaluations_used;
        j["wall_ms"] = Bits(m.wall_ms);
        j["cache_hit"] = m.cache_hit;
      }
      break;
    case MessageKind::kAck:
      j["accepted"] = m.accepted;
      j["birth_index"] = m.birth_index;
      j["remaining"] = m.remaining;
      break;
    case MessageKind::kFpCheck:
      j["fingerprints"] = EncodeFingerprints(m.fingerprints);
      break;
    case MessageKind::kFpHit:
      j["params"] = EncodeParams(m.params);
      j["j_train"] = Bits(m.j_train);
      j["j_val"] = Bits(m.j_val);
      break;
    case MessageKind::kFpStore:
      j["fingerprints"] = EncodeFingerprints(m.fingerprints);
      j["params"] = EncodeParams(m.params);
      j["j_train"] = Bits(m.j_train);
      j["j_val"] = Bits(m.j_val);
      break;
    case MessageKind::kError:
      j["code"] = m.error_code;
      j["message"] = m.error_message;
      break;
    case MessageKind::kGetParent:
    case MessageKind::kFpMiss:
    case MessageKind::kShutdown:
      break;
  }
  // Error text can echo client bytes; never fail to encode it.
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Message DecodeMessage(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("bad JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("frame body must be an object");
  const auto kind = MessageKindFromName(ParseString(Field(j, "kind"), "kind"));
  if (!kind) throw ProtocolError("unknown message kind");
  Message m = Message::Of(*kind);
  switch (m.kind) {
    case MessageKind::kParent:
    case MessageKind::kSubmitChild:
      m.form = DecodeForm(Field(j, "form"));
      m.params = DecodeParams(Field(j, "params"));
      m.j_train = ParseBits(Field(j, "j_train"), "j_train");
      m.j_val = ParseBits(Field(j, "j_val"), "j_val");
      m.fingerprints = DecodeFingerprints(Field(j, "fingerprints"));
      if (m.kind == MessageKind::kParent) {
        m.birth_index = ParseUint(Field(j, "birth_index"), "birth_index");
      } else {
        m.parent_digest = ParseHex(Field(j, "parent_digest"), "parent_digest");
        m.evaluations_used =
            ParseUint(Field(j, "evaluations_used"), "evaluations_used");
        m.wall_ms = ParseBits(Field(j, "wall_ms"), "wall_ms");
        m.cache_hit = ParseBool(Field(j, "cache_hit"), "cache_hit");
      }
      if (m.params.size() != m.form->num_params()) {
        throw ProtocolError("params do not match the form");
      }
      break;
    case MessageKind::kAck:
      m.accepted = ParseBool(Field(j, "accepted"), "accepted");
      m.birth_index = ParseUint(Field(j, "birth_index"), "birth_index");
      m.remaining = ParseUint(Field(j, "remaining"), "remaining");
      break;
    case MessageKind::kFpCheck:
      m.fingerprints = DecodeFingerprints(Field(j, "fingerprints"));
      break;
    case MessageKind::kFpHit:
      m.params = DecodeParams(Field(j, "params"));
      m.j_train = ParseBits(Field(j, "j_train"), "j_train");
      m.j_val = ParseBits(Field(j, "j_val"), "j_val");
      break;
    case MessageKind::kFpStore:
      m.fingerprints = DecodeFingerprints(Field(j, "fingerprints"));
      m.params = DecodeParams(Field(j, "params"));
      m.j_train = ParseBits(Field(j, "j_train"), "j_train");
      m.j_val = ParseBits(Field(j, "j_val"), "j_val");
      break;
    case MessageKind::kError:
      m.error_code = ParseString(Field(j, "code"), "code");
      m.error_message = ParseString(Field(j, "message"), "message");
      break;
    case MessageKind::kGetParent:
    case MessageKind::kFpMiss:
    case MessageKind::kShutdown:
      break;
  }
  return m;
}

bool WireEqual(const Message& a, const Message& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case MessageKind::kParent:
    case MessageKind::kSubmitChild: {
      if (!a.form || !b.form || !(*a.form == *b.form)) return false;
      if (!SameParams(a.params, b.params) || !SameBits(a.j_train, b.j_train) ||
          !SameBits(a.j_val, b.j_val) || a.fingerprints != b.fingerprints) {
        return false;
      }
      if (a.kind == MessageKind::kParent) return a.birth_index == b.birth_index;
      return a.parent_digest == b.parent_digest &&
             a.evaluations_used == b.evaluations_used &&
             SameBits(a.wall_ms, b.wall_ms) && a.cache_hit == b.cache_hit;
    }
    case MessageKind::kAck:
      return a.accepted == b.accepted && a.birth_index == b.birth_index &&
             a.remaining == b.remaining;
    case MessageKind::kFpCheck:
      return a.fingerprints == b.fingerprints;
    case MessageKind::kFpHit:
      return SameParams(a.params, b.params) && SameBits(a.j_train, b.j_train) &&
             SameBits(a.j_val, b.j_val);
    case MessageKind::kFpStore:
      return a.fingerprints == b.fingerprints &&
             SameParams(a.params, b.params) && SameBits(a.j_train, b.j_train) &&
             SameBits(a.j_val, b.j_val);
    case MessageKind::kError:
      return a.error_code == b.error_code && a.error_message == b.error_message;
    default:
      return true;
  }
}

std::string FrameBody(std::string_view body) {
  if (body.size() > kMaxFrameBytes) throw ProtocolError("frame too large");
  const uint32_t n = static_cast<uint32_t>(body.size());
  std::string out;
  out.reserve(body.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out.append(body);
  return out;
}

uint32_t FrameLength(const unsigned char p[4]) {
  return (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) |
         (uint32_t{p[2]} << 8) | uint32_t{p[3]};
}

// ---------------------------------------------------------------------------
// Services

PopulationService::PopulationService(SearchEngine& engine, size_t budget)
    : engine_(engine), budget_(budget) {
  if (budget_ == 0) stopped_ = true;
}

Message PopulationService::Handle(const Message& request) {
  std::unique_lock<std::mutex> lock(mu_);
  switch (request.kind) {
    case MessageKind::kGetParent: {
      if (stopped_ || accepted_ >= budget_) {
        return Message::Error(kErrBudgetExhausted, "no more children wanted");
      }
      if (engine_.population().empty()) {
        return Message::Error(kErrEmptyPopulation, "population is empty");
      }
      const IndividualPtr p = engine_.SelectParent();
      Message m = Message::Of(MessageKind::kParent);
      m.form = p->form;
      m.params = p->params;
      m.j_train = p->j_train;
      m.j_val = p->j_val;
      m.birth_index = p->birth_index;
      m.fingerprints = p->fingerprints;
      return m;
    }
    case MessageKind::kSubmitChild: {
      if (!request.form) {
        return Message::Error(kErrMalformed, "SUBMIT_CHILD without a form");
      }
      Message ack = Message::Of(MessageKind::kAck);
      if (stopped_ || accepted_ >= budget_) {
        ack.accepted = false;
        ack.remaining = 0;
        return ack;
      }
      EvaluatedChild child{*request.form,         request.params,
                           request.j_train,       request.j_val,
                           request.fingerprints,  request.evaluations_used,
                           request.cache_hit};
      const IndividualPtr stored = engine_.Insert(
          std::move(child), request.parent_digest, request.wall_ms);
      ++accepted_;
      ack.accepted = true;
      ack.birth_index = stored->birth_index;
      ack.remaining = budget_ - accepted_;
      if (accepted_ >= budget_) cv_.notify_all();
      return ack;
    }
    default:
      return Message::Error(kErrUnsupported,
                            "population service cannot handle " +
                                std::string(MessageKindName(request.kind)));
  }
}

size_t PopulationService::accepted() const {
  std::lock_guard<std::mutex> lock(mu_);
  return accepted_;
}

bool PopulationService::done() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stopped_ || accepted_ >= budget_;
}

void PopulationService::Stop() {
  std::lock_guard<std::mutex> lock(mu_);
  stopped_ = true;
  cv_.notify_all();
}

bool PopulationService::WaitDone(std::chrono::milliseconds timeout) {
  std::unique_lock<std::mutex> lock(mu_);
  return cv_.wait_for(lock, timeout,
                      [&] { return stopped_ || accepted_ >= budget_; });
}

bool PopulationService::InvariantsHold() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!engine_.population().InvariantsHold()) return false;
  // Accepted children plus seeds are exactly the birth indices handed out.
  const auto& h = engine_.history();
  for (size_t i = 0; i < h.size(); ++i) {
    if (h[i].birth_index != i) return false;
  }
  return true;
}

Message FingerprintService::Handle(const Message& request) {
  switch (request.kind) {
    case MessageKind::kFpCheck: {
      auto hit = cache_.Lookup(request.fingerprints);
      if (!hit) return Message::Of(MessageKind::kFpMiss);
      Message m = Message::Of(MessageKind::kFpHit);
      m.params = hit->params;
      m.j_train = hit->j_train;
      m.j_val = hit->j_val;
      return m;
    }
    case MessageKind::kFpStore: {
      Message ack = Message::Of(MessageKind::kAck);
      ack.accepted = cache_.Store(request.fingerprints,
                                  {request.params, request.j_train,
                                   request.j_val});
      return ack;
    }
    default:
      return Message::Error(kErrUnsupported,
                            "fingerprint service cannot handle " +
                                std::string(MessageKindName(request.kind)));
  }
}

Handler MakeCoordinatorHandler(PopulationService* population,
                               FingerprintService* fingerprints,
                               std::function<void()> on_shutdown) {
  return [=](const Message& m) -> Message {
    switch (m.kind) {
      case MessageKind::kGetParent:
      case MessageKind::kSubmitChild:
        if (population) return population->Handle(m);
        break;
      case MessageKind::kFpCheck:
      case MessageKind::kFpStore:
        if (fingerprints) return fingerprints->Handle(m);
        break;
      case MessageKind::kShutdown: {
        if (population) population->Stop();
        if (on_shutdown) on_shutdown();
        Message ack = Message::Of(MessageKind::kAck);
        ack.accepted = true;
        return ack;
      }
      default:
        break;
    }
    return Message::Error(kErrUnsupported,
                          "no service for " +
                              std::string(MessageKindName(m.kind)));
  };
}

Message InProcessEndpoint::Call(const Message& request) {
  const Message decoded = DecodeMessage(EncodeMessage(request));
  return DecodeMessage(EncodeMessage(handler_(decoded)));
}

// ---------------------------------------------------------------------------
// Worker

namespace {

void Record(std::vector<TranscriptEntry>* t, MessageKind req,
            const Message& resp, uint64_t digest) {
  if (!t) return;
  const bool has_j = resp.kind == MessageKind::kParent ||
                     resp.kind == MessageKind::kFpHit;
  t->push_back({req, resp.kind, digest, has_j ? resp.j_val : 0.0});
}

bool IsError(const Message& m, std::string_view code) {
  return m.kind == MessageKind::kError && m.error_code == code;
}

}  // namespace

WorkerStats WorkerLoop(Endpoint& population, Endpoint& fingerprints,
                       const Trainer& trainer, const WorkerOptions& options,
                       std::vector<TranscriptEntry>* transcript) {
  WorkerStats stats;
  Rng rng(MixSeed(options.seed, 0));
  uint64_t step = 0;
  try {
    while (options.max_children == 0 || stats.submitted < options.max_children) {
      const Message parent = population.Call(Message::Of(MessageKind::kGetParent));
      Record(transcript, MessageKind::kGetParent, parent, 0);
      if (IsError(parent, kErrBudgetExhausted)) break;
      if (IsError(parent, kErrEmptyPopulation)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        continue;
      }
      if (parent.kind != MessageKind::kParent || !parent.form) {
        throw EndpointError("unexpected reply to GET_PARENT: " +
                            std::string(MessageKindName(parent.kind)) + " " +
                            parent.error_message);
      }
      const auto start = std::chrono::steady_clock::now();
      MutationOutcome mutated = Mutate(*parent.form, options.mutation, rng);
      const FingerprintTriple fp = mutated.form.Fingerprints();
      const uint64_t digest = CombineDigests(fp);

      Message check = Message::Of(MessageKind::kFpCheck);
      check.fingerprints = fp;
      const Message verdict = fingerprints.Call(check);
      Record(transcript, MessageKind::kFpCheck, verdict, digest);

      Message submit = Message::Of(MessageKind::kSubmitChild);
      submit.fingerprints = fp;
      submit.parent_digest = CombineDigests(parent.fingerprints);
      if (verdict.kind == MessageKind::kFpHit) {
        submit.params = verdict.params;
        submit.j_train = verdict.j_train;
        submit.j_val = verdict.j_val;
        submit.cache_hit = true;
        ++stats.cache_hits;
      } else if (verdict.kind == MessageKind::kFpMiss) {
        const EvaluatedChild trained =
            trainer.Train(mutated.form, MixSeed(options.seed, 1 + step));
        submit.params = trained.params;
        submit.j_train = trained.j_train;
        submit.j_val = trained.j_val;
        submit.evaluations_used = trained.evaluations_used;
        Message store = Message::Of(MessageKind::kFpStore);
        store.fingerprints = fp;
        store.params = trained.params;
        store.j_train = trained.j_train;
        store.j_val = trained.j_val;
        const Message stored = fingerprints.Call(store);
        Record(transcript, MessageKind::kFpStore, stored, digest);
      } else {
        throw EndpointError("unexpected reply to FP_CHECK: " +
                            std::string(MessageKindName(verdict.kind)));
      }
      ++step;
      submit.form = std::move(mutated.form);
      submit.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      const Message ack = population.Call(submit);
      Record(transcript, MessageKind::kSubmitChild, ack, digest);
      ++stats.submitted;
      if (ack.kind != MessageKind::kAck) {
        throw EndpointError("unexpected reply to SUBMIT_CHILD: " +
                            std::string(MessageKindName(ack.kind)));
      }
      if (!ack.accepted) break;
      ++stats.accepted;
      if (ack.remaining == 0) break;
    }
  } catch (const EndpointError& e) {
    stats.exit_status = 1;
    stats.error = e.what();
  } catch (const ProtocolError& e) {
    stats.exit_status = 1;
    stats.error = e.what();
  }
  return stats;
}

}  // namespace xcevo
