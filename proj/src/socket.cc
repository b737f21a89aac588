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
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "xcevo/coordinator.h"

namespace xcevo {

namespace {

bool WriteAll(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n =
        ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<size_t>(n);
  }
  return true;
}

// 1 on success, 0 on clean EOF before any byte, -1 on error or short read.
int ReadAll(int fd, char* buf, size_t len) {
  size_t off = 0;
  while (off < len) {
    const ssize_t n = ::recv(fd, buf + off, len - off, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0) return off == 0 ? 0 : -1;
    if (n < 0) return -1;
    off += static_cast<size_t>(n);
  }
  return 1;
}

enum class ReadResult { kOk, kEof, kError, kTooLarge };

ReadResult ReadFrame(int fd, std::string* body) {
  unsigned char prefix[4];
  const int r = ReadAll(fd, reinterpret_cast<char*>(prefix), 4);
  if (r == 0) return ReadResult::kEof;
  if (r < 0) return ReadResult::kError;
  const uint32_t n = FrameLength(prefix);
  if (n > kMaxFrameBytes) return ReadResult::kTooLarge;
  body->resize(n);
  if (n > 0 && ReadAll(fd, body->data(), n) != 1) return ReadResult::kError;
  return ReadResult::kOk;
}

}  // namespace

void ParseAddress(const std::string& address, std::string* host,
                  uint16_t* port) {
  const size_t colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 ||
      colon + 1 == address.size()) {
    throw EndpointError("endpoint must be host:port, got \"" + address + "\"");
  }
  const std::string p = address.substr(colon + 1);
  unsigned long v = 0;
  for (char c : p) {
    if (c < '0' || c > '9') {
      throw EndpointError("bad port in \"" + address + "\"");
    }
    v = v * 10 + static_cast<unsigned long>(c - '0');
    if (v > 65535) throw EndpointError("port out of range in \"" + address + "\"");
  }
  *host = address.substr(0, colon);
  *port = static_cast<uint16_t>(v);
}

// ---------------------------------------------------------------------------
// Client

TcpEndpoint::TcpEndpoint(std::string address, BackoffPolicy backoff)
    : backoff_(backoff) {
  ParseAddress(address, &host_, &port_);
}

TcpEndpoint::~TcpEndpoint() { Close(); }

void TcpEndpoint::Close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void TcpEndpoint::Connect() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res) != 0) {
    throw EndpointError("cannot resolve " + host_);
  }
  int fd = -1;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw EndpointError("cannot connect to " + host_ + ":" + port);
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
}

Message TcpEndpoint::Call(const Message& request) {
  const std::string frame = FrameBody(EncodeMessage(request));
  std::chrono::milliseconds delay = backoff_.initial;
  std::string last_error;
  // A request whose reply was lost is resent; every request kind is safe to
  // replay except SUBMIT_CHILD, which the server may then count twice. The
  // budget still holds because the server counts acceptances.
  for (size_t attempt = 0; attempt <= backoff_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::min(delay * 2, backoff_.max);
    }
    try {
      if (fd_ < 0) Connect();
    } catch (const EndpointError& e) {
      last_error = e.what();
      continue;
    }
    std::string body;
    if (!WriteAll(fd_, frame) || ReadFrame(fd_, &body) != ReadResult::kOk) {
      last_error = "connection to " + host_ + " lost";
      Close();
      continue;
    }
    return DecodeMessage(body);
  }
  throw EndpointError("giving up after " +
                      std::to_string(backoff_.max_retries + 1) +
                      " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Server

TcpServer::TcpServer(const std::string& address, Handler handler)
    : handler_(std::move(handler)) {
  std::string host;
  uint16_t port = 0;
  ParseAddress(address, &host, &port);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string ps = std::to_string(port);
  if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), ps.c_str(), &hints,
                    &res) != 0 ||
      !res) {
    throw EndpointError("cannot resolve bind address " + address);
  }
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw EndpointError("socket() failed");
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw EndpointError("cannot bind " + address + ": " + err);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  accept_thread_ = std::thread([this] { AcceptLoop(); });
}

TcpServer::~TcpServer() { Shutdown(); }

void TcpServer::AcceptLoop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    client_fds_.push_back(fd);
    ++active_;
    workers_.emplace_back([this, fd] { Serve(fd); });
  }
}

void TcpServer::Serve(int fd) {
  std::string body;
  while (true) {
    const ReadResult r = ReadFrame(fd, &body);
    if (r == ReadResult::kEof || r == ReadResult::kError) break;
    Message reply;
    bool close_after = false;
    if (r == ReadResult::kTooLarge) {
      reply = Message::Error(kErrMalformed, "frame exceeds size limit");
      close_after = true;
    } else {
      try {
        reply = handler_(DecodeMessage(body));
      } catch (const ProtocolError& e) {
        reply = Message::Error(kErrMalformed, e.what());
        close_after = true;
      }
    }
    if (!WriteAll(fd, FrameBody(EncodeMessage(reply))) || close_after) break;
  }
  ::shutdown(fd, SHUT_RDWR);
  --active_;
}

void TcpServer::Shutdown() {
  if (stopping_.exchange(true)) {
    if (accept_thread_.joinable()) accept_thread_.join();
    return;
  }
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  std::vector<std::thread> threads;
  {
    std::lock_guard<std::mutex> lock(mu_);
    // Unblocks connections waiting for their next request; a request being
    // handled still gets its reply written.
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RD);
    threads.swap(workers_);
  }
  for (auto& t : threads) t.join();
  std::lock_guard<std::mutex> lock(mu_);
  for (int fd : client_fds_) ::close(fd);
  client_fds_.clear();
}

}  // namespace xcevo
