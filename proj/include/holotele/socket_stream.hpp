#pragma once

// Minimal blocking TCP byte streams (POSIX) wrapped as std::iostream so the
// frame reader/writer run unchanged over a pipe or a socket.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <istream>
#include <memory>
#include <streambuf>
#include <string>
#include <thread>

#include "holotele/error.hpp"

namespace holotele::net {

class FdStreambuf : public std::streambuf {
public:
  explicit FdStreambuf(int fd) : fd_(fd) {
    setg(in_, in_, in_);
    setp(out_, out_ + sizeof(out_));
  }
  ~FdStreambuf() override {
    sync();
    if (fd_ >= 0) ::close(fd_);
  }
  FdStreambuf(const FdStreambuf&) = delete;
  FdStreambuf& operator=(const FdStreambuf&) = delete;

protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    ssize_t n;
    do {
      n = ::recv(fd_, in_, sizeof(in_), 0);
    } while (n < 0 && errno == EINTR);
    if (n <= 0) return traits_type::eof();
    setg(in_, in_, in_ + n);
    return traits_type::to_int_type(*gptr());
  }

  int_type overflow(int_type ch) override {
    if (flush_out() < 0) return traits_type::eof();
    if (!traits_type::eq_int_type(ch, traits_type::eof())) {
      *pptr() = traits_type::to_char_type(ch);
      pbump(1);
    }
    return traits_type::not_eof(ch);
  }

  int sync() override { return flush_out(); }

private:
  int flush_out() {
    const char* p = pbase();
    while (p < pptr()) {
      const ssize_t n = ::send(fd_, p, static_cast<std::size_t>(pptr() - p), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        return -1;
      }
      p += n;
    }
    setp(out_, out_ + sizeof(out_));
    return 0;
  }

  int fd_;
  char in_[1 << 16];
  char out_[1 << 16];
};

class SocketStream : public std::iostream {
public:
  explicit SocketStream(int fd) : std::iostream(nullptr), buf_(std::make_unique<FdStreambuf>(fd)) {
    rdbuf(buf_.get());
  }

private:
  std::unique_ptr<FdStreambuf> buf_;
};

struct Endpoint {
  std::string host;
  std::string port;
};

/// Parses "HOST:PORT" (the part after "tcp:").
inline Endpoint parse_endpoint(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
    throw ConfigError("stream address must be HOST:PORT, got \"" + addr + "\"");
  return {addr.substr(0, colon), addr.substr(colon + 1)};
}

namespace detail {

struct AddrInfo {
  addrinfo* list = nullptr;
  ~AddrInfo() {
    if (list) freeaddrinfo(list);
  }
};

inline AddrInfo resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo info;
  if (int rc = ::getaddrinfo(ep.host.c_str(), ep.port.c_str(), &hints, &info.list); rc != 0)
    throw IoError("cannot resolve " + ep.host + ":" + ep.port + ": " + gai_strerror(rc));
  return info;
}

} // namespace detail

/// Listening socket; accept() blocks for one peer.
class Listener {
public:
  explicit Listener(const Endpoint& ep) {
    auto info = detail::resolve(ep, true);
    fd_ = ::socket(info.list->ai_family, info.list->ai_socktype, info.list->ai_protocol);
    if (fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd_, info.list->ai_addr, info.list->ai_addrlen) < 0 || ::listen(fd_, 1) < 0) {
      const std::string err = std::strerror(errno);
      ::close(fd_);
      throw IoError("cannot listen on " + ep.host + ":" + ep.port + ": " + err);
    }
  }
  ~Listener() {
    if (fd_ >= 0) ::close(fd_);
  }
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  /// Port actually bound (useful with port "0").
  int port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  std::unique_ptr<SocketStream> accept() {
    int client;
    do {
      client = ::accept(fd_, nullptr, nullptr);
    } while (client < 0 && errno == EINTR);
    if (client < 0) throw IoError(std::string("accept: ") + std::strerror(errno));
    return std::make_unique<SocketStream>(client);
  }

private:
  int fd_ = -1;
};

/// Connects, retrying until `timeout` so the peer may start second.
inline std::unique_ptr<SocketStream> connect(const Endpoint& ep,
                                             std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::string last_error;
  while (true) {
    auto info = detail::resolve(ep, false);
    int fd = ::socket(info.list->ai_family, info.list->ai_socktype, info.list->ai_protocol);
    if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, info.list->ai_addr, info.list->ai_addrlen) == 0) return std::make_unique<SocketStream>(fd);
    last_error = std::strerror(errno);
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw IoError("cannot connect to " + ep.host + ":" + ep.port + ": " + last_error);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

} // namespace holotele::net
