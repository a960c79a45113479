// Copyright 2026 The d2tx Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// POSIX line channels to an adapter process or socket.

#include <arpa/inet.h>
#include <csignal>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>

#include "d2tx/bridge.hpp"
#include "d2tx/error.hpp"

namespace d2tx::bridge {

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

// Line reader/writer over a pair of file descriptors.
class FdLineIo {
 public:
  FdLineIo(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  void write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t n = send_or_write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("write to adapter failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw BridgeError("adapter reply timed out");
      pollfd pfd{read_fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) throw BridgeError("adapter reply timed out");
      char chunk[65536];
      ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("read from adapter failed: ") + std::strerror(errno));
      }
      if (n == 0) throw BridgeError("adapter closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void reset() { buffer_.clear(); }

 private:
  static ssize_t send_or_write(int fd, const char* p, std::size_t n);

  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

ssize_t FdLineIo::send_or_write(int fd, const char* p, std::size_t n) {
  ssize_t r = ::send(fd, p, n, MSG_NOSIGNAL);
  if (r < 0 && errno == ENOTSOCK) r = ::write(fd, p, n);
  return r;
}

class SubprocessChannel : public Channel {
 public:
  explicit SubprocessChannel(std::string command) : command_(std::move(command)) {
    ignore_sigpipe_once();
    spawn();
  }

  ~SubprocessChannel() override { shutdown(); }

  std::string roundtrip(const std::string& line, std::chrono::milliseconds timeout) override {
    if (pid_ < 0) spawn();
    try {
      io_->write_line(line);
      return io_->read_line(timeout);
    } catch (const BridgeError&) {
      // The stream may now be out of step with requests; restart on next use.
      shutdown();
      throw;
    }
  }

 private:
  void spawn() {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw BridgeError("pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BridgeError("pipe() failed");
    }
    pid_t pid = ::fork();
    if (pid < 0) throw BridgeError("fork() failed");
    if (pid == 0) {
      // Own process group, so shutdown also reaches anything the shell spawned.
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    io_ = std::make_unique<FdLineIo>(read_fd_, write_fd_);
  }

  void shutdown() {
    if (pid_ < 0) return;
    ::close(write_fd_);
    ::close(read_fd_);
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        ::kill(-pid_, SIGKILL);
        pid_ = -1;
        return;
      }
      ::usleep(2000);
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }

  std::string command_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::unique_ptr<FdLineIo> io_;
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(const std::string& host_port) {
    ignore_sigpipe_once();
    auto colon = host_port.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("tcp endpoint must be host:port");
    std::string host = host_port.substr(0, colon);
    std::string port = host_port.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0) {
      throw BridgeError("cannot resolve adapter endpoint '" + host_port + "'");
    }
    for (auto* p = res; p; p = p->ai_next) {
      int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw BridgeError("cannot connect to adapter at '" + host_port + "'");
    io_ = std::make_unique<FdLineIo>(fd_, fd_);
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  std::string roundtrip(const std::string& line, std::chrono::milliseconds timeout) override {
    if (fd_ < 0) throw BridgeError("adapter connection is closed");
    try {
      io_->write_line(line);
      return io_->read_line(timeout);
    } catch (const BridgeError&) {
      ::close(fd_);
      fd_ = -1;
      throw;
    }
  }

 private:
  int fd_ = -1;
  std::unique_ptr<FdLineIo> io_;
};

}  // namespace

std::unique_ptr<Channel> open_subprocess_channel(const std::string& command) {
  return std::make_unique<SubprocessChannel>(command);
}

std::unique_ptr<Channel> open_tcp_channel(const std::string& host_port) {
  return std::make_unique<TcpChannel>(host_port);
}

}  // namespace d2tx::bridge
