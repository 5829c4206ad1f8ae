#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "langgrid/game.hpp"

namespace langgrid::wire {

/// One client's state: at most one live episode. Requests and responses are
/// single-line JSON objects; see docs/protocol.md for the schema.
class Session {
 public:
  Session();
  ~Session();
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;

  /// Answers one request line. Never throws; failures become error responses,
  /// and an error response leaves the session exactly as it was.
  std::string handle(std::string_view line);

  bool closed() const { return closed_; }
  const Episode* episode() const { return episode_.get(); }

 private:
  std::unique_ptr<Episode> episode_;
  bool closed_ = false;
};

/// Reads request lines from `in` until EOF or `close`, writing one response line each.
void serve_stream(std::istream& in, std::ostream& out);

/// Line-oriented TCP server, one thread and one Session per connection.
class Server {
 public:
  /// Binds host:port (port 0 picks a free port). Throws Error when binding fails.
  Server(const std::string& host, std::uint16_t port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return port_; }
  /// Accepts connections until stop() is called.
  void run();
  void stop();

 private:
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
};

/// Minimal blocking client used by tests and the CLI.
class Client {
 public:
  Client(const std::string& host, std::uint16_t port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  /// Sends one line and returns the response line (without the newline).
  std::string request(std::string_view line);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace langgrid::wire
