#include "langgrid/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <mutex>
#include <json.hpp>
#include <ostream>
#include <thread>
#include <vector>

#include "langgrid/error.hpp"

namespace langgrid::wire {

using Json = nlohmann::ordered_json;

namespace {

/// A request failure with a protocol error code.
struct Failure {
  std::string code;
  std::string message;
};

std::string error_line(const Failure& f) {
  Json j;
  j["ok"] = false;
  j["error"] = Json{{"code", f.code}, {"message", f.message}};
  return j.dump();
}

const Json& field(const Json& req, const char* name) {
  auto it = req.find(name);
  if (it == req.end()) throw Failure{"bad_request", std::string("missing field '") + name + "'"};
  return *it;
}

std::string string_field(const Json& req, const char* name) {
  const Json& v = field(req, name);
  if (!v.is_string()) throw Failure{"bad_request", std::string("field '") + name + "' must be a string"};
  return v.get<std::string>();
}

std::int64_t int_field(const Json& req, const char* name, std::int64_t lo, std::int64_t hi) {
  const Json& v = field(req, name);
  if (!v.is_number_integer()) {
    throw Failure{"bad_request", std::string("field '") + name + "' must be an integer"};
  }
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) throw Failure{"bad_request", std::string("field '") + name + "' out of range"};
  return x;
}

EpisodeSpec parse_reset(const Json& req) {
  EpisodeSpec spec;
  const auto env = parse_env(string_field(req, "env"));
  if (!env) throw Failure{"bad_request", "env must be \"rtfm\" or \"messenger\""};
  spec.env = *env;
  const Json& stage = field(req, "stage");
  std::optional<Stage> st;
  if (stage.is_number_integer()) {
    const auto v = stage.get<std::int64_t>();
    if (v >= 1 && v <= 9) st = Stage{static_cast<int>(v)};
  } else if (stage.is_string()) {
    st = parse_stage(stage.get<std::string>());
  }
  if (!st) throw Failure{"bad_request", "stage must be 1..5 or \"S1\"..\"S5\""};
  spec.stage = *st;
  if (req.contains("split")) {
    const auto split = parse_split(string_field(req, "split"));
    if (!split) throw Failure{"bad_request", "split must be train, eval or eval_new"};
    spec.split = *split;
  }
  const Json& seed = field(req, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    throw Failure{"bad_request", "seed must be a non-negative integer"};
  }
  spec.seed = seed.get<std::uint64_t>();
  if (req.contains("n_agents")) spec.n_agents = static_cast<int>(int_field(req, "n_agents", 1, 16));
  if (req.contains("grid")) spec.grid = static_cast<int>(int_field(req, "grid", 0, 64));
  return spec;
}

Json observation_json(const Episode& ep, int agent) {
  const Observation o = ep.observe(agent);
  Json j;
  j["agent"] = agent;
  if (ep.is_rtfm()) {
    j["cells"] = o.text;
    j["inventory"] = o.inventory;
  } else {
    j["cells"] = o.symbols;
    j["has_message"] = o.has_message;
  }
  return j;
}

Json observations_json(const Episode& ep) {
  Json arr = Json::array();
  for (int a = 0; a < ep.n_agents(); ++a) arr.push_back(observation_json(ep, a));
  return arr;
}

Json config_json(const EpisodeSpec& s) {
  Json j;
  j["env"] = std::string(to_string(s.env));
  j["stage"] = s.stage.value;
  j["split"] = std::string(to_string(s.split));
  j["grid"] = s.grid;
  j["n_agents"] = s.n_agents;
  j["seed"] = s.seed;
  return j;
}

std::vector<Action> parse_actions(const Json& req, int n_agents) {
  const Json& v = field(req, "actions");
  if (!v.is_array()) throw Failure{"bad_actions", "actions must be an array"};
  if (static_cast<int>(v.size()) != n_agents) {
    throw Failure{"bad_actions", "expected " + std::to_string(n_agents) + " actions, got " +
                                     std::to_string(v.size())};
  }
  std::vector<Action> out;
  for (const Json& a : v) {
    std::optional<Action> act;
    if (a.is_string()) {
      act = parse_action(a.get<std::string>());
    } else if (a.is_number_integer()) {
      const auto k = a.get<std::int64_t>();
      if (k >= 0 && k < kNumActions) act = static_cast<Action>(k);
    }
    if (!act) throw Failure{"bad_actions", "actions are up, down, left, right, stay or 0..4"};
    out.push_back(*act);
  }
  return out;
}

}  // namespace

Session::Session() = default;
Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

std::string Session::handle(std::string_view line) {
  try {
    Json req;
    try {
      req = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Failure{"parse_error", "request is not valid JSON"};
    }
    if (!req.is_object()) throw Failure{"parse_error", "request must be a JSON object"};
    const std::string cmd = string_field(req, "cmd");

    Json res;
    res["ok"] = true;
    res["cmd"] = cmd;
    if (cmd == "reset") {
      const EpisodeSpec spec = parse_reset(req);
      std::unique_ptr<Episode> fresh;
      try {
        fresh = std::make_unique<Episode>(spec);
      } catch (const ConfigError& e) {
        throw Failure{"bad_config", e.what()};
      } catch (const GenerationError& e) {
        throw Failure{"bad_config", e.what()};
      }
      episode_ = std::move(fresh);
      res["config"] = config_json(episode_->spec());
      res["manual"] = episode_->manual().sentences;
      res["goal"] = episode_->manual().goal;
      res["observations"] = observations_json(*episode_);
      res["step"] = 0;
    } else if (cmd == "step") {
      if (!episode_) throw Failure{"no_episode", "reset before step"};
      if (episode_->done()) throw Failure{"episode_done", "episode finished; reset to start another"};
      const std::vector<Action> actions = parse_actions(req, episode_->n_agents());
      const StepOutcome out = episode_->step(actions);
      res["observations"] = observations_json(*episode_);
      res["rewards"] = out.rewards;
      res["done"] = out.done;
      res["win"] = out.win;
      Json events = Json::array();
      for (const Event& e : out.events) events.push_back(e.token());
      res["events"] = events;
      res["step"] = episode_->step_count();
    } else if (cmd == "render") {
      if (!episode_) throw Failure{"no_episode", "reset before render"};
      Json rows = Json::array();
      const std::string text = episode_->render();
      std::size_t start = 0;
      while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        const std::string row = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!row.empty()) rows.push_back(row);
        if (end == std::string::npos) break;
        start = end + 1;
      }
      res["rows"] = rows;
    } else if (cmd == "info") {
      if (episode_) {
        res["config"] = config_json(episode_->spec());
        res["step"] = episode_->step_count();
        res["done"] = episode_->done();
        res["win"] = episode_->win();
      } else {
        res["config"] = nullptr;
      }
    } else if (cmd == "transcript") {
      if (!episode_) throw Failure{"no_episode", "reset before transcript"};
      res["text"] = episode_->transcript().to_text();
    } else if (cmd == "close") {
      closed_ = true;
    } else {
      throw Failure{"unknown_command", "unknown command '" + cmd + "'"};
    }
    return res.dump();
  } catch (const Failure& f) {
    return error_line(f);
  } catch (const std::exception& e) {
    return error_line({"bad_request", e.what()});
  }
}

void serve_stream(std::istream& in, std::ostream& out) {
  Session session;
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n' << std::flush;
  }
}

// ---- TCP ----

namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

/// Reads until a newline; false on EOF or error.
bool read_line(int fd, std::string& buffer, std::string& line) {
  while (true) {
    const std::size_t nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

void serve_connection(int fd) {
  Session session;
  std::string buffer, line;
  while (!session.closed() && read_line(fd, buffer, line)) {
    if (line.empty()) continue;
    if (!send_all(fd, session.handle(line) + "\n")) break;
  }
  ::close(fd);
}

}  // namespace

Server::Server(const std::string& host, std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error("serve: host must be an IPv4 address, got '" + host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error("serve: cannot bind " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Server::~Server() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::stop() { stopping_ = true; }

void Server::run() {
  std::vector<std::thread> workers;
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    workers.emplace_back(serve_connection, fd);
  }
  for (std::thread& t : workers) t.join();
}

Client::Client(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
      ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    throw Error("client: cannot connect to " + host + ":" + std::to_string(port));
  }
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

std::string Client::request(std::string_view line) {
  std::string out(line);
  out += '\n';
  if (!send_all(fd_, out)) throw Error("client: send failed");
  std::string response;
  if (!read_line(fd_, buffer_, response)) throw Error("client: connection closed");
  return response;
}

}  // namespace langgrid::wire
