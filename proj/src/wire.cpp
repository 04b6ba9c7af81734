#include "taskseq/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "taskseq/errors.hpp"

namespace taskseq {

namespace {

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

/// Blocking send of the whole buffer.
bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n =
        ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && (errno == EINTR)) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

int default_engine_port() {
  if (const char* env = std::getenv("TASKSEQ_PORT")) {
    const int p = std::atoi(env);
    if (p > 0 && p < 65536) return p;
  }
  return kDefaultEnginePort;
}

Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  ep.port = default_engine_port();
  if (text.empty()) return ep;
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    ep.host = text;
    return ep;
  }
  ep.host = text.substr(0, colon);
  const std::string port_text = text.substr(colon + 1);
  const int p = std::atoi(port_text.c_str());
  if (p <= 0 || p >= 65536) {
    throw ConfigurationError("bad endpoint port in '" + text + "'");
  }
  ep.port = p;
  return ep;
}

// ---------------------------------------------------------------------------
// Server.
// ---------------------------------------------------------------------------

EngineServer::EngineServer(std::unique_ptr<Engine> engine, int port)
    : engine_(std::move(engine)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw WireError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
      0) {
    close_fd(listen_fd_);
    throw WireError("bind() failed on port " + std::to_string(port));
  }
  if (::listen(listen_fd_, 1) < 0) {
    close_fd(listen_fd_);
    throw WireError("listen() failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

EngineServer::~EngineServer() {
  stop();
}

void EngineServer::run() {
  while (!stopping_.load()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int r = ::poll(&pfd, 1, 200);
    if (r <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    serve_connection(fd);
  }
}

void EngineServer::start() {
  thread_ = std::thread([this] { run(); });
}

void EngineServer::stop() {
  stopping_.store(true);
  if (thread_.joinable()) thread_.join();
  close_fd(listen_fd_);
}

void EngineServer::serve_connection(int fd) {
  std::string buffer;
  std::int64_t last_id = 0;
  bool have_state = false;
  WorldState stored;

  auto respond = [&](const Json& j) { return send_all(fd, j.dump() + "\n"); };

  while (!stopping_.load()) {
    // Pull one newline-delimited message.
    auto nl = buffer.find('\n');
    while (nl == std::string::npos) {
      pollfd pfd{fd, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, 200);
      if (stopping_.load()) {
        ::close(fd);
        return;
      }
      if (pr == 0) continue;
      char chunk[4096];
      const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) {
        ::close(fd);
        return;  // client went away
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
      nl = buffer.find('\n');
    }
    const std::string line = buffer.substr(0, nl);
    buffer.erase(0, nl + 1);

    Json msg;
    try {
      msg = Json::parse(line);
    } catch (const Json::parse_error& e) {
      respond(Json{{"ok", false}, {"error", e.what()}});
      break;
    }

    const std::int64_t id =
        msg.contains("id") && msg["id"].is_number_integer()
            ? msg["id"].get<std::int64_t>()
            : -1;
    if (id <= last_id) {
      respond(Json{{"id", id},
                   {"ok", false},
                   {"error", "message id must increase per connection"}});
      break;
    }
    last_id = id;

    const std::string op =
        msg.contains("op") && msg["op"].is_string() ? msg["op"] : "";
    Json reply{{"id", id}, {"ok", true}};
    bool fatal = false;
    try {
      if (op == "info") {
        reply["role"] = engine_role_name(engine_->role());
        reply["protocol"] = 1;
      } else if (op == "reset") {
        engine_->reset();
        have_state = false;
      } else if (op == "set_state") {
        stored = world_from_json(msg.at("state"));
        have_state = true;
      } else if (op == "get_state") {
        if (!have_state) throw WireError("no state stored");
        reply["state"] = world_to_json(stored);
      } else if (op == "step") {
        StepContext ctx = step_context_from_json(msg);
        engine_->step(ctx);
        stored = ctx.world;
        have_state = true;
        const Json out = step_context_to_json(ctx);
        for (auto it = out.begin(); it != out.end(); ++it) {
          reply[it.key()] = it.value();
        }
      } else {
        reply = Json{{"id", id}, {"ok", false}, {"error", "unknown op"}};
        fatal = true;
      }
    } catch (const std::exception& e) {
      reply = Json{{"id", id}, {"ok", false}, {"error", e.what()}};
      fatal = true;
    }
    if (!respond(reply) || fatal) break;
  }
  ::close(fd);
}

// ---------------------------------------------------------------------------
// Client.
// ---------------------------------------------------------------------------

WireClient::WireClient(const std::string& host, int port, int timeout_ms)
    : timeout_ms_(timeout_ms) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw WireError("socket() failed");
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    close_fd(fd_);
    throw DisconnectedError("bad host address '" + host + "'");
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    close_fd(fd_);
    throw DisconnectedError("connect to " + host + ":" +
                            std::to_string(port) + " failed");
  }
}

WireClient::~WireClient() { close_fd(fd_); }

std::string WireClient::read_line() {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, timeout_ms_);
    if (pr == 0) throw TimeoutError("remote engine response timed out");
    if (pr < 0) throw DisconnectedError("poll() failed");
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n <= 0) throw DisconnectedError("remote engine closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Json WireClient::request(Json message) {
  if (fd_ < 0) throw DisconnectedError("client not connected");
  message["id"] = next_id_++;
  if (!send_all(fd_, message.dump() + "\n")) {
    throw DisconnectedError("send to remote engine failed");
  }
  Json reply;
  try {
    reply = Json::parse(read_line());
  } catch (const Json::parse_error& e) {
    throw DisconnectedError(std::string("bad response: ") + e.what());
  }
  if (!reply.contains("ok") || !reply["ok"].is_boolean() ||
      !reply["ok"].get<bool>()) {
    const std::string err = reply.contains("error") && reply["error"].is_string()
                                ? reply["error"].get<std::string>()
                                : "unspecified error";
    throw WireError("remote engine error: " + err);
  }
  return reply;
}

StepContext WireClient::step(const StepContext& ctx) {
  Json msg = step_context_to_json(ctx);
  msg["op"] = "step";
  return step_context_from_json(request(std::move(msg)));
}

void WireClient::set_state(const WorldState& w) {
  request(Json{{"op", "set_state"}, {"state", world_to_json(w)}});
}

WorldState WireClient::get_state() {
  return world_from_json(request(Json{{"op", "get_state"}}).at("state"));
}

Json WireClient::info() { return request(Json{{"op", "info"}}); }

void WireClient::reset() { request(Json{{"op", "reset"}}); }

// ---------------------------------------------------------------------------
// Remote engine adapter.
// ---------------------------------------------------------------------------

RemoteEngine::RemoteEngine(EngineRole role, const std::string& host, int port,
                           int timeout_ms)
    : role_(role),
      client_(std::make_unique<WireClient>(host, port, timeout_ms)) {
  const Json info = client_->info();
  const std::string remote_role =
      info.contains("role") && info["role"].is_string() ? info["role"] : "";
  if (remote_role != engine_role_name(role)) {
    throw ConfigurationError("remote engine hosts role '" + remote_role +
                             "', expected '" + engine_role_name(role) + "'");
  }
}

void RemoteEngine::step(StepContext& ctx) { ctx = client_->step(ctx); }

void RemoteEngine::reset() { client_->reset(); }

}  // namespace taskseq
