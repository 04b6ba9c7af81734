#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "taskseq/codec.hpp"
#include "taskseq/engines.hpp"

namespace taskseq {

inline constexpr int kDefaultEnginePort = 7471;
inline constexpr int kDefaultTimeoutMs = 5000;

/// Reads TASKSEQ_PORT when set, else the protocol default.
int default_engine_port();

/// Splits "host:port". A missing port falls back to default_engine_port().
struct Endpoint {
  std::string host = "127.0.0.1";
  int port = kDefaultEnginePort;
};
Endpoint parse_endpoint(const std::string& text);

/// Hosts one engine behind a newline-delimited JSON protocol. One
/// connection is served at a time; requests are processed strictly in
/// order. Message ids must increase per connection; violations are
/// answered with ok=false and the connection is closed.
///
/// Ops: info | reset | set_state {state} | get_state | step {state,
/// command, ...}. `step` applies the hosted engine to the decoded step
/// context and returns the encoded result.
class EngineServer {
 public:
  /// Binds and listens. port 0 picks an ephemeral port (see port()).
  EngineServer(std::unique_ptr<Engine> engine, int port);
  ~EngineServer();

  EngineServer(const EngineServer&) = delete;
  EngineServer& operator=(const EngineServer&) = delete;

  int port() const { return port_; }

  /// Serves until stop() is called (blocking).
  void run();

  /// Serves on a background thread.
  void start();
  void stop();

 private:
  void serve_connection(int fd);

  std::unique_ptr<Engine> engine_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

/// Client side of the engine protocol. Ids are assigned monotonically.
class WireClient {
 public:
  WireClient(const std::string& host, int port,
             int timeout_ms = kDefaultTimeoutMs);
  ~WireClient();

  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  /// Sends one request and waits for its response. Throws TimeoutError
  /// or DisconnectedError on transport failure, WireError when the
  /// server answers ok=false.
  Json request(Json message);

  StepContext step(const StepContext& ctx);
  void set_state(const WorldState& w);
  WorldState get_state();
  Json info();
  void reset();

 private:
  std::string read_line();

  int fd_ = -1;
  int timeout_ms_;
  std::uint64_t next_id_ = 1;
  std::string buffer_;
};

/// Engine adapter that forwards steps to a remote host. Satisfies the
/// local Engine interface, so pipelines are backend-agnostic.
class RemoteEngine final : public Engine {
 public:
  RemoteEngine(EngineRole role, const std::string& host, int port,
               int timeout_ms = kDefaultTimeoutMs);

  EngineRole role() const override { return role_; }
  void step(StepContext& ctx) override;
  void reset() override;

 private:
  EngineRole role_;
  std::unique_ptr<WireClient> client_;
};

}  // namespace taskseq
