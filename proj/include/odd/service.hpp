#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>

#include "odd/robot.hpp"
#include "odd/wire.hpp"

namespace odd {

/// Command silence policy: the last command is held for `hold` seconds of
/// simulated time, then ramped linearly to zero over `ramp`.
struct SafetyStop {
  double hold = 0.15;
  double ramp = 0.1;
};

/// The stepping agent of the service. Command intake is thread-safe; tick()
/// must only be called from the single stepping thread.
class SimSession {
 public:
  enum class Offer { Applied, Stale, Busy };

  SimSession(SimConfig config, Course course, SafetyStop safety = {});

  /// Claims the driver slot on first use. Commands from other connections
  /// are refused while it is held; a seq not above the connection's last one
  /// is discarded.
  Offer submit(int connection, const CommandMessage& msg);
  /// Frees the driver slot if `connection` held it. The last command then
  /// times out like any silent driver.
  void release(int connection);

  StateMessage tick();

  StateMessage snapshot() const;
  /// Operator twist and d_dot applied on the last tick, after the safety stop.
  OddRate applied_command() const;
  const Course& course() const noexcept { return course_; }
  const SimConfig& config() const noexcept { return robot_.config(); }

 private:
  StateMessage make_snapshot() const;

  Course course_;
  SafetyStop safety_;
  ClosedLoopRobot robot_;

  mutable std::mutex mailbox_mutex_;
  std::optional<int> driver_;
  std::unordered_map<int, std::int64_t> last_seq_;
  std::optional<CommandMessage> pending_;

  // Stepping thread only.
  std::optional<CommandMessage> active_;
  double active_since_ = 0.0;

  mutable std::mutex snapshot_mutex_;
  StateMessage snapshot_;
  OddRate applied_;
};

/// Builds the starting state from the course spawn pose.
RobotState spawn_state(const SimConfig& config, const Course& course);

struct ServerOptions {
  int port = 8765;  ///< 0 picks a free port
  double rate_hz = 200.0;
  double broadcast_hz = 50.0;
  SafetyStop safety;
};

/// Real-time front end: one stepping thread, one broadcaster, one handler
/// per connection. Accepts WebSocket upgrades and raw line-delimited JSON on
/// the same port, and serves `GET /course` and `GET /state`.
class Server {
 public:
  Server(SimConfig config, Course course, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Throws PortUnavailable.
  void start();
  void stop();

  int port() const noexcept { return port_; }
  /// Simulated and wall-clock seconds since start().
  double sim_time() const;
  double wall_time() const;
  const SimSession& session() const noexcept { return session_; }

 private:
  struct Client;

  void accept_loop();
  void sim_loop();
  void broadcast_loop();
  void serve_connection(std::shared_ptr<Client> client);
  void handle_message(Client& client, std::string_view text);

  ServerOptions options_;
  SimSession session_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::chrono::steady_clock::time_point started_;
  std::atomic<std::uint64_t> ticks_{0};

  std::mutex clients_mutex_;
  std::list<std::shared_ptr<Client>> clients_;
  std::list<std::thread> handlers_;
  std::atomic<int> next_id_{1};

  std::mutex outbox_mutex_;
  std::condition_variable outbox_cv_;
  std::optional<StateMessage> outbox_;

  std::thread accept_thread_;
  std::thread sim_thread_;
  std::thread broadcast_thread_;
};

}  // namespace odd
