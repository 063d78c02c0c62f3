#include "odd/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cerrno>
#include <cstring>
#include <iostream>

namespace odd {

RobotState spawn_state(const SimConfig& config, const Course& course) {
  RobotState s = initial_state(config);
  s.x = course.spawn.x;
  s.y = course.spawn.y;
  s.phi = wrap_angle(course.spawn.phi);
  if (course.spawn.d) s.d = *course.spawn.d;
  return s;
}

SimSession::SimSession(SimConfig config, Course course, SafetyStop safety)
    : course_(std::move(course)),
      safety_(safety),
      robot_(config, spawn_state(config, course_)) {
  snapshot_ = make_snapshot();
}

SimSession::Offer SimSession::submit(int connection, const CommandMessage& msg) {
  std::lock_guard lock(mailbox_mutex_);
  if (driver_ && *driver_ != connection) return Offer::Busy;
  const auto last = last_seq_.find(connection);
  if (last != last_seq_.end() && msg.seq <= last->second) return Offer::Stale;
  driver_ = connection;
  last_seq_[connection] = msg.seq;
  pending_ = msg;
  return Offer::Applied;
}

void SimSession::release(int connection) {
  std::lock_guard lock(mailbox_mutex_);
  if (driver_ == connection) driver_.reset();
  last_seq_.erase(connection);
}

StateMessage SimSession::tick() {
  {
    std::lock_guard lock(mailbox_mutex_);
    if (pending_) {
      active_ = pending_;
      active_since_ = robot_.state().t;
      pending_.reset();
    }
  }

  OperatorCommand cmd;
  if (active_) {
    const double silence = robot_.state().t - active_since_;
    const double scale =
        silence <= safety_.hold
            ? 1.0
            : std::max(0.0, 1.0 - (silence - safety_.hold) / std::max(safety_.ramp, 1e-12));
    cmd.rate = {scale * active_->vx, scale * active_->vy, scale * active_->wz,
                scale * active_->ddot};
    cmd.d_setpoint = active_->d_setpoint;
  }
  robot_.tick(cmd);

  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = make_snapshot();
  applied_ = cmd.rate;
  return snapshot_;
}

StateMessage SimSession::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

OddRate SimSession::applied_command() const {
  std::lock_guard lock(snapshot_mutex_);
  return applied_;
}

StateMessage SimSession::make_snapshot() const {
  const RobotState& s = robot_.state();
  return {s.t,          s.x,          s.y,            s.phi,          s.d,          s.pitch,
          s.rate.x_dot, s.rate.y_dot, s.rate.phi_dot, s.rate.d_dot,   course_.id};
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxFrame = 1 << 20;
constexpr std::size_t kMaxHeader = 16 * 1024;

std::string websocket_accept(std::string_view key) {
  const std::string input = std::string(key) + std::string(kWebSocketGuid);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha1(), nullptr);
  unsigned char encoded[64];
  const int n = EVP_EncodeBlock(encoded, digest, static_cast<int>(len));
  return {reinterpret_cast<const char*>(encoded), static_cast<std::size_t>(n)};
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string ws_frame(std::uint8_t opcode, std::string_view payload) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | opcode));
  const std::size_t n = payload.size();
  if (n < 126) {
    f.push_back(static_cast<char>(n));
  } else if (n < 65536) {
    f.push_back(126);
    f.push_back(static_cast<char>(n >> 8));
    f.push_back(static_cast<char>(n & 0xff));
  } else {
    f.push_back(127);
    for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xff));
  }
  f.append(payload);
  return f;
}

std::string http_response(int status, std::string_view reason, std::string_view type,
                          std::string_view body) {
  std::string r = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) + "\r\n";
  r += "Content-Type: " + std::string(type) + "\r\n";
  r += "Content-Length: " + std::to_string(body.size()) + "\r\n";
  r += "Access-Control-Allow-Origin: *\r\nConnection: close\r\n\r\n";
  r.append(body);
  return r;
}

}  // namespace

struct Server::Client {
  int fd = -1;
  int id = 0;
  std::atomic<bool> websocket{false};
  std::atomic<bool> subscribed{false};
  std::atomic<bool> open{true};
  std::mutex send_mutex;
  std::string inbox;

  bool send_raw(std::string_view data) {
    std::lock_guard lock(send_mutex);
    if (!open || fd < 0) return false;
    while (!data.empty()) {
      const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
      if (n <= 0) {
        if (n < 0 && errno == EINTR) continue;
        open = false;
        return false;
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
  }

  bool send_message(std::string_view text) {
    if (websocket) return send_raw(ws_frame(0x1, text));
    std::string line(text);
    line += '\n';
    return send_raw(line);
  }

  // Appends whatever arrives; false once the peer is gone or the server
  // stops. With `patience_ms` >= 0 it also gives up (returning true) when
  // nothing arrives in that long.
  bool fill(const std::atomic<bool>& running, int patience_ms = -1) {
    char buf[4096];
    int waited = 0;
    while (running && open) {
      pollfd p{fd, POLLIN, 0};
      const int ready = ::poll(&p, 1, 100);
      if (ready < 0 && errno == EINTR) continue;
      if (ready < 0) return false;
      if (ready == 0) {
        waited += 100;
        if (patience_ms >= 0 && waited >= patience_ms) return true;
        continue;
      }
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      inbox.append(buf, static_cast<std::size_t>(n));
      return true;
    }
    return false;
  }
};

Server::Server(SimConfig config, Course course, ServerOptions options)
    : options_(options),
      session_([&] {
        if (!(options.rate_hz > 0.0) || !(options.broadcast_hz > 0.0)) {
          throw Error(ErrorCode::ConfigError, "service rates must be positive");
        }
        config.dt = 1.0 / options.rate_hz;
        return config;
      }(), std::move(course), options.safety) {}

Server::~Server() { stop(); }

void Server::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::PortUnavailable, "cannot create socket");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::PortUnavailable,
                "cannot listen on port " + std::to_string(options_.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  running_ = true;
  started_ = std::chrono::steady_clock::now();
  sim_thread_ = std::thread(&Server::sim_loop, this);
  broadcast_thread_ = std::thread(&Server::broadcast_loop, this);
  accept_thread_ = std::thread(&Server::accept_loop, this);
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  outbox_cv_.notify_all();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (sim_thread_.joinable()) sim_thread_.join();
  if (broadcast_thread_.joinable()) broadcast_thread_.join();
  // Handlers poll with a short timeout and exit on their own once running_
  // drops.
  for (std::thread& t : handlers_) t.join();
  handlers_.clear();
  clients_.clear();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

double Server::sim_time() const {
  return static_cast<double>(ticks_.load()) * session_.config().dt;
}

double Server::wall_time() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

void Server::sim_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration<double>(session_.config().dt);
  const auto decimation = static_cast<std::uint64_t>(
      std::max(1.0, std::round(options_.rate_hz / options_.broadcast_hz)));
  while (running_) {
    // Deadlines are absolute so sleep jitter never accumulates; a late tick
    // is caught up immediately.
    const auto deadline =
        started_ + std::chrono::duration_cast<clock::duration>(period * static_cast<double>(ticks_ + 1));
    std::this_thread::sleep_until(deadline);
    StateMessage snap;
    try {
      snap = session_.tick();
    } catch (const Error& e) {
      std::cerr << "sim: " << to_string(e.code()) << ": " << e.what() << '\n';
      running_ = false;
      outbox_cv_.notify_all();
      return;
    }
    const std::uint64_t n = ++ticks_;
    if (n % decimation == 0) {
      std::lock_guard lock(outbox_mutex_);
      outbox_ = std::move(snap);
      outbox_cv_.notify_one();
    }
  }
}

void Server::broadcast_loop() {
  while (true) {
    StateMessage snap;
    {
      std::unique_lock lock(outbox_mutex_);
      outbox_cv_.wait(lock, [this] { return outbox_.has_value() || !running_; });
      if (!running_) return;
      snap = std::move(*outbox_);
      outbox_.reset();
    }
    const std::string text = format_state(snap);
    std::vector<std::shared_ptr<Client>> targets;
    {
      std::lock_guard lock(clients_mutex_);
      for (auto& c : clients_) {
        if (c->subscribed && c->open) targets.push_back(c);
      }
    }
    for (auto& c : targets) c->send_message(text);
  }
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    timeval timeout{1, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &timeout, sizeof timeout);

    auto client = std::make_shared<Client>();
    client->fd = fd;
    client->id = next_id_++;
    std::lock_guard lock(clients_mutex_);
    clients_.push_back(client);
    handlers_.emplace_back(&Server::serve_connection, this, client);
  }
}

void Server::handle_message(Client& client, std::string_view text) {
  text = trim(text);
  if (text.empty()) return;
  try {
    const CommandMessage msg =
        clamp_command(parse_command(text), session_.config().limits, session_.config().geometry);
    if (session_.submit(client.id, msg) == SimSession::Offer::Busy) {
      client.send_message(format_error(ErrorCode::DriverSlotBusy, "another connection is driving"));
    }
  } catch (const Error& e) {
    std::cerr << "client " << client.id << ": " << to_string(e.code()) << ": " << e.what() << '\n';
    client.send_message(format_error(e.code(), e.what()));
  }
}

void Server::serve_connection(std::shared_ptr<Client> client) {
  Client& c = *client;
  auto finish = [&] {
    session_.release(c.id);
    {
      std::lock_guard send_lock(c.send_mutex);
      c.open = false;
      ::shutdown(c.fd, SHUT_RDWR);
      ::close(c.fd);
      c.fd = -1;
    }
    std::lock_guard lock(clients_mutex_);
    clients_.remove(client);
  };

  // A silent connection is a raw subscriber; HTTP clients speak first.
  constexpr int kGreetingPatienceMs = 200;
  while (c.inbox.size() < 4 && std::string_view("GET ").starts_with(c.inbox)) {
    const std::size_t before = c.inbox.size();
    if (!c.fill(running_, kGreetingPatienceMs)) return finish();
    if (c.inbox.size() == before) break;
  }

  if (c.inbox.starts_with("GET ")) {
    std::size_t end;
    while ((end = c.inbox.find("\r\n\r\n")) == std::string::npos) {
      if (c.inbox.size() > kMaxHeader || !c.fill(running_)) return finish();
    }
    const std::string head = c.inbox.substr(0, end);
    c.inbox.erase(0, end + 4);

    const std::size_t path_end = head.find(' ', 4);
    std::string path = head.substr(4, path_end - 4);
    if (const auto q = path.find('?'); q != std::string::npos) path.resize(q);
    std::string ws_key;
    bool upgrade = false;
    std::size_t pos = head.find("\r\n");
    while (pos != std::string::npos && pos < head.size()) {
      const std::size_t next = head.find("\r\n", pos + 2);
      const std::string_view line =
          std::string_view(head).substr(pos + 2, (next == std::string::npos ? head.size() : next) - pos - 2);
      if (const auto colon = line.find(':'); colon != std::string_view::npos) {
        const std::string name = lower(trim(line.substr(0, colon)));
        const std::string_view value = trim(line.substr(colon + 1));
        if (name == "upgrade" && lower(value) == "websocket") upgrade = true;
        if (name == "sec-websocket-key") ws_key = value;
      }
      pos = next;
    }

    if (!upgrade || ws_key.empty()) {
      if (path == "/course") {
        c.send_raw(http_response(200, "OK", "application/json", format_course(session_.course())));
      } else if (path == "/state") {
        c.send_raw(http_response(200, "OK", "application/json", format_state(session_.snapshot())));
      } else {
        c.send_raw(http_response(404, "Not Found", "text/plain", "not found\n"));
      }
      return finish();
    }
    c.send_raw("HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
               "Sec-WebSocket-Accept: " + websocket_accept(ws_key) + "\r\n\r\n");
    c.websocket = true;
    c.subscribed = true;

    std::string message;
    while (true) {
      while (c.inbox.size() < 2) {
        if (!c.fill(running_)) return finish();
      }
      const auto b0 = static_cast<std::uint8_t>(c.inbox[0]);
      const auto b1 = static_cast<std::uint8_t>(c.inbox[1]);
      const std::uint8_t opcode = b0 & 0x0f;
      const bool masked = (b1 & 0x80) != 0;
      std::uint64_t len = b1 & 0x7f;
      std::size_t header = 2;
      const std::size_t ext = len == 126 ? 2 : len == 127 ? 8 : 0;
      while (c.inbox.size() < header + ext + (masked ? 4 : 0)) {
        if (!c.fill(running_)) return finish();
      }
      if (ext > 0) {
        len = 0;
        for (std::size_t i = 0; i < ext; ++i) len = (len << 8) | static_cast<std::uint8_t>(c.inbox[header + i]);
        header += ext;
      }
      if (len > kMaxFrame) return finish();
      std::array<std::uint8_t, 4> mask{};
      if (masked) {
        for (std::size_t i = 0; i < 4; ++i) mask[i] = static_cast<std::uint8_t>(c.inbox[header + i]);
        header += 4;
      }
      while (c.inbox.size() < header + len) {
        if (!c.fill(running_)) return finish();
      }
      std::string payload = c.inbox.substr(header, len);
      c.inbox.erase(0, header + len);
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ mask[i % 4]);

      if (opcode == 0x8) {
        c.send_raw(ws_frame(0x8, payload.substr(0, std::min<std::size_t>(payload.size(), 2))));
        return finish();
      }
      if (opcode == 0x9) {
        c.send_raw(ws_frame(0xA, payload));
        continue;
      }
      if (opcode != 0x0 && opcode != 0x1 && opcode != 0x2) continue;
      message += payload;
      if (message.size() > kMaxFrame) return finish();
      if ((b0 & 0x80) == 0) continue;
      std::string_view rest = message;
      while (!rest.empty()) {
        const auto eol = rest.find('\n');
        handle_message(c, rest.substr(0, eol));
        rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
      }
      message.clear();
    }
  }

  // Raw TCP: line-delimited JSON both ways.
  c.subscribed = true;
  while (true) {
    std::size_t eol;
    while ((eol = c.inbox.find('\n')) != std::string::npos) {
      const std::string line = c.inbox.substr(0, eol);
      c.inbox.erase(0, eol + 1);
      handle_message(c, line);
    }
    if (c.inbox.size() > kMaxFrame || !c.fill(running_)) return finish();
  }
}

}  // namespace odd
