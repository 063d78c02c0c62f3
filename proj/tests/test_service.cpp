#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <string>
#include <thread>

#include <json.hpp>

#include "odd/line_client.hpp"
#include "odd/service.hpp"

using namespace odd;
using doctest::Approx;
using nlohmann::json;

namespace {

CommandMessage cmd(double vx, std::int64_t seq) { return {vx, 0, 0, 0, seq, {}}; }

bool same(const StateMessage& a, const StateMessage& b) {
  return a.t == b.t && a.x == b.x && a.y == b.y && a.phi == b.phi && a.d == b.d && a.vx == b.vx &&
         a.vy == b.vy && a.wz == b.wz && a.ddot == b.ddot;
}

// Bare TCP socket for speaking HTTP and WebSocket by hand.
class RawSocket {
 public:
  explicit RawSocket(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  }
  ~RawSocket() { ::close(fd_); }

  void send(const std::string& bytes) { REQUIRE(::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(bytes.size())); }

  // Reads until `n` bytes are buffered or the timeout passes.
  bool fill(std::size_t n, int timeout_ms = 2000) {
    const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (buf.size() < n) {
      pollfd p{fd_, POLLIN, 0};
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(until - std::chrono::steady_clock::now());
      if (left.count() <= 0 || ::poll(&p, 1, static_cast<int>(left.count())) <= 0) return false;
      char chunk[4096];
      const ssize_t got = ::recv(fd_, chunk, sizeof chunk, 0);
      if (got <= 0) return false;
      buf.append(chunk, static_cast<std::size_t>(got));
    }
    return true;
  }

  std::string read_all(int timeout_ms = 1000) {
    fill(1 << 20, timeout_ms);
    return std::move(buf);
  }

  std::string read_http_head() {
    std::size_t end;
    while ((end = buf.find("\r\n\r\n")) == std::string::npos) {
      if (!fill(buf.size() + 1)) return {};
    }
    std::string head = buf.substr(0, end + 4);
    buf.erase(0, end + 4);
    return head;
  }

  // Client frames are masked, as the protocol requires.
  void send_frame(std::uint8_t opcode, const std::string& payload) {
    std::string f;
    f.push_back(static_cast<char>(0x80 | opcode));
    const std::uint8_t mask[4] = {0x12, 0x34, 0x56, 0x78};
    if (payload.size() < 126) {
      f.push_back(static_cast<char>(0x80 | payload.size()));
    } else {
      f.push_back(static_cast<char>(0x80 | 126));
      f.push_back(static_cast<char>(payload.size() >> 8));
      f.push_back(static_cast<char>(payload.size() & 0xff));
    }
    f.append(reinterpret_cast<const char*>(mask), 4);
    for (std::size_t i = 0; i < payload.size(); ++i) f.push_back(static_cast<char>(payload[i] ^ mask[i % 4]));
    send(f);
  }

  // Server frames are unmasked.
  std::pair<int, std::string> read_frame() {
    if (!fill(2)) return {-1, {}};
    const int opcode = static_cast<std::uint8_t>(buf[0]) & 0x0f;
    const std::uint8_t b1 = static_cast<std::uint8_t>(buf[1]);
    CHECK((b1 & 0x80) == 0);
    std::size_t len = b1 & 0x7f;
    std::size_t header = 2;
    if (len == 126) {
      if (!fill(4)) return {-1, {}};
      len = (static_cast<std::uint8_t>(buf[2]) << 8) | static_cast<std::uint8_t>(buf[3]);
      header = 4;
    }
    if (!fill(header + len)) return {-1, {}};
    std::string payload = buf.substr(header, len);
    buf.erase(0, header + len);
    return {opcode, payload};
  }

  std::string buf;

 private:
  int fd_;
};

ServerOptions ephemeral() {
  ServerOptions o;
  o.port = 0;
  return o;
}

std::optional<StateMessage> next_state(LineClient& c, int timeout_ms = 500) {
  const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < until) {
    const auto line = c.read_line(20);
    if (line && json::parse(*line)["type"] == "state") return parse_state(*line);
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("session: no driver means zero twist") {
  SimSession s(SimConfig{}, Course{});
  StateMessage last;
  for (int k = 0; k < 100; ++k) last = s.tick();
  CHECK(last.vx == 0.0);
  CHECK(last.x == 0.0);
  CHECK(last.t == Approx(100 * SimConfig{}.dt));
  CHECK(last.course == "empty");
}

TEST_CASE("session: out-of-order commands are discarded") {
  SimSession in_order(SimConfig{}, Course{});
  SimSession shuffled(SimConfig{}, Course{});
  CHECK(in_order.submit(1, cmd(0.3, 1)) == SimSession::Offer::Applied);
  CHECK(shuffled.submit(1, cmd(0.3, 1)) == SimSession::Offer::Applied);
  CHECK(in_order.submit(1, cmd(0.2, 3)) == SimSession::Offer::Applied);
  CHECK(shuffled.submit(1, cmd(0.2, 3)) == SimSession::Offer::Applied);
  CHECK(shuffled.submit(1, cmd(0.9, 2)) == SimSession::Offer::Stale);
  CHECK(shuffled.submit(1, cmd(0.9, 3)) == SimSession::Offer::Stale);
  for (int k = 0; k < 20; ++k) {
    const StateMessage a = in_order.tick();
    const StateMessage b = shuffled.tick();
    CHECK(same(a, b));
  }
  CHECK(shuffled.applied_command().x_dot == 0.2);
  for (int k = 0; k < 100; ++k) CHECK(same(in_order.tick(), shuffled.tick()));
}

TEST_CASE("session: one driver at a time") {
  SimSession s(SimConfig{}, Course{});
  CHECK(s.submit(1, cmd(0.1, 1)) == SimSession::Offer::Applied);
  CHECK(s.submit(2, cmd(0.5, 1)) == SimSession::Offer::Busy);
  s.release(1);
  CHECK(s.submit(2, cmd(0.5, 1)) == SimSession::Offer::Applied);
  // A fresh connection starts its own sequence.
  CHECK(s.submit(2, cmd(0.5, 2)) == SimSession::Offer::Applied);
}

TEST_CASE("session: silence holds, then ramps to zero") {
  SimConfig c;
  c.dt = 0.005;
  const SafetyStop stop;
  SimSession s(c, Course{}, stop);
  s.submit(1, {0.4, 0.2, 0.6, 0.0, 1, {}});
  std::vector<OddRate> applied;
  for (int k = 0; k < 100; ++k) {
    s.tick();
    applied.push_back(s.applied_command());
  }
  // Tick k runs with silence k*dt measured from the tick that took the command.
  auto at = [&](double t) { return applied[static_cast<std::size_t>(std::lround(t / c.dt))]; };
  CHECK(at(stop.hold).x_dot == Approx(0.4));
  CHECK(at(stop.hold + stop.ramp / 2).x_dot == Approx(0.2));
  CHECK(at(stop.hold + stop.ramp / 2).phi_dot == Approx(0.3));
  CHECK(at(stop.hold + stop.ramp).x_dot == Approx(0.0).epsilon(1e-12));
  CHECK(applied.back() == OddRate{});
  CHECK(stop.hold + stop.ramp < 0.5);

  StateMessage last;
  for (int k = 0; k < 100; ++k) last = s.tick();
  CHECK(std::abs(last.vx) < 1e-6);
}

TEST_CASE("session: a held command integrates to the expected distance") {
  SimConfig c;
  c.dt = 0.005;
  SimSession s(c, Course{});
  StateMessage last;
  for (int k = 0; k < 400; ++k) {
    if (k % 10 == 0) s.submit(1, cmd(0.5, k + 1));
    last = s.tick();
  }
  // The wheel lag costs about v * tau of travel.
  CHECK(last.x == Approx(1.0 - 0.5 * c.wheel_speed_tracking_tau).epsilon(2e-3));
  CHECK(std::abs(last.y) < 1e-9);
}

TEST_CASE("session: d setpoint engages the distance loop") {
  SimSession s(SimConfig{}, Course{});
  CommandMessage m = cmd(0.0, 1);
  m.d_setpoint = 0.6;
  StateMessage last;
  for (int k = 0; k < 600; ++k) {
    if (k % 20 == 0) {
      m.seq = k + 1;
      s.submit(1, m);
    }
    last = s.tick();
  }
  CHECK(last.d == Approx(0.6).epsilon(1e-3));
}

TEST_CASE("spawn pose") {
  Course c;
  c.spawn = {"dock", 1.0, -2.0, 7.0, 0.5};
  const RobotState s = spawn_state(SimConfig{}, c);
  CHECK(s.x == 1.0);
  CHECK(s.y == -2.0);
  CHECK(s.phi == Approx(7.0 - 2 * std::numbers::pi));
  CHECK(s.d == 0.5);
  c.spawn.d = 2.0;
  CHECK_THROWS_AS(SimSession(SimConfig{}, c), Error);
}

TEST_CASE("server rejects bad options and busy ports") {
  ServerOptions bad = ephemeral();
  bad.rate_hz = 0;
  CHECK_THROWS_AS(Server(SimConfig{}, Course{}, bad), Error);

  Server first(SimConfig{}, Course{}, ephemeral());
  first.start();
  ServerOptions same_port;
  same_port.port = first.port();
  Server second(SimConfig{}, Course{}, same_port);
  try {
    second.start();
    FAIL("expected PortUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PortUnavailable);
  }
  first.stop();
}

TEST_CASE("server: raw line transport") {
  Course course;
  course.id = "lines";
  Server server(SimConfig{}, course, ephemeral());
  server.start();
  LineClient driver("127.0.0.1", server.port());

  SUBCASE("state is broadcast with no driver, at about 50 Hz") {
    // The first broadcast arrives once the server has settled on the transport.
    std::optional<StateMessage> first = next_state(driver, 1000);
    REQUIRE(first);
    std::optional<StateMessage> last;
    int count = 0;
    const auto until = std::chrono::steady_clock::now() + std::chrono::seconds(1);
    while (std::chrono::steady_clock::now() < until) {
      const auto line = driver.read_line(20);
      if (!line) continue;
      const StateMessage s = parse_state(*line);
      last = s;
      ++count;
      CHECK(s.vx == 0.0);
      CHECK(s.course == "lines");
    }
    CHECK(count >= 40);
    CHECK(count <= 60);
    REQUIRE(last);
    CHECK(last->t > first->t);
  }

  SUBCASE("malformed input gets an error reply and the connection survives") {
    driver.send_line("{\"type\":\"cmd\",\"vx\":\"x\"}");
    bool got_error = false;
    for (int k = 0; k < 50 && !got_error; ++k) {
      const auto line = driver.read_line(20);
      if (line && json::parse(*line)["type"] == "error") {
        got_error = true;
        CHECK(json::parse(*line)["code"] == "MalformedMessage");
      }
    }
    CHECK(got_error);
    driver.send_line(format_command(cmd(0.3, 1)));
    bool moving = false;
    for (int k = 0; k < 20 && !moving; ++k) {
      const auto s = next_state(driver);
      moving = s && s->vx > 0.1;
    }
    CHECK(moving);
  }

  SUBCASE("the driver slot frees on disconnect") {
    driver.send_line(format_command(cmd(0.2, 1)));
    next_state(driver);
    LineClient other("127.0.0.1", server.port());
    other.send_line(format_command(cmd(0.1, 1)));
    bool busy = false;
    for (int k = 0; k < 50 && !busy; ++k) {
      const auto line = other.read_line(20);
      busy = line && line->find("DriverSlotBusy") != std::string::npos;
    }
    CHECK(busy);
    driver.close();
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    other.send_line(format_command(cmd(-0.1, 2)));
    bool reversing = false;
    for (int k = 0; k < 50 && !reversing; ++k) {
      const auto s = next_state(other);
      reversing = s && s->vx < -0.05;
    }
    CHECK(reversing);
  }
  server.stop();
}

TEST_CASE("server: http endpoints") {
  Course course;
  course.id = "http";
  course.obstacles.push_back({1, 2, 0, 0.5, 0.5});
  Server server(SimConfig{}, course, ephemeral());
  server.start();
  {
    RawSocket s(server.port());
    s.send("GET /course HTTP/1.1\r\nHost: x\r\n\r\n");
    const std::string reply = s.read_all();
    CHECK(reply.starts_with("HTTP/1.1 200"));
    const Course back = parse_course(reply.substr(reply.find("\r\n\r\n") + 4));
    CHECK(back.id == "http");
    CHECK(back.obstacles.size() == 1);
  }
  {
    RawSocket s(server.port());
    s.send("GET /state HTTP/1.1\r\n\r\n");
    const std::string reply = s.read_all();
    CHECK(reply.starts_with("HTTP/1.1 200"));
    CHECK(parse_state(reply.substr(reply.find("\r\n\r\n") + 4)).course == "http");
  }
  {
    RawSocket s(server.port());
    s.send("GET /nope HTTP/1.1\r\n\r\n");
    CHECK(s.read_all().starts_with("HTTP/1.1 404"));
  }
  server.stop();
}

TEST_CASE("server: websocket transport") {
  Server server(SimConfig{}, Course{}, ephemeral());
  server.start();
  RawSocket ws(server.port());
  // Sample handshake from the WebSocket RFC.
  ws.send("GET /ws HTTP/1.1\r\nHost: localhost\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
          "Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\nSec-WebSocket-Version: 13\r\n\r\n");
  const std::string head = ws.read_http_head();
  CHECK(head.starts_with("HTTP/1.1 101"));
  CHECK(head.find("Sec-WebSocket-Accept: s3pPLMBiTxaQ9kYGzzhZRbK+xOo=\r\n") != std::string::npos);

  auto [op, payload] = ws.read_frame();
  CHECK(op == 0x1);
  CHECK(parse_state(payload).vx == 0.0);

  ws.send_frame(0x1, format_command(cmd(0.4, 1)));
  bool moving = false;
  for (int k = 0; k < 100 && !moving; ++k) {
    auto [o, p] = ws.read_frame();
    if (o == 0x1 && json::parse(p)["type"] == "state") moving = parse_state(p).vx > 0.3;
  }
  CHECK(moving);

  // A long frame uses the 16-bit length form.
  std::string padded = format_command(cmd(0.1, 2));
  padded.insert(padded.size() - 1, ",\"pad\":\"" + std::string(300, 'x') + "\"");
  ws.send_frame(0x1, padded);
  bool slowed = false;
  for (int k = 0; k < 100 && !slowed; ++k) {
    auto [o, p] = ws.read_frame();
    if (o == 0x1 && json::parse(p)["type"] == "state") slowed = parse_state(p).vx < 0.15;
  }
  CHECK(slowed);

  ws.send_frame(0x9, "hi");
  bool pong = false;
  for (int k = 0; k < 100 && !pong; ++k) {
    auto [o, p] = ws.read_frame();
    pong = o == 0xA && p == "hi";
  }
  CHECK(pong);

  ws.send_frame(0x8, "");
  bool closed = false;
  for (int k = 0; k < 100 && !closed; ++k) closed = ws.read_frame().first == 0x8;
  CHECK(closed);
  server.stop();
}

TEST_CASE("server: sim time tracks wall time") {
  Server server(SimConfig{}, Course{}, ephemeral());
  server.start();
  std::this_thread::sleep_for(std::chrono::seconds(2));
  const double wall = server.wall_time();
  const double sim = server.sim_time();
  server.stop();
  CHECK(std::abs(sim - wall) / wall < 0.01);
}
