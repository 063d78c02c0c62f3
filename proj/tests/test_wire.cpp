#include <doctest.h>

#include <json.hpp>

#include "odd/wire.hpp"

using namespace odd;
using doctest::Approx;
using nlohmann::json;

namespace {

ErrorCode code_of(auto fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("parse a command") {
  const CommandMessage m =
      parse_command(R"({"type":"cmd","vx":0.5,"vy":-0.1,"wz":0.2,"ddot":0.05,"seq":7,"extra":[1,2]})");
  CHECK(m.vx == 0.5);
  CHECK(m.vy == -0.1);
  CHECK(m.wz == 0.2);
  CHECK(m.ddot == 0.05);
  CHECK(m.seq == 7);
  CHECK(!m.d_setpoint);

  CHECK(parse_command(R"({"type":"cmd","vx":0,"vy":0,"wz":0,"ddot":0,"seq":1,"d_setpoint":0.5})").d_setpoint == 0.5);
  CHECK(!parse_command(R"({"type":"cmd","vx":0,"vy":0,"wz":0,"ddot":0,"seq":1,"d_setpoint":null})").d_setpoint);
}

TEST_CASE("malformed commands") {
  for (const char* text : {
           "not json",
           "[1,2]",
           R"({"type":"state","vx":0,"vy":0,"wz":0,"ddot":0,"seq":1})",
           R"({"type":"cmd","vy":0,"wz":0,"ddot":0,"seq":1})",
           R"({"type":"cmd","vx":"fast","vy":0,"wz":0,"ddot":0,"seq":1})",
           R"({"type":"cmd","vx":0,"vy":0,"wz":0,"ddot":0,"seq":1.5})",
           R"({"type":"cmd","vx":0,"vy":0,"wz":0,"ddot":0})",
       }) {
    CAPTURE(text);
    CHECK(code_of([&] { parse_command(text); }) == ErrorCode::MalformedMessage);
  }
}

TEST_CASE("command and state round trips") {
  const CommandMessage c{0.1, 0.2, -0.3, 0.04, 12, 0.6};
  const CommandMessage back = parse_command(format_command(c));
  CHECK(back.vx == c.vx);
  CHECK(back.seq == c.seq);
  CHECK(back.d_setpoint == c.d_setpoint);

  const StateMessage s{1.5, 0.1, -0.2, 0.3, 0.45, 0.01, 0.2, 0.0, 0.1, -0.02, "narrow"};
  const std::string text = format_state(s);
  const json j = json::parse(text);
  for (const char* key : {"type", "t", "x", "y", "phi", "d", "pitch", "vx", "vy", "wz", "ddot", "course"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j["type"] == "state");
  const StateMessage r = parse_state(text);
  CHECK(r.t == s.t);
  CHECK(r.d == s.d);
  CHECK(r.course == s.course);
}

TEST_CASE("error messages") {
  const json j = json::parse(format_error(ErrorCode::DriverSlotBusy, "busy"));
  CHECK(j["type"] == "error");
  CHECK(j["code"] == "DriverSlotBusy");
  CHECK(j["message"] == "busy");
}

TEST_CASE("command clamp") {
  const CommandLimits lim;
  const RigGeometry g;
  const CommandMessage m = clamp_command({5, -5, 10, -1, 1, 3.0}, lim, g);
  CHECK(m.vx == lim.vx);
  CHECK(m.vy == -lim.vy);
  CHECK(m.wz == lim.wz);
  CHECK(m.ddot == -lim.ddot);
  CHECK(m.d_setpoint == g.d_max);
}

TEST_CASE("course files") {
  const Course c = parse_course(
      R"({"id":"demo","spawn":{"name":"a","x":1,"y":2,"phi":0.5,"d":0.6},
          "obstacles":[{"x":1,"y":2,"width":0.5,"height":0.2},{"x":3,"y":0,"phi":1,"width":1,"height":1}]})");
  CHECK(c.id == "demo");
  CHECK(c.spawn.name == "a");
  CHECK(c.spawn.d == 0.6);
  REQUIRE(c.obstacles.size() == 2);
  CHECK(c.obstacles[0].phi == 0.0);
  CHECK(c.obstacles[1].phi == 1.0);

  const Course again = parse_course(format_course(c));
  CHECK(again.obstacles.size() == 2);
  CHECK(again.spawn.x == 1.0);

  CHECK(code_of([] { parse_course(R"({"obstacles":[{"x":1,"y":2,"width":-1,"height":1}]})"); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([] { parse_course(R"({"obstacles":{}})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_course("/nonexistent.json"); }) == ErrorCode::IoFailure);

  for (const char* name : {"narrow_passage.json", "changing_d.json"}) {
    const Course shipped = load_course(std::string(ODD_SOURCE_DIR "/courses/") + name);
    CHECK(!shipped.obstacles.empty());
    CHECK(shipped.spawn.d.has_value());
  }
}
