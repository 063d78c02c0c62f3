#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace odd {

/// Minimal blocking client for the service's raw line-delimited JSON
/// transport. Used by headless tools and tests.
class LineClient {
 public:
  /// Throws IoFailure if the connection cannot be made.
  LineClient(const std::string& host, int port);
  ~LineClient();
  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  /// Returns false once the connection is gone.
  bool send_line(std::string_view line);
  /// Next complete line, or nullopt on timeout or disconnect.
  std::optional<std::string> read_line(int timeout_ms);
  void close();

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace odd
