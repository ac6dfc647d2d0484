#pragma once

// HTTP front end: registration intake, status, audit paths and transcript
// publication.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "vsort/sortition.hpp"

namespace httplib {
class Server;
}

namespace vsort::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::filesystem::path key_path = "data/server.key";
  sortition::Config sortition;
};

struct Overrides {
  std::optional<std::string> bind;  // host:port
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> key_path;
};

/// Reads the JSON config file (sortition fields plus optional "bind",
/// "data_dir", "key_path"). Precedence: flag, then VSORT_BIND /
/// VSORT_DATA_DIR / VSORT_KEY, then file, then defaults. Relative paths in
/// the file resolve against the file's directory.
ServiceConfig load_config(const std::filesystem::path& file, const Overrides& flags = {});
void parse_bind(const std::string& bind, std::string& host, int& port);

using Clock = std::function<std::int64_t()>;
std::int64_t unix_now();

class Server {
 public:
  explicit Server(ServiceConfig config, Clock clock = unix_now);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the configured address and serves until stop(). Returns false if binding fails.
  bool listen();
  /// Binds an ephemeral port on the configured host; serve with listen_after_bind().
  int bind_any_port();
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

  sortition::Sortition& state() { return *state_; }
  /// Starts evaluation on a background thread; false if it cannot start.
  bool start_finalize(std::string& error_code, std::string& message);

 private:
  void install_routes();

  ServiceConfig config_;
  Clock clock_;
  std::unique_ptr<sortition::Sortition> state_;
  std::unique_ptr<httplib::Server> http_;
  std::jthread evaluation_;
};

}  // namespace vsort::service
