#include "vsort/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vsort::service {

namespace fs = std::filesystem;

void parse_bind(const std::string& bind, std::string& host, int& port) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("bind address must be host:port");
  host = bind.substr(0, colon);
  port = std::stoi(bind.substr(colon + 1));
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
}

ServiceConfig load_config(const fs::path& file, const Overrides& flags) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read config " + file.string());
  nlohmann::json j = nlohmann::json::parse(in);
  ServiceConfig c;
  c.sortition = sortition::config_from_json(j);
  const fs::path base = file.has_parent_path() ? file.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  std::optional<std::string> bind = j.contains("bind") ? std::optional(j["bind"].get<std::string>())
                                                       : std::nullopt;
  if (j.contains("data_dir")) c.data_dir = resolve(j["data_dir"].get<std::string>());
  else c.data_dir = base / "data";
  if (j.contains("key_path")) c.key_path = resolve(j["key_path"].get<std::string>());
  else c.key_path = c.data_dir / "server.key";

  if (const char* env = std::getenv("VSORT_BIND")) bind = env;
  if (const char* env = std::getenv("VSORT_DATA_DIR")) c.data_dir = env;
  if (const char* env = std::getenv("VSORT_KEY")) c.key_path = env;

  if (flags.bind) bind = flags.bind;
  if (flags.data_dir) c.data_dir = *flags.data_dir;
  if (flags.key_path) c.key_path = *flags.key_path;

  if (bind) parse_bind(*bind, c.host, c.port);
  return c;
}

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  ordered_json j;
  j["error"] = code;
  j["message"] = message;
  send_json(res, status, j);
}

int status_for(const std::string& code) {
  if (code == "oversized-entry") return 413;
  if (code == "unknown-index") return 404;
  if (code == "window-closed" || code == "window-open" || code == "not-finalized" ||
      code == "empty-registry" || code == "evaluating")
    return 409;
  if (code == "malformed") return 400;
  return 500;
}

}  // namespace

Server::Server(ServiceConfig config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)), http_(std::make_unique<httplib::Server>()) {
  auto key = signing::SigningKey::load_or_create(config_.key_path);
  state_ = std::make_unique<sortition::Sortition>(config_.sortition, std::move(key), config_.data_dir);
  // Bodies are base64 of at most 1024 bytes plus JSON framing; larger bodies
  // are still read so the handler can answer 413 with a JSON error.
  http_->set_payload_max_length(1 << 20);
  install_routes();
}

Server::~Server() {
  stop();
  if (evaluation_.joinable()) {
    evaluation_.request_stop();
    evaluation_.join();
  }
}

bool Server::listen() { return http_->listen(config_.host, config_.port); }

int Server::bind_any_port() { return http_->bind_to_any_port(config_.host); }

bool Server::listen_after_bind() { return http_->listen_after_bind(); }

void Server::wait_until_ready() const { http_->wait_until_ready(); }

void Server::stop() {
  if (http_) http_->stop();
}

bool Server::start_finalize(std::string& error_code, std::string& message) {
  const auto now = clock_();
  const auto phase = state_->phase(now);
  if (phase == sortition::Phase::published || phase == sortition::Phase::evaluating) return true;
  if (phase != sortition::Phase::closed) {
    error_code = "window-open";
    message = "registration window has not closed yet";
    return false;
  }
  if (state_->size() == 0) {
    error_code = "empty-registry";
    message = "no registrations to draw from";
    return false;
  }
  if (evaluation_.joinable()) evaluation_.join();
  evaluation_ = std::jthread([this, now](std::stop_token stop) {
    vdf::EvalOptions options;
    options.stop = stop;
    try {
      state_->finalize(now, options);
    } catch (const std::exception&) {
      // Cancelled or failed; phase falls back to "closed" and can be retried.
    }
  });
  return true;
}

void Server::install_routes() {
  auto& s = *http_;

  s.Post("/api/v1/register", [this](const httplib::Request& req, httplib::Response& res) {
    Bytes x;
    try {
      auto j = nlohmann::json::parse(req.body);
      x = from_base64(j.at("x").get<std::string>());
    } catch (const std::exception& e) {
      send_error(res, 400, "malformed", std::string("expected {\"x\": base64}: ") + e.what());
      return;
    }
    try {
      Receipt r = state_->register_entry(x, clock_());
      send_json(res, 200, to_json(r));
    } catch (const sortition::Error& e) {
      send_error(res, status_for(e.code()), e.code(), e.what());
    }
  });

  s.Get(R"(/api/v1/proof/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    state_->reload_transcript();
    try {
      const auto index = std::stoull(req.matches[1].str());
      send_json(res, 200, to_json(state_->audit_path(index)));
    } catch (const sortition::Error& e) {
      send_error(res, status_for(e.code()), e.code(), e.what());
    } catch (const std::out_of_range&) {
      send_error(res, 404, "unknown-index", "no entry with that index");
    }
  });

  s.Get("/api/v1/transcript", [this](const httplib::Request&, httplib::Response& res) {
    state_->reload_transcript();
    auto t = state_->transcript();
    if (!t) {
      send_error(res, 409, "not-finalized", "sortition has not been finalized");
      return;
    }
    res.status = 200;
    res.set_content(serialize(*t), "application/json");
  });

  s.Get("/api/v1/status", [this](const httplib::Request&, httplib::Response& res) {
    state_->reload_transcript();
    ordered_json j;
    j["phase"] = std::string(sortition::to_string(state_->phase(clock_())));
    j["n"] = state_->size();
    j["opens_at"] = config_.sortition.opens_at;
    j["closes_at"] = config_.sortition.closes_at;
    send_json(res, 200, j);
  });

  s.Get("/api/v1/key", [this](const httplib::Request&, httplib::Response& res) {
    ordered_json j;
    j["server_pubkey"] = to_hex(state_->public_key());
    send_json(res, 200, j);
  });

  s.Post("/api/v1/admin/finalize", [this](const httplib::Request&, httplib::Response& res) {
    std::string code, message;
    if (!start_finalize(code, message)) {
      send_error(res, status_for(code), code, message);
      return;
    }
    ordered_json j;
    j["phase"] = std::string(sortition::to_string(state_->phase(clock_())));
    send_json(res, 202, j);
  });
}

}  // namespace vsort::service
