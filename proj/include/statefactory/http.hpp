#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <regex>
#include <semaphore>
#include <string>
#include <string_view>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"

namespace statefactory::http {

// "http://host:port/prefix" split into the origin httplib wants and the
// path prefix prepended to every request path.
struct Endpoint {
  std::string origin;
  std::string prefix;

  static Endpoint parse(std::string_view url) {
    static const std::regex re(R"(^(https?)://([^/]+)(/.*)?$)");
    std::cmatch m;
    if (!std::regex_match(url.data(), url.data() + url.size(), m, re)) {
      throw BackendConfigError("invalid endpoint URL: " + std::string(url));
    }
    Endpoint e;
    e.origin = m[1].str() + "://" + m[2].str();
    e.prefix = m[3].matched ? m[3].str() : "";
    while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (m[1].str() == "https") {
      throw BackendConfigError("https endpoints need a build with CPPHTTPLIB_OPENSSL_SUPPORT: " + std::string(url));
    }
#endif
    return e;
  }
};

struct ClientOptions {
  std::string api_key;
  std::chrono::seconds timeout{120};
  std::ptrdiff_t max_in_flight = 8;
};

// POSTs JSON bodies to an OpenAI-compatible server, with a cap on
// concurrent requests. Thread-safe: each call uses its own connection.
class JsonClient {
 public:
  JsonClient(std::string_view endpoint, ClientOptions opts)
      : endpoint_(Endpoint::parse(endpoint)), opts_(std::move(opts)), slots_(std::max<std::ptrdiff_t>(1, opts_.max_in_flight)) {}

  nlohmann::json post(std::string_view path, const nlohmann::json& body) const {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    httplib::Client cli(endpoint_.origin);
    cli.set_connection_timeout(std::chrono::seconds(10));
    cli.set_read_timeout(opts_.timeout);
    cli.set_write_timeout(opts_.timeout);
    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);
    const std::string full_path = endpoint_.prefix + std::string(path);
    auto res = cli.Post(full_path, headers, body.dump(), "application/json");
    if (!res) {
      throw BackendError("request to " + endpoint_.origin + full_path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError("HTTP " + std::to_string(res->status) + " from " + endpoint_.origin + full_path + ": " +
                         res->body.substr(0, 300));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw BackendError("non-JSON response from " + endpoint_.origin + full_path);
    }
  }

  const Endpoint& endpoint() const noexcept { return endpoint_; }

 private:
  Endpoint endpoint_;
  ClientOptions opts_;
  mutable std::counting_semaphore<> slots_;
};

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace statefactory::http
