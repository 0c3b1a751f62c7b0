#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"
#include "statefactory/http.hpp"

namespace statefactory {

enum class ReasoningEffort { Low, Medium, High };

inline std::string_view to_string(ReasoningEffort e) {
  switch (e) {
    case ReasoningEffort::Low: return "low";
    case ReasoningEffort::Medium: return "medium";
    case ReasoningEffort::High: return "high";
  }
  return "?";
}

inline std::optional<ReasoningEffort> reasoning_effort_from_string(std::string_view s) {
  if (s == "low") return ReasoningEffort::Low;
  if (s == "medium") return ReasoningEffort::Medium;
  if (s == "high") return ReasoningEffort::High;
  return std::nullopt;
}

struct LlmConfig {
  std::string endpoint;  // base URL, e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key;
  double temperature = 0.01;
  std::size_t max_context = 8192;  // tokens, estimated as chars / 4
  std::optional<ReasoningEffort> reasoning_effort;
  std::ptrdiff_t max_in_flight = 8;

  // LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY.
  static LlmConfig from_env() {
    LlmConfig c;
    c.endpoint = http::env("LLM_ENDPOINT").value_or("");
    c.model = http::env("LLM_MODEL").value_or("");
    c.api_key = http::env("LLM_API_KEY").value_or("");
    return c;
  }

  void require() const {
    if (endpoint.empty()) throw BackendConfigError("generative backend needs an endpoint (LLM_ENDPOINT)");
    if (model.empty()) throw BackendConfigError("generative backend needs a model (LLM_MODEL)");
    if (temperature < 0.0) throw BackendConfigError("temperature must be non-negative");
  }
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatReply {
  std::string content;
  std::string reasoning;  // reasoning_content when the server returns one
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatReply complete(const std::vector<ChatMessage>& messages) const = 0;
};

// OpenAI-compatible /chat/completions client.
class OpenAiChatClient : public ChatClient {
 public:
  explicit OpenAiChatClient(LlmConfig cfg)
      : cfg_((cfg.require(), std::move(cfg))),
        client_(cfg_.endpoint, http::ClientOptions{cfg_.api_key, std::chrono::seconds(300), cfg_.max_in_flight}) {}

  ChatReply complete(const std::vector<ChatMessage>& messages) const override {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json body = {{"model", cfg_.model}, {"messages", msgs}, {"temperature", cfg_.temperature}};
    if (cfg_.reasoning_effort) body["reasoning_effort"] = to_string(*cfg_.reasoning_effort);
    const nlohmann::json res = client_.post("/chat/completions", body);
    try {
      const auto& msg = res.at("choices").at(0).at("message");
      ChatReply r;
      if (msg.contains("content") && msg.at("content").is_string()) r.content = msg.at("content").get<std::string>();
      for (const char* k : {"reasoning_content", "reasoning"}) {
        if (msg.contains(k) && msg.at(k).is_string()) {
          r.reasoning = msg.at(k).get<std::string>();
          break;
        }
      }
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed chat completion response: ") + e.what());
    }
  }

  const LlmConfig& config() const noexcept { return cfg_; }

 private:
  LlmConfig cfg_;
  http::JsonClient client_;
};

inline std::size_t estimate_tokens(std::string_view s) { return (s.size() + 3) / 4; }

// First balanced JSON value ({...} or [...]) in free text that parses and
// satisfies `accept`. Handles code fences and surrounding prose.
inline std::optional<nlohmann::json> find_json(std::string_view text,
                                               const std::function<bool(const nlohmann::json&)>& accept,
                                               bool objects_only = false) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    const char open = text[start];
    if (open != '{' && (objects_only || open != '[')) continue;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{' || c == '[') ++depth;
      else if (c == '}' || c == ']') {
        if (--depth == 0) {
          const auto j = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!j.is_discarded() && accept(j)) return std::optional<nlohmann::json>(std::in_place, j);
          break;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace statefactory
