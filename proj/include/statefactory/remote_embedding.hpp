#pragma once

#include <string>

#include "statefactory/embedding.hpp"
#include "statefactory/http.hpp"

namespace statefactory {

struct RemoteEmbeddingConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1
  std::string model;     // e.g. all-MiniLM-L6-v2
  std::string api_key;
  std::size_t dimension = 384;
  std::ptrdiff_t max_in_flight = 8;

  // EMBED_ENDPOINT, EMBED_MODEL, EMBED_API_KEY.
  static RemoteEmbeddingConfig from_env() {
    RemoteEmbeddingConfig c;
    c.endpoint = http::env("EMBED_ENDPOINT").value_or("");
    c.model = http::env("EMBED_MODEL").value_or("");
    c.api_key = http::env("EMBED_API_KEY").value_or("");
    return c;
  }
};

// Embeddings from an OpenAI-compatible /embeddings endpoint.
class RemoteEmbeddingProvider : public SimilarityProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig cfg)
      : cfg_(validated(std::move(cfg))),
        client_(cfg_.endpoint, http::ClientOptions{cfg_.api_key, std::chrono::seconds(60), cfg_.max_in_flight}) {}

  std::string name() const override { return "remote/" + cfg_.model; }
  std::size_t dimension() const override { return cfg_.dimension; }

 protected:
  EmbeddingVector compute_embedding(const std::string& normalized) const override {
    const nlohmann::json body = {{"model", cfg_.model}, {"input", nlohmann::json::array({normalized})}};
    const nlohmann::json res = client_.post("/embeddings", body);
    try {
      const auto& data = res.at("data");
      if (!data.is_array() || data.empty()) throw BackendError("embedding response has no data");
      return data.at(0).at("embedding").get<EmbeddingVector>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed embedding response: ") + e.what());
    }
  }

 private:
  static RemoteEmbeddingConfig validated(RemoteEmbeddingConfig c) {
    if (c.endpoint.empty()) throw BackendConfigError("remote embedding provider needs an endpoint (EMBED_ENDPOINT)");
    if (c.model.empty()) throw BackendConfigError("remote embedding provider needs a model (EMBED_MODEL)");
    if (c.dimension == 0) throw BackendConfigError("remote embedding dimension must be positive");
    return c;
  }

  RemoteEmbeddingConfig cfg_;
  http::JsonClient client_;
};

}  // namespace statefactory
