#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"
#include "statefactory/io.hpp"
#include "statefactory/random.hpp"
#include "statefactory/text.hpp"

namespace statefactory {

using EmbeddingVector = std::vector<double>;

// Bounded, thread-safe LRU map from cache key to embedding.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::size_t capacity = 100'000) : capacity_(std::max<std::size_t>(1, capacity)) {}

  std::optional<EmbeddingVector> get(const std::string& key) {
    std::lock_guard lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) {
      ++misses_;
      return std::nullopt;
    }
    order_.splice(order_.begin(), order_, it->second);
    ++hits_;
    return it->second->second;
  }

  void put(const std::string& key, EmbeddingVector value) {
    std::lock_guard lock(mu_);
    auto it = index_.find(key);
    if (it != index_.end()) {
      it->second->second = std::move(value);
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    order_.emplace_front(key, std::move(value));
    index_[key] = order_.begin();
    if (order_.size() > capacity_) {
      index_.erase(order_.back().first);
      order_.pop_back();
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return order_.size();
  }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }

 private:
  using Entry = std::pair<std::string, EmbeddingVector>;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  if (denom == 0.0) return 0.0;
  return dot / denom;
}

// Similarity in [0, 1]: cosine clamped below at 0 (and above at 1 against
// rounding).
inline double clamped_cosine(std::span<const double> a, std::span<const double> b) {
  return std::clamp(cosine(a, b), 0.0, 1.0);
}

// Text similarity source. Embeddings are cached by (provider name,
// normalized text) when a cache is attached; caching never changes results.
// Implementations must be safe to call from several threads.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;

  EmbeddingVector embed(std::string_view text) const {
    std::string norm = text::normalize(text);
    if (norm.empty()) throw EmptyTextError();
    std::string key;
    if (cache_) {
      key = name();
      key += '\x1f';
      key += norm;
      if (auto hit = cache_->get(key)) return std::move(*hit);
    }
    EmbeddingVector v = compute_embedding(norm);
    check_vector(v);
    if (cache_) cache_->put(key, v);
    return v;
  }

  // Symmetric, in [0, 1], and exactly 1 for texts equal after normalization.
  virtual double similarity(std::string_view a, std::string_view b) const {
    const std::string na = text::normalize(a);
    const std::string nb = text::normalize(b);
    if (na.empty() || nb.empty()) throw EmptyTextError();
    if (na == nb) return 1.0;
    const EmbeddingVector va = embed(na);
    const EmbeddingVector vb = embed(nb);
    return clamped_cosine(va, vb);
  }

  void set_cache(std::shared_ptr<EmbeddingCache> cache) { cache_ = std::move(cache); }
  const std::shared_ptr<EmbeddingCache>& cache() const noexcept { return cache_; }

 protected:
  // `normalized` is non-empty and already passed through text::normalize.
  virtual EmbeddingVector compute_embedding(const std::string& normalized) const = 0;

  void check_vector(const EmbeddingVector& v) const {
    if (v.size() != dimension()) {
      throw BackendError(name() + ": embedding has dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(dimension()));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw BackendError(name() + ": embedding contains a non-finite entry");
    }
  }

 private:
  std::shared_ptr<EmbeddingCache> cache_;
};

// Deterministic lexical mock: every word token maps to a fixed pseudo-random
// Gaussian direction (seeded by the provider seed and the token), and a text
// embeds to the normalized sum of its token directions. Similar wording gives
// similar vectors; distinct single words are almost surely orthogonal-ish.
class HashMockProvider : public SimilarityProvider {
 public:
  explicit HashMockProvider(std::size_t dimension = 256, std::uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {
    if (dimension == 0) throw std::invalid_argument("HashMockProvider: dimension must be positive");
  }

  std::string name() const override { return "hash-mock/" + std::to_string(dimension_) + "/" + std::to_string(seed_); }
  std::size_t dimension() const override { return dimension_; }
  std::uint64_t seed() const noexcept { return seed_; }

 protected:
  EmbeddingVector compute_embedding(const std::string& normalized) const override {
    std::vector<std::string> tokens = text::words(normalized);
    if (tokens.empty()) tokens.push_back(text::fold(normalized));
    EmbeddingVector v(dimension_, 0.0);
    for (const auto& tok : tokens) {
      std::uint64_t state = rng::mix(seed_, tok);
      for (std::size_t i = 0; i < dimension_; ++i) v[i] += rng::normal(state);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& x : v) x /= norm;
    return v;
  }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

// 1 iff the texts are equal after normalization and case folding, else 0.
// Its embedding is a hash of the folded text, only useful for caching tests.
class ExactMatchProvider : public SimilarityProvider {
 public:
  std::string name() const override { return "exact-match"; }
  std::size_t dimension() const override { return 16; }

  double similarity(std::string_view a, std::string_view b) const override {
    const std::string fa = text::fold(a);
    const std::string fb = text::fold(b);
    if (fa.empty() || fb.empty()) throw EmptyTextError();
    return fa == fb ? 1.0 : 0.0;
  }

 protected:
  EmbeddingVector compute_embedding(const std::string& normalized) const override {
    std::uint64_t state = rng::fnv1a64(text::fold(normalized));
    EmbeddingVector v(dimension());
    for (double& x : v) x = rng::normal(state);
    return v;
  }
};

struct Triplet {
  std::string anchor;
  std::string positive;
  std::string negative;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Share of triplets where sim(anchor, positive) > sim(anchor, negative).
// Ties count as failures.
inline double triplet_accuracy(const SimilarityProvider& provider, std::span<const Triplet> triplets) {
  if (triplets.empty()) throw EmptyInputError("triplet_accuracy: no triplets");
  std::size_t hits = 0;
  for (const auto& t : triplets) {
    if (provider.similarity(t.anchor, t.positive) > provider.similarity(t.anchor, t.negative)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(triplets.size());
}

// JSONL, one {"anchor", "positive", "negative"} object per line.
inline std::vector<Triplet> load_triplets(const std::filesystem::path& path) {
  std::vector<Triplet> out;
  for (const auto& [line, row] : io::read_jsonl(path)) {
    Triplet t;
    try {
      t.anchor = row.at("anchor").get<std::string>();
      t.positive = row.at("positive").get<std::string>();
      t.negative = row.at("negative").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), line, std::string("bad triplet: ") + e.what());
    }
    if (text::blank(t.anchor) || text::blank(t.positive) || text::blank(t.negative)) {
      throw ParseError(path.string(), line, "triplet fields must be non-empty");
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace statefactory
