#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <thread>

#include "statefactory/embedding.hpp"
#include "statefactory/remote_embedding.hpp"

using namespace statefactory;

TEST(ExactMatch, IdentityAndMismatch) {
  ExactMatchProvider p;
  EXPECT_EQ(p.similarity("on desk 2", "on desk 2"), 1.0);
  EXPECT_EQ(p.similarity("on desk 2", "in drawer"), 0.0);
  EXPECT_EQ(p.similarity("On  Desk 2", "on desk 2"), 1.0);
  EXPECT_THROW(p.similarity("", "x"), EmptyTextError);
}

TEST(Cosine, ClampedAtZero) {
  const std::vector<double> a{1, 0}, b{0, 1}, c{-1, 0};
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<double> d{r, r};
  EXPECT_EQ(clamped_cosine(a, b), 0.0);
  EXPECT_EQ(clamped_cosine(a, c), 0.0);
  EXPECT_NEAR(clamped_cosine(d, d), 1.0, 1e-15);
  EXPECT_EQ(cosine(a, std::vector<double>{0, 0}), 0.0);
}

TEST(HashMock, DeterministicAndSelfSimilar) {
  HashMockProvider p;
  EXPECT_EQ(p.embed("a"), p.embed("a"));
  EXPECT_EQ(p.embed("a").size(), p.dimension());
  EXPECT_EQ(p.similarity("the mug is hot", "the mug is hot"), 1.0);
  EXPECT_THROW(p.embed("   "), EmptyTextError);
  EXPECT_THROW(HashMockProvider(0), std::invalid_argument);
}

TEST(HashMock, NoCollisionsOnRandomWordPairs) {
  HashMockProvider p;
  auto eng = rng::engine(5);
  auto word = [&] {
    std::string w;
    const std::size_t n = 3 + rng::uniform_index(eng, 6);
    for (std::size_t i = 0; i < n; ++i) w.push_back(static_cast<char>('a' + rng::uniform_index(eng, 26)));
    return w;
  };
  std::size_t collisions = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string a = word(), b = word();
    if (a != b && p.embed(a) == p.embed(b)) ++collisions;
  }
  EXPECT_EQ(collisions, 0u);
}

TEST(SimilarityProperties, SymmetricBoundedAndCacheTransparent) {
  HashMockProvider plain(64, 3);
  HashMockProvider cached(64, 3);
  cached.set_cache(std::make_shared<EmbeddingCache>(8));
  const std::vector<std::string> texts{"the mug is hot", "the mug is cold", "lamp", "the lamp is on", "a", "b c",
                                       "The Mug Is Hot", "drawer 1 is open", "drawer 1 is closed"};
  for (const auto& x : texts) {
    EXPECT_EQ(plain.similarity(x, x), 1.0);
    for (const auto& y : texts) {
      const double s = plain.similarity(x, y);
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
      EXPECT_EQ(s, plain.similarity(y, x));
      EXPECT_EQ(s, cached.similarity(x, y));
      EXPECT_EQ(plain.embed(x), cached.embed(x));
    }
  }
  EXPECT_GT(cached.cache()->hits(), 0u);
  EXPECT_LE(cached.cache()->size(), 8u);
}

TEST(EmbeddingCache, LruEviction) {
  EmbeddingCache c(2);
  c.put("a", {1});
  c.put("b", {2});
  ASSERT_TRUE(c.get("a"));  // a is now most recent
  c.put("c", {3});
  EXPECT_FALSE(c.get("b"));
  EXPECT_TRUE(c.get("a"));
  EXPECT_TRUE(c.get("c"));
  EXPECT_EQ(c.size(), 2u);
}

TEST(EmbeddingCache, ConcurrentUse) {
  HashMockProvider p(32);
  p.set_cache(std::make_shared<EmbeddingCache>(16));
  HashMockProvider ref(32);
  std::vector<std::jthread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        const std::string s = "text " + std::to_string((i * 7 + t) % 40);
        if (p.embed(s) != ref.embed(s)) ++mismatches;
      }
    });
  }
  threads.clear();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(TripletAccuracy, ExactMatchSuites) {
  ExactMatchProvider p;
  const std::vector<Triplet> aab{{"a", "a", "b"}, {"the mug is hot", "the mug is hot", "the mug is cold"}};
  const std::vector<Triplet> aba{{"a", "b", "a"}, {"the mug is hot", "the mug is cold", "the mug is hot"}};
  EXPECT_EQ(triplet_accuracy(p, aab), 1.0);
  EXPECT_EQ(triplet_accuracy(p, aba), 0.0);
  EXPECT_THROW(triplet_accuracy(p, std::vector<Triplet>{}), EmptyInputError);
}

TEST(TripletAccuracy, TiesCountAsFailures) {
  ExactMatchProvider p;
  const std::vector<Triplet> tie{{"a", "b", "c"}};
  EXPECT_EQ(triplet_accuracy(p, tie), 0.0);
}

TEST(TripletAccuracy, MatchesPerTripletCountUnderHashMock) {
  HashMockProvider p;
  const std::vector<Triplet> ts{
      {"the blue block is on the orange block", "the orange block supports the blue block", "the blue block is held"},
      {"the mug is hot", "the mug was heated", "the mug is cold"},
      {"lamp 1 is on", "lamp 1 is switched on", "lamp 1 is off"},
      {"cd 1 is in safe 1", "safe 1 contains cd 1", "cd 1 is on desk 2"},
      {"the drawer is open", "the drawer has been opened", "the drawer is closed"},
      {"a", "b", "a"},
      {"x y", "x y", "z"},
      {"apple in fridge", "fridge holds apple", "apple on table"},
      {"door unlocked", "the door is unlocked", "door locked"},
      {"pan on stove", "stove under pan", "pan in sink"}};
  std::size_t hits = 0;
  for (const auto& t : ts) hits += p.similarity(t.anchor, t.positive) > p.similarity(t.anchor, t.negative) ? 1 : 0;
  EXPECT_DOUBLE_EQ(triplet_accuracy(p, ts), static_cast<double>(hits) / ts.size());
}

TEST(LoadTriplets, ParsesAndReportsLine) {
  const auto dir = std::filesystem::temp_directory_path() / "sf_triplets";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "ok.jsonl");
    f << R"({"anchor":"a","positive":"a","negative":"b"})" << "\n\n" << R"({"anchor":"c","positive":"d","negative":"e"})"
      << "\n";
  }
  EXPECT_EQ(load_triplets(dir / "ok.jsonl").size(), 2u);
  {
    std::ofstream f(dir / "bad.jsonl");
    f << R"({"anchor":"a","positive":"a","negative":"b"})" << "\n" << R"({"anchor":"a"})" << "\n";
  }
  try {
    load_triplets(dir / "bad.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(RemoteEmbedding, ConfigurationIsValidated) {
  EXPECT_THROW(RemoteEmbeddingProvider(RemoteEmbeddingConfig{}), BackendConfigError);
  RemoteEmbeddingConfig c;
  c.endpoint = "http://127.0.0.1:9/v1";
  EXPECT_THROW(RemoteEmbeddingProvider{c}, BackendConfigError);
  c.model = "m";
  c.endpoint = "not a url";
  EXPECT_THROW(RemoteEmbeddingProvider{c}, BackendConfigError);
}

TEST(RemoteEmbedding, UnreachableEndpointIsBackendError) {
  RemoteEmbeddingConfig c;
  c.endpoint = "http://127.0.0.1:9/v1";
  c.model = "m";
  RemoteEmbeddingProvider p(c);
  EXPECT_THROW(p.embed("hello"), BackendError);
}
