#pragma once

// Seeded random inputs shared by the unit and acceptance tests.

#include <string>
#include <vector>

#include "statefactory/random.hpp"
#include "statefactory/state_model.hpp"

namespace fixtures {

using namespace statefactory;

// Entities drawn from a small vocabulary so that identities, keys and
// values collide often enough to exercise ties and partial matches.
template <class Set>
Set random_entity_set(rng::Engine& eng, std::size_t max_entities, std::size_t max_attributes) {
  static const std::vector<std::string> ids{"mug", "red mug", "cd 1", "desk 2", "lamp", "drawer", "safe 1"};
  static const std::vector<std::string> keys{"location", "position", "state", "color", "temperature"};
  static const std::vector<std::string> values{
      "The mug is on the desk.", "The mug is in the sink.", "The lamp is on.",       "The lamp is off.",
      "The cd is in the safe.",  "The drawer is open.",     "The drawer is closed.", "The mug is hot."};
  std::vector<std::string> pool = ids;
  rng::shuffle(eng, pool);
  const std::size_t n = rng::uniform_index(eng, max_entities + 1);
  std::vector<Entity> out;
  for (std::size_t i = 0; i < n; ++i) {
    Entity e{pool[i], {}};
    std::vector<std::string> ks = keys;
    rng::shuffle(eng, ks);
    const std::size_t m = rng::uniform_index(eng, max_attributes + 1);
    for (std::size_t j = 0; j < m; ++j) e.attributes.push_back({ks[j], values[rng::uniform_index(eng, values.size())]});
    out.push_back(std::move(e));
  }
  return Set(std::move(out));
}

}  // namespace fixtures
