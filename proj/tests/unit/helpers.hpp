#pragma once

#include <string>
#include <vector>

#include "coforget/core.hpp"
#include "coforget/rng.hpp"

namespace coforget::test {

inline MemoryRecord record(std::string id, Embedding e, Timestamp t_last = 0.0,
                           std::string agent = "planner-1", double salience = 0.5) {
  return MemoryRecord{std::move(id), std::move(e), std::move(agent), t_last, salience};
}

inline Embedding random_embedding(std::size_t dim, Rng& rng) {
  Embedding e(dim);
  for (auto& x : e) x = rng.normal();
  return e;
}

inline std::vector<AgentProfile> paper_agents() {
  return {{"perception-1", 1.0, 1.0, true, {}},
          {"perception-2", 1.0, 1.0, true, {}},
          {"planner-1", 1.5, 1.0, true, {}},
          {"planner-2", 1.5, 1.0, true, {}}};
}

}  // namespace coforget::test
