#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <list>
#include <map>
#include <sstream>

#include "coforget/lru_cache.hpp"
#include "coforget/store.hpp"
#include "helpers.hpp"

using namespace coforget;
using coforget::test::record;

namespace {

// Brute-force LRU: a list in recency order, front is most recent.
struct ListLru {
  std::size_t capacity;
  std::list<std::pair<int, int>> items;

  std::optional<int> get(int k) {
    for (auto it = items.begin(); it != items.end(); ++it) {
      if (it->first == k) {
        auto kv = *it;
        items.erase(it);
        items.push_front(kv);
        return kv.second;
      }
    }
    return std::nullopt;
  }
  std::optional<int> put(int k, int v) {
    for (auto it = items.begin(); it != items.end(); ++it) {
      if (it->first == k) {
        items.erase(it);
        items.push_front({k, v});
        return std::nullopt;
      }
    }
    std::optional<int> evicted;
    if (items.size() >= capacity) {
      evicted = items.back().first;
      items.pop_back();
    }
    items.push_front({k, v});
    return evicted;
  }
  void erase(int k) {
    items.remove_if([&](const auto& kv) { return kv.first == k; });
  }
};

StoreOptions small_options(std::size_t batch = 5, double interval = 10.0) {
  StoreOptions o;
  o.dimension = 3;
  o.cache_capacity = 4;
  o.batch_size = batch;
  o.batch_interval_s = interval;
  return o;
}

}  // namespace

TEST_CASE("LRU cache matches a brute-force list") {
  Rng rng(1);
  LruCache<int, int> cache(8);
  ListLru oracle{8, {}};
  for (int i = 0; i < 20000; ++i) {
    const int k = static_cast<int>(rng.uniform_int(0, 20));
    switch (rng.uniform_int(0, 2)) {
      case 0: {
        auto* got = cache.get(k);
        auto want = oracle.get(k);
        CHECK(want.has_value() == (got != nullptr));
        if (got && want) CHECK(*got == *want);
        break;
      }
      case 1:
        CHECK(cache.put(k, i) == oracle.put(k, i));
        break;
      default:
        cache.erase(k);
        oracle.erase(k);
    }
    CHECK(cache.size() == oracle.items.size());
  }
}

TEST_CASE("LRU eviction order and peek") {
  LruCache<std::string, int> c(2);
  c.put("a", 1);
  c.put("b", 2);
  CHECK(c.get("a") != nullptr);  // a is now most recent
  CHECK(c.put("c", 3) == std::optional<std::string>("b"));
  CHECK(c.peek("b") == nullptr);
  CHECK(c.evictions() == 1);
  CHECK(*c.peek("a") == 1);
}

TEST_CASE("get touches t_last and counts hits and misses") {
  MemoryStore s(small_options(), 0.0);
  s.put(record("m1", {1, 0, 0}, 5.0), 0.0);
  s.flush(0.0);
  auto r = s.get("m1", 20.0);  // cached since put
  REQUIRE(r.has_value());
  CHECK(r->t_last == 20.0);
  CHECK(s.stats().hits == 1);
  CHECK_FALSE(s.get("nope", 21.0).has_value());
  CHECK(s.stats().misses == 1);
  CHECK(s.stats().hits + s.stats().misses == 2);
}

TEST_CASE("misses read through the buffer and the index") {
  StoreOptions o = small_options(100, 1000.0);
  o.cache_capacity = 1;
  MemoryStore s(o, 0.0);
  s.put(record("a", {1, 0, 0}, 1.0), 0.0);
  s.put(record("b", {0, 1, 0}, 1.0), 0.0);  // evicts a from the cache
  auto a = s.get("a", 2.0);                  // from the write buffer
  REQUIRE(a.has_value());
  CHECK(a->embedding == Embedding{1, 0, 0});
  s.flush(2.0);
  auto b = s.get("b", 3.0);  // from index + table
  REQUIRE(b.has_value());
  CHECK(b->agent_id == "planner-1");
  CHECK(s.stats().misses == 2);
}

TEST_CASE("size-triggered batching") {
  MemoryStore s(small_options(5, 1e9), 0.0);
  for (int i = 0; i < 23; ++i) s.put(record("m" + std::to_string(i), {1, 1, 1}), 0.0);
  CHECK(s.stats().upsert_calls == 4);
  CHECK(s.stats().size_flushes == 4);
  CHECK(s.buffer().size() == 3);
  CHECK(s.index().size() == 20);
  CHECK(s.consistent());
  CHECK(s.size() == 23);
}

TEST_CASE("time-triggered flush fires only strictly after the interval") {
  MemoryStore s(small_options(100, 10.0), 0.0);
  s.put(record("a", {1, 0, 0}), 10.0);
  CHECK(s.stats().time_flushes == 0);
  s.put(record("b", {1, 0, 0}), 10.5);
  CHECK(s.stats().time_flushes == 1);
  CHECK(s.buffer().empty());
  CHECK(s.last_flush() == 10.5);
}

TEST_CASE("erase purges unflushed writes so a later flush cannot resurrect them") {
  MemoryStore s(small_options(100, 1e9), 0.0);
  s.put(record("a", {1, 0, 0}), 0.0);
  s.put(record("b", {0, 1, 0}), 0.0);
  const std::vector<std::string> gone{"a", "zzz"};
  CHECK(s.erase(gone) == 1);
  s.flush(1.0);
  CHECK_FALSE(s.contains("a"));
  CHECK(s.contains("b"));
  CHECK_FALSE(s.get("a", 2.0).has_value());
  CHECK(s.consistent());
}

TEST_CASE("store matches a sequential map under random operations") {
  Rng rng(31);
  StoreOptions o = small_options(7, 3.0);
  MemoryStore s(o, 0.0);
  std::map<std::string, MemoryRecord> model;
  double now = 0.0;
  for (int i = 0; i < 20000; ++i) {
    now += rng.uniform(0.0, 0.5);
    const std::string id = "m" + std::to_string(rng.uniform_int(0, 30));
    switch (rng.uniform_int(0, 3)) {
      case 0: {
        auto r = record(id, {rng.uniform(), rng.uniform(), 1.0}, now, "a", rng.uniform());
        model[id] = r;
        s.put(r, now);
        break;
      }
      case 1: {
        const auto got = s.get(id, now);
        auto it = model.find(id);
        REQUIRE(got.has_value() == (it != model.end()));
        if (got) {
          it->second.t_last = now;
          CHECK(same_contents(*got, it->second));
        }
        break;
      }
      case 2: {
        const std::vector<std::string> ids{id};
        s.erase(ids);
        model.erase(id);
        CHECK(s.consistent());
        break;
      }
      default:
        s.maybe_flush(now);
        CHECK(s.consistent());
    }
  }
  const auto snap = s.snapshot();
  REQUIRE(snap.size() == model.size());
  std::size_t k = 0;
  for (const auto& [id, r] : model) CHECK(same_contents(snap[k++], r));
  CHECK(s.stats().upsert_calls <=
        (s.stats().buffered_writes + o.batch_size - 1) / o.batch_size + s.stats().time_flushes +
            s.stats().forced_flushes);
}

TEST_CASE("put validation") {
  MemoryStore s(small_options(), 0.0);
  CHECK_THROWS_AS(s.put(record("a", {1, 0}), 0.0), Error);
  CHECK_THROWS_AS(s.put(record("", {1, 0, 0}), 0.0), Error);
  CHECK_THROWS_AS(s.put(record("a", {1, 0, 0}, -1.0), 0.0), Error);
  CHECK_THROWS_AS(s.put(record("a", {1, 0, 0}, 0.0, "x", 1.5), 0.0), Error);
}

TEST_CASE("similarity queries see flushed records only") {
  MemoryStore s(small_options(100, 1e9), 0.0);
  CHECK_THROWS_AS(s.query_similar({1, 0, 0}, 1), Error);
  s.put(record("near", {1, 0.1, 0}), 0.0);
  s.put(record("far", {-1, 0, 0}), 0.0);
  s.put(record("twin", {2, 0.2, 0}), 0.0);
  s.flush(0.0);
  s.put(record("late", {1, 0, 0}), 0.0);
  CHECK(s.query_similar({1, 0, 0}, 2) == std::vector<std::string>{"near", "twin"});
  CHECK(s.query_similar({1, 0, 0}, 10).size() == 3);
  CHECK_THROWS_AS(s.query_similar({1, 0}, 1), Error);
}

TEST_CASE("metadata csv round-trips with quoting") {
  MetadataTable t;
  t.upsert("plain", {"planner-1", 12.5, 0.25});
  t.upsert("with,comma", {"agent \"q\"", 1e-7, 1.0});
  t.upsert("line\nbreak", {"x", 0.0, 0.0});
  std::ostringstream out;
  t.write_csv(out);
  const auto text = out.str();
  CHECK(text.rfind("id,agent_id,timestamp,salience\r\n", 0) == 0);
  CHECK(text.find("12.500000000") != std::string::npos);
  std::istringstream in(text);
  const auto back = MetadataTable::read_csv(in);
  CHECK(back.rows() == t.rows());
  std::istringstream bad("id,agent_id,timestamp,salience\r\n\"unterminated,x,1,0\r\n");
  CHECK_THROWS_AS(MetadataTable::read_csv(bad), Error);
}

TEST_CASE("snapshot file is rewritten on commit") {
  const auto dir = std::filesystem::temp_directory_path() / "coforget_store_test";
  std::filesystem::create_directories(dir);
  StoreOptions o = small_options(1, 1e9);
  o.snapshot_path = dir / "memories.csv";
  MemoryStore s(o, 0.0);
  s.put(record("a", {1, 0, 0}, 3.0), 0.0);
  s.put(record("b", {1, 0, 0}, 4.0), 0.0);
  const std::vector<std::string> gone{"a"};
  s.erase(gone);
  std::ifstream in(o.snapshot_path);
  const auto table = MetadataTable::read_csv(in);
  CHECK(table.keys() == std::vector<std::string>{"b"});
  CHECK(table.find("b")->timestamp == 4.0);
  std::filesystem::remove_all(dir);
}
