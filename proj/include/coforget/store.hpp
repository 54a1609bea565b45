#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coforget/core.hpp"
#include "coforget/lru_cache.hpp"

namespace coforget {

/// Exact cosine-similarity index over fixed-dimension embeddings.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dimension);

  /// Insert-or-overwrite; one call regardless of batch length.
  void upsert(std::span<const std::pair<std::string, Embedding>> batch);
  std::optional<Embedding> fetch(const std::string& id);
  std::size_t erase(std::span<const std::string> ids);

  /// Up to k ids by descending cosine, ties by id. Throws EmptyIndex.
  std::vector<std::string> query(const Embedding& embedding, std::size_t k) const;

  bool contains(const std::string& id) const { return entries_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }
  std::size_t dimension() const { return dimension_; }
  std::vector<std::string> keys() const;
  const std::map<std::string, Embedding>& entries() const { return entries_; }

  std::size_t upsert_calls() const { return upsert_calls_; }
  std::size_t fetch_calls() const { return fetch_calls_; }
  std::size_t delete_calls() const { return delete_calls_; }

 private:
  void check_dimension(const Embedding& e) const;

  std::size_t dimension_;
  std::map<std::string, Embedding> entries_;
  std::size_t upsert_calls_ = 0;
  std::size_t fetch_calls_ = 0;
  std::size_t delete_calls_ = 0;
};

struct MetadataRow {
  std::string agent_id;
  Timestamp timestamp = 0.0;
  double salience = 0.0;

  bool operator==(const MetadataRow&) const = default;
};

/// The `memories` table: id -> (agent_id, timestamp, salience). commit()
/// rewrites the CSV snapshot when a path is configured.
class MetadataTable {
 public:
  void upsert(const std::string& id, MetadataRow row);
  std::optional<MetadataRow> find(const std::string& id) const;
  std::size_t erase(std::span<const std::string> ids);
  void commit();

  void set_snapshot_path(std::filesystem::path path) { snapshot_path_ = std::move(path); }
  const std::filesystem::path& snapshot_path() const { return snapshot_path_; }

  /// Header `id,agent_id,timestamp,salience`; RFC 4180 quoting; timestamps
  /// with nine decimal places.
  void write_csv(std::ostream& out) const;
  /// Throws ConfigSyntax on a malformed snapshot.
  static MetadataTable read_csv(std::istream& in);

  bool contains(const std::string& id) const { return rows_.count(id) != 0; }
  std::size_t size() const { return rows_.size(); }
  std::vector<std::string> keys() const;
  const std::map<std::string, MetadataRow>& rows() const { return rows_; }
  std::size_t commits() const { return commits_; }

 private:
  std::map<std::string, MetadataRow> rows_;
  std::filesystem::path snapshot_path_;
  std::size_t commits_ = 0;
};

/// Pending upserts in first-write order; a later write for the same id
/// replaces the record but keeps its position.
class WriteBuffer {
 public:
  void append(const MemoryRecord& record);
  const MemoryRecord* find(const std::string& id) const;
  bool erase(const std::string& id);
  std::vector<MemoryRecord> drain();

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  template <typename F>
  void for_each(F&& fn) const {
    for (const auto& id : order_) fn(records_.at(id));
  }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, MemoryRecord> records_;
};

struct StoreOptions {
  std::size_t dimension = 768;
  std::size_t cache_capacity = 100;
  std::size_t batch_size = 50;
  double batch_interval_s = 10.0;
  std::filesystem::path snapshot_path;  // empty: no snapshot file
};

StoreOptions store_options(const ProtocolConfig& cfg);

struct StoreStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t puts = 0;
  std::size_t buffered_writes = 0;  // appends to the write buffer
  std::size_t upsert_calls = 0;
  std::size_t size_flushes = 0;
  std::size_t time_flushes = 0;
  std::size_t forced_flushes = 0;
  std::size_t flushed_records = 0;
  std::size_t deleted = 0;

  double hit_rate() const {
    const auto total = hits + misses;
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
};

/// Vector index + metadata table behind an LRU cache of full records and a
/// batched write buffer.
///
/// Every get is a touch: the returned record carries t_last = now and is
/// queued for write-back. Records written but not yet flushed are visible to
/// get() and snapshot(). query_similar() only sees flushed records, as a
/// remote index would.
class MemoryStore {
 public:
  explicit MemoryStore(StoreOptions options, Timestamp start = 0.0);

  std::optional<MemoryRecord> get(const std::string& id, Timestamp now);

  /// Throws DimensionMismatch, or InvalidParameter for a record breaking the
  /// id / t_last / salience invariants.
  void put(MemoryRecord record, Timestamp now);

  /// Flushes when the buffer holds batch_size records or more than
  /// batch_interval_s has passed since the last flush. Returns records flushed.
  std::size_t maybe_flush(Timestamp now);

  /// Unconditional flush of whatever is pending.
  std::size_t flush(Timestamp now);

  /// Removes ids everywhere, including unflushed writes. Unknown ids are
  /// ignored. Returns how many ids were present.
  std::size_t erase(std::span<const std::string> ids);

  /// Throws EmptyIndex when nothing has been flushed, DimensionMismatch.
  std::vector<std::string> query_similar(const Embedding& embedding, std::size_t k) const;

  /// All live records including unflushed writes, ordered by id. Does not
  /// touch the cache or counters.
  std::vector<MemoryRecord> snapshot() const;

  bool contains(const std::string& id) const;
  std::size_t size() const;
  bool consistent() const;  // index keys == table keys

  const StoreStats& stats() const { return stats_; }
  const VectorIndex& index() const { return index_; }
  const MetadataTable& table() const { return table_; }
  const WriteBuffer& buffer() const { return buffer_; }
  const LruCache<std::string, MemoryRecord>& cache() const { return cache_; }
  const StoreOptions& options() const { return options_; }
  Timestamp last_flush() const { return last_flush_; }

 private:
  std::size_t flush_pending(Timestamp now);
  void touch(MemoryRecord& record, Timestamp now);

  StoreOptions options_;
  VectorIndex index_;
  MetadataTable table_;
  WriteBuffer buffer_;
  LruCache<std::string, MemoryRecord> cache_;
  Timestamp last_flush_;
  StoreStats stats_;
};

}  // namespace coforget
