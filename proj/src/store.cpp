#include "coforget/store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "coforget/log.hpp"
#include "coforget/relevance.hpp"

namespace coforget {

VectorIndex::VectorIndex(std::size_t dimension) : dimension_(dimension) {}

void VectorIndex::check_dimension(const Embedding& e) const {
  if (e.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("embedding has {} components, index expects {}", e.size(), dimension_));
  }
}

void VectorIndex::upsert(std::span<const std::pair<std::string, Embedding>> batch) {
  for (const auto& [id, e] : batch) check_dimension(e);
  for (const auto& [id, e] : batch) entries_[id] = e;
  ++upsert_calls_;
}

std::optional<Embedding> VectorIndex::fetch(const std::string& id) {
  ++fetch_calls_;
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t VectorIndex::erase(std::span<const std::string> ids) {
  ++delete_calls_;
  std::size_t n = 0;
  for (const auto& id : ids) n += entries_.erase(id);
  return n;
}

std::vector<std::string> VectorIndex::query(const Embedding& embedding, std::size_t k) const {
  check_dimension(embedding);
  if (entries_.empty()) throw Error(ErrorCode::EmptyIndex, "query on an empty index");
  if (k == 0) throw Error(ErrorCode::InvalidParameter, "k must be at least 1");

  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(entries_.size());
  for (const auto& [id, e] : entries_) scored.emplace_back(cosine_similarity(embedding, e), &id);
  const auto take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return *a.second < *b.second;
                    });
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(*scored[i].second);
  return out;
}

std::vector<std::string> VectorIndex::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

void MetadataTable::upsert(const std::string& id, MetadataRow row) { rows_[id] = std::move(row); }

std::optional<MetadataRow> MetadataTable::find(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

std::size_t MetadataTable::erase(std::span<const std::string> ids) {
  std::size_t n = 0;
  for (const auto& id : ids) n += rows_.erase(id);
  return n;
}

void MetadataTable::commit() {
  ++commits_;
  if (snapshot_path_.empty()) return;
  const auto tmp = std::filesystem::path(snapshot_path_).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", tmp.string()));
    write_csv(out);
    if (!out) throw Error(ErrorCode::Io, fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, snapshot_path_, ec);
  if (ec) throw Error(ErrorCode::Io, fmt::format("cannot replace {}", snapshot_path_.string()));
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// One RFC 4180 record; false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else if (c == '\n') {
      break;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::ConfigSyntax, "unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

void MetadataTable::write_csv(std::ostream& out) const {
  out << "id,agent_id,timestamp,salience\r\n";
  for (const auto& [id, row] : rows_) {
    out << csv_field(id) << ',' << csv_field(row.agent_id) << ','
        << fmt::format("{:.9f}", row.timestamp) << ',' << fmt::format("{}", row.salience) << "\r\n";
  }
}

MetadataTable MetadataTable::read_csv(std::istream& in) {
  MetadataTable table;
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields) ||
      fields != std::vector<std::string>{"id", "agent_id", "timestamp", "salience"}) {
    throw Error(ErrorCode::ConfigSyntax, "snapshot header must be id,agent_id,timestamp,salience");
  }
  std::size_t line = 1;
  while (read_csv_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 4) {
      throw Error(ErrorCode::ConfigSyntax,
                  fmt::format("snapshot record {} has {} fields", line, fields.size()));
    }
    table.rows_[fields[0]] =
        MetadataRow{fields[1], parse_real("timestamp", fields[2]), parse_real("salience", fields[3])};
  }
  return table;
}

std::vector<std::string> MetadataTable::keys() const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& [id, row] : rows_) out.push_back(id);
  return out;
}

void WriteBuffer::append(const MemoryRecord& record) {
  auto [it, inserted] = records_.insert_or_assign(record.id, record);
  if (inserted) order_.push_back(record.id);
}

const MemoryRecord* WriteBuffer::find(const std::string& id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

bool WriteBuffer::erase(const std::string& id) {
  if (records_.erase(id) == 0) return false;
  order_.erase(std::find(order_.begin(), order_.end(), id));
  return true;
}

std::vector<MemoryRecord> WriteBuffer::drain() {
  std::vector<MemoryRecord> out;
  out.reserve(order_.size());
  for (const auto& id : order_) out.push_back(std::move(records_.at(id)));
  order_.clear();
  records_.clear();
  return out;
}

StoreOptions store_options(const ProtocolConfig& cfg) {
  return StoreOptions{cfg.dimension, cfg.cache_capacity, cfg.batch_size, cfg.batch_interval_s, {}};
}

MemoryStore::MemoryStore(StoreOptions options, Timestamp start)
    : options_(std::move(options)),
      index_(options_.dimension),
      cache_(options_.cache_capacity),
      last_flush_(start) {
  table_.set_snapshot_path(options_.snapshot_path);
}

void MemoryStore::touch(MemoryRecord& record, Timestamp now) {
  record.t_last = now;
  cache_.put(record.id, record);
  buffer_.append(record);
  ++stats_.buffered_writes;
}

std::optional<MemoryRecord> MemoryStore::get(const std::string& id, Timestamp now) {
  MemoryRecord record;
  if (const auto* cached = cache_.get(id)) {
    ++stats_.hits;
    record = *cached;
  } else {
    ++stats_.misses;
    if (const auto* pending = buffer_.find(id)) {
      record = *pending;
    } else {
      auto embedding = index_.fetch(id);
      auto row = table_.find(id);
      if (!embedding || !row) {
        logger().error("memory id not found: {}", id);
        return std::nullopt;
      }
      record = MemoryRecord{id, std::move(*embedding), row->agent_id, row->timestamp, row->salience};
    }
  }
  touch(record, now);
  maybe_flush(now);
  return record;
}

void MemoryStore::put(MemoryRecord record, Timestamp now) {
  if (record.embedding.size() != options_.dimension) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("record '{}' has {} components, store expects {}", record.id,
                            record.embedding.size(), options_.dimension));
  }
  if (record.id.empty()) throw Error(ErrorCode::InvalidParameter, "record id is empty");
  if (!(record.t_last >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, fmt::format("record '{}' has t_last < 0", record.id));
  }
  if (!(record.salience >= 0.0 && record.salience <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("record '{}' salience outside [0,1]", record.id));
  }
  ++stats_.puts;
  cache_.put(record.id, record);
  buffer_.append(record);
  ++stats_.buffered_writes;
  maybe_flush(now);
}

std::size_t MemoryStore::maybe_flush(Timestamp now) {
  if (buffer_.empty()) return 0;
  if (buffer_.size() >= options_.batch_size) {
    ++stats_.size_flushes;
    return flush_pending(now);
  }
  if (now - last_flush_ > options_.batch_interval_s) {
    ++stats_.time_flushes;
    return flush_pending(now);
  }
  return 0;
}

std::size_t MemoryStore::flush(Timestamp now) {
  if (buffer_.empty()) return 0;
  ++stats_.forced_flushes;
  return flush_pending(now);
}

std::size_t MemoryStore::flush_pending(Timestamp now) {
  auto records = buffer_.drain();
  std::vector<std::pair<std::string, Embedding>> vectors;
  vectors.reserve(records.size());
  for (const auto& r : records) vectors.emplace_back(r.id, r.embedding);
  index_.upsert(vectors);
  ++stats_.upsert_calls;
  for (const auto& r : records) table_.upsert(r.id, MetadataRow{r.agent_id, r.t_last, r.salience});
  table_.commit();
  last_flush_ = now;
  stats_.flushed_records += records.size();
  return records.size();
}

std::size_t MemoryStore::erase(std::span<const std::string> ids) {
  std::size_t removed = 0;
  for (const auto& id : ids) {
    const bool present = index_.contains(id) || buffer_.find(id) != nullptr;
    if (present) ++removed;
    cache_.erase(id);
    buffer_.erase(id);
  }
  index_.erase(ids);
  table_.erase(ids);
  table_.commit();
  stats_.deleted += removed;
  return removed;
}

std::vector<std::string> MemoryStore::query_similar(const Embedding& embedding,
                                                    std::size_t k) const {
  return index_.query(embedding, k);
}

std::vector<MemoryRecord> MemoryStore::snapshot() const {
  std::map<std::string, MemoryRecord> all;
  for (const auto& [id, embedding] : index_.entries()) {
    const auto row = table_.find(id);
    if (!row) continue;
    all[id] = MemoryRecord{id, embedding, row->agent_id, row->timestamp, row->salience};
  }
  buffer_.for_each([&](const MemoryRecord& r) { all[r.id] = r; });
  std::vector<MemoryRecord> out;
  out.reserve(all.size());
  for (auto& [id, r] : all) out.push_back(std::move(r));
  return out;
}

bool MemoryStore::contains(const std::string& id) const {
  return index_.contains(id) || buffer_.find(id) != nullptr;
}

std::size_t MemoryStore::size() const {
  std::size_t n = index_.size();
  buffer_.for_each([&](const MemoryRecord& r) {
    if (!index_.contains(r.id)) ++n;
  });
  return n;
}

bool MemoryStore::consistent() const { return index_.keys() == table_.keys(); }

}  // namespace coforget
