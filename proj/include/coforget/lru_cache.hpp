#pragma once

#include <cstddef>
#include <list>
#include <optional>
#include <unordered_map>
#include <utility>

namespace coforget {

/// Fixed-capacity least-recently-used map. get() and put() both count as a
/// use; peek() and contains() do not.
template <typename Key, typename Value, typename Hash = std::hash<Key>>
class LruCache {
 public:
  explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

  Value* get(const Key& key) {
    auto it = index_.find(key);
    if (it == index_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second);
    return &it->second->second;
  }

  const Value* peek(const Key& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &it->second->second;
  }

  bool contains(const Key& key) const { return index_.count(key) != 0; }

  /// Inserts or overwrites; returns the evicted key, if any.
  std::optional<Key> put(const Key& key, Value value) {
    if (auto it = index_.find(key); it != index_.end()) {
      it->second->second = std::move(value);
      order_.splice(order_.begin(), order_, it->second);
      return std::nullopt;
    }
    if (capacity_ == 0) return key;
    std::optional<Key> evicted;
    if (order_.size() >= capacity_) {
      evicted = std::move(order_.back().first);
      index_.erase(*evicted);
      order_.pop_back();
      ++evictions_;
    }
    order_.emplace_front(key, std::move(value));
    index_.emplace(key, order_.begin());
    return evicted;
  }

  bool erase(const Key& key) {
    auto it = index_.find(key);
    if (it == index_.end()) return false;
    order_.erase(it->second);
    index_.erase(it);
    return true;
  }

  void clear() {
    order_.clear();
    index_.clear();
  }

  std::size_t size() const { return order_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t evictions() const { return evictions_; }

  /// Keys from most to least recently used.
  template <typename F>
  void for_each_key(F&& fn) const {
    for (const auto& [k, v] : order_) fn(k);
  }

 private:
  using Entry = std::pair<Key, Value>;

  std::size_t capacity_;
  std::size_t evictions_ = 0;
  std::list<Entry> order_;
  std::unordered_map<Key, typename std::list<Entry>::iterator, Hash> index_;
};

}  // namespace coforget
