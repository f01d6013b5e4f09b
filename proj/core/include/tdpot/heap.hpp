#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <utility>
#include <vector>

#include "tdpot/types.hpp"

namespace tdpot {

/// 4-ary min-heap over integer IDs in [0, n) with decrease-key through a
/// position index. Ties on the key are broken by smaller ID, so extraction
/// order is fully deterministic.
class QuaternaryHeap {
 public:
  using Key = std::int64_t;

  explicit QuaternaryHeap(std::uint32_t capacity = 0) : position_(capacity, kAbsent) {}

  void resize(std::uint32_t capacity) {
    heap_.clear();
    position_.assign(capacity, kAbsent);
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  bool contains(std::uint32_t id) const { return position_[id] != kAbsent; }
  Key key(std::uint32_t id) const { return heap_[position_[id]].key; }

  std::pair<std::uint32_t, Key> top() const { return {heap_[0].id, heap_[0].key}; }

  void push(std::uint32_t id, Key key) {
    assert(!contains(id));
    position_[id] = static_cast<std::uint32_t>(heap_.size());
    heap_.push_back({key, id});
    sift_up(heap_.size() - 1);
  }

  void decrease_key(std::uint32_t id, Key key) {
    std::size_t i = position_[id];
    assert(key <= heap_[i].key);
    heap_[i].key = key;
    sift_up(i);
  }

  void push_or_decrease(std::uint32_t id, Key key) {
    if (!contains(id))
      push(id, key);
    else if (key < heap_[position_[id]].key)
      decrease_key(id, key);
  }

  std::pair<std::uint32_t, Key> pop() {
    Entry min = heap_[0];
    position_[min.id] = kAbsent;
    Entry last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      position_[last.id] = 0;
      sift_down(0);
    }
    return {min.id, min.key};
  }

  /// Empties the heap in O(size).
  void clear() {
    for (const auto& e : heap_) position_[e.id] = kAbsent;
    heap_.clear();
  }

 private:
  static constexpr std::uint32_t kAbsent = ~std::uint32_t{0};
  static constexpr std::size_t kArity = 4;

  struct Entry {
    Key key;
    std::uint32_t id;
    bool operator<(const Entry& o) const { return key < o.key || (key == o.key && id < o.id); }
  };

  void sift_up(std::size_t i) {
    Entry x = heap_[i];
    while (i > 0) {
      std::size_t parent = (i - 1) / kArity;
      if (!(x < heap_[parent])) break;
      heap_[i] = heap_[parent];
      position_[heap_[i].id] = static_cast<std::uint32_t>(i);
      i = parent;
    }
    heap_[i] = x;
    position_[x.id] = static_cast<std::uint32_t>(i);
  }

  void sift_down(std::size_t i) {
    Entry x = heap_[i];
    const std::size_t n = heap_.size();
    for (;;) {
      std::size_t first = i * kArity + 1;
      if (first >= n) break;
      std::size_t best = first;
      std::size_t stop = std::min(first + kArity, n);
      for (std::size_t c = first + 1; c < stop; ++c)
        if (heap_[c] < heap_[best]) best = c;
      if (!(heap_[best] < x)) break;
      heap_[i] = heap_[best];
      position_[heap_[i].id] = static_cast<std::uint32_t>(i);
      i = best;
    }
    heap_[i] = x;
    position_[x.id] = static_cast<std::uint32_t>(i);
  }

  std::vector<Entry> heap_;
  std::vector<std::uint32_t> position_;
};

/// Per-vertex array reset in O(1) by bumping a generation counter.
template <class T>
class TimestampedArray {
 public:
  TimestampedArray(std::size_t n, T init) : value_(n, init), stamp_(n, 0), init_(init) {}

  void reset() {
    if (++generation_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      generation_ = 1;
    }
  }

  const T& operator[](std::size_t i) const { return stamp_[i] == generation_ ? value_[i] : init_; }

  T& at(std::size_t i) {
    if (stamp_[i] != generation_) {
      stamp_[i] = generation_;
      value_[i] = init_;
    }
    return value_[i];
  }

  void set(std::size_t i, T v) {
    stamp_[i] = generation_;
    value_[i] = std::move(v);
  }

  bool is_set(std::size_t i) const { return stamp_[i] == generation_; }
  std::size_t size() const { return value_.size(); }

 private:
  std::vector<T> value_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t generation_ = 1;
  T init_;
};

}  // namespace tdpot
