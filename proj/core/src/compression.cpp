#include "tdpot/compression.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <queue>
#include <thread>

namespace tdpot {
namespace {

constexpr std::uint64_t kMaxSum = std::numeric_limits<std::uint64_t>::max();

std::uint64_t add_range(std::uint64_t sum, const Weight* a, const Weight* b, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    std::uint64_t d = squared_difference(a[i], b[i]);
    sum = sum > kMaxSum - d ? kMaxSum : sum + d;
  }
  return sum;
}

struct Pair {
  std::uint64_t key;  // exact once resume == length, a lower bound before
  std::uint32_t first, second;
  std::size_t resume;

  // Min-heap order on (key, first, second).
  bool operator<(const Pair& o) const {
    if (key != o.key) return key > o.key;
    if (first != o.first) return first > o.first;
    return second > o.second;
  }
};

}  // namespace

std::uint64_t difference_sum(std::span<const Weight> a, std::span<const Weight> b) {
  if (a.size() != b.size()) throw CompressionError("functions differ in length");
  return add_range(0, a.data(), b.data(), 0, a.size());
}

Compressed compress(const std::vector<std::span<const Weight>>& input, std::uint32_t k, CompressionOptions options) {
  const auto n = static_cast<std::uint32_t>(input.size());
  if (n == 0) throw CompressionError("no functions to compress");
  if (k < 1 || k > n) throw CompressionError("target count must be in [1, number of functions]");
  const std::size_t len = input[0].size();
  for (const auto& f : input)
    if (f.size() != len) throw CompressionError("functions differ in length");
  const std::size_t chunk = std::max<std::size_t>(options.chunk, 1);
  const unsigned threads = std::max(1u, options.threads);

  // Views of all functions by ID; merged ones are owned by `owned`.
  std::vector<const Weight*> data;
  std::vector<std::vector<Weight>> owned;
  std::vector<std::uint8_t> active(n, 1);
  std::vector<std::uint32_t> parent(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    data.push_back(input[i].data());
    parent[i] = i;
  }
  owned.reserve(n);

  std::priority_queue<Pair> open;      // unfinished and finished pairs
  std::priority_queue<Pair> finished;  // finished only, for the stopping bound
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) open.push({0, i, j, 0});
  if (len == 0) {
    // Every pair is trivially finished with difference 0.
    std::priority_queue<Pair> done;
    while (!open.empty()) {
      Pair p = open.top();
      open.pop();
      p.resume = len;
      done.push(p);
    }
    open.swap(done);
  }

  auto is_live = [&](const Pair& p) { return active[p.first] && active[p.second]; };
  auto delta_min = [&]() {
    while (!finished.empty() && !is_live(finished.top())) finished.pop();
    return finished.empty() ? kMaxSum : finished.top().key;
  };

  // Continues a pair until it is finished or exceeds the bound.
  auto advance = [&](Pair& p, const std::atomic<std::uint64_t>& bound) {
    const Weight* a = data[p.first];
    const Weight* b = data[p.second];
    while (p.resume < len) {
      std::size_t end = std::min(len, p.resume + chunk);
      p.key = add_range(p.key, a, b, p.resume, end);
      p.resume = end;
      if (p.resume < len && p.key > bound.load(std::memory_order_relaxed)) break;
    }
  };

  Compressed result;
  std::uint32_t remaining = n;
  std::vector<Pair> batch;
  while (remaining > k) {
    Pair best{};
    for (;;) {
      Pair p = open.top();
      open.pop();
      if (!is_live(p)) continue;
      if (p.resume == len) {
        best = p;
        break;
      }
      // Collect up to `threads` live unfinished pairs and continue them.
      batch.assign(1, p);
      while (batch.size() < threads && !open.empty()) {
        const Pair& q = open.top();
        if (!is_live(q)) {
          open.pop();
          continue;
        }
        if (q.resume == len) break;
        batch.push_back(q);
        open.pop();
      }
      std::atomic<std::uint64_t> bound{delta_min()};
      auto work = [&](std::size_t i) {
        advance(batch[i], bound);
        if (batch[i].resume == len) {
          std::uint64_t cur = bound.load();
          while (batch[i].key < cur && !bound.compare_exchange_weak(cur, batch[i].key)) {
          }
        }
      };
      if (batch.size() == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 1; i < batch.size(); ++i) pool.emplace_back(work, i);
        work(0);
        for (auto& t : pool) t.join();
      }
      for (const Pair& q : batch) {
        open.push(q);
        if (q.resume == len) finished.push(q);
      }
    }

    // Merge best.first and best.second into a new function.
    const auto id = static_cast<std::uint32_t>(data.size());
    std::vector<Weight> merged(len);
    const Weight* a = data[best.first];
    const Weight* b = data[best.second];
    for (std::size_t i = 0; i < len; ++i) merged[i] = std::min(a[i], b[i]);
    owned.push_back(std::move(merged));
    data.push_back(owned.back().data());
    active[best.first] = active[best.second] = 0;
    active.push_back(1);
    parent.push_back(id);
    parent[best.first] = parent[best.second] = id;
    result.steps.push_back({best.first, best.second, id, best.key});
    --remaining;
    for (std::uint32_t other = 0; other < id; ++other)
      if (active[other]) open.push({0, other, id, len == 0 ? len : 0});
  }

  // Survivors in ID order.
  std::vector<std::uint32_t> index(data.size(), kInvalidId);
  for (std::uint32_t id = 0; id < data.size(); ++id) {
    if (!active[id]) continue;
    index[id] = static_cast<std::uint32_t>(result.functions.size());
    result.functions.emplace_back(data[id], data[id] + len);
  }
  result.table.resize(n);
  for (std::uint32_t slot = 0; slot < n; ++slot) {
    std::uint32_t id = slot;
    while (parent[id] != id) id = parent[id];
    result.table[slot] = index[id];
  }
  return result;
}

Compressed compress(const std::vector<std::vector<Weight>>& functions, std::uint32_t k, CompressionOptions options) {
  std::vector<std::span<const Weight>> views(functions.begin(), functions.end());
  return compress(views, k, options);
}

}  // namespace tdpot
