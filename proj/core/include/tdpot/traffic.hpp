#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <vector>

#include "tdpot/graph.hpp"
#include "tdpot/ttf.hpp"
#include "tdpot/types.hpp"

namespace tdpot {

/// Length of the live lower-bound window starting at tau_now.
inline constexpr Duration kLiveWindow = 59 * 60 * 1000;

struct LiveEntry {
  EdgeId edge;
  Duration live;  // kInfinity for a blocked edge
  Timestamp end;
};

struct OverlayLoadStats {
  std::size_t accepted = 0;
  std::size_t dropped_not_slower = 0;  // live <= p(e, tau_now)
  std::size_t dropped_invalid = 0;     // unknown edge, end before tau_now, duplicate
};

/// Live travel times with expiry, dense per edge. Edges without an entry
/// behave as if end(e) == tau_now, i.e. the live term never applies.
class LiveOverlay {
 public:
  LiveOverlay() = default;
  LiveOverlay(const TravelTimeFunctions& predicted, Timestamp tau_now, std::vector<LiveEntry> entries,
              OverlayLoadStats* stats = nullptr);

  static LiveOverlay empty(const TravelTimeFunctions& predicted, Timestamp tau_now) {
    return LiveOverlay(predicted, tau_now, {});
  }

  Timestamp tau_now() const { return tau_now_; }
  const std::vector<LiveEntry>& entries() const { return entries_; }
  bool has_entry(EdgeId e) const { return end_[e] > tau_now_; }
  Duration live(EdgeId e) const { return live_[e]; }
  Timestamp end(EdgeId e) const { return end_[e]; }
  /// p(e, end(e)), cached because every live evaluation needs it.
  Duration predicted_at_end(EdgeId e) const { return predicted_at_end_[e]; }

 private:
  Timestamp tau_now_ = 0;
  std::vector<LiveEntry> entries_;
  std::vector<Duration> live_;
  std::vector<Timestamp> end_;
  std::vector<Duration> predicted_at_end_;
};

/// c(e, t) = max(p(e,t), min(live(e), p(e,end(e)) + end(e) - t)) for t < end(e),
/// p(e, t) afterwards.
inline Duration combined_eval(EdgeId e, Timestamp t, const TravelTimeFunctions& p, const LiveOverlay& o) {
  Duration predicted = p.evaluate(e, t);
  if (t >= o.end(e)) return predicted;
  Duration switch_back = o.predicted_at_end(e) + o.end(e) - t;
  return std::max(predicted, std::min(o.live(e), switch_back));
}

/// Query weight: predicted functions with a live overlay on top.
class CombinedWeights {
 public:
  CombinedWeights(const TravelTimeFunctions& predicted, std::shared_ptr<const LiveOverlay> overlay)
      : predicted_(&predicted), overlay_(std::move(overlay)) {}

  Duration operator()(EdgeId e, Timestamp t) const { return combined_eval(e, t, *predicted_, *overlay_); }

  const TravelTimeFunctions& predicted() const { return *predicted_; }
  const LiveOverlay& overlay() const { return *overlay_; }

 private:
  const TravelTimeFunctions* predicted_;
  std::shared_ptr<const LiveOverlay> overlay_;
};

/// Plain predicted weights, for instances without live traffic.
class PredictedWeights {
 public:
  explicit PredictedWeights(const TravelTimeFunctions& predicted) : predicted_(&predicted) {}
  Duration operator()(EdgeId e, Timestamp t) const { return predicted_->evaluate(e, t); }

 private:
  const TravelTimeFunctions* predicted_;
};

struct TrafficBounds {
  std::vector<Weight> upper;     // max of c over the day, kInfWeight for blocked edges
  std::vector<Weight> live_lower;  // min of c over [tau_now, tau_now + window]
};

/// Exact minimum of c(e, .) over [a, b] with a >= tau_now.
Duration combined_min_over(EdgeId e, Timestamp a, Timestamp b, const TravelTimeFunctions& p, const LiveOverlay& o);

TrafficBounds extract_bounds(const TravelTimeFunctions& p, const LiveOverlay& o, Duration window = kLiveWindow);

/// Holder for the current overlay. Replacing it does not affect searches
/// that already grabbed the previous one.
class OverlayHandle {
 public:
  explicit OverlayHandle(std::shared_ptr<const LiveOverlay> initial) : current_(std::move(initial)) {}

  std::shared_ptr<const LiveOverlay> get() const {
    std::lock_guard lock(mutex_);
    return current_;
  }
  void replace(std::shared_ptr<const LiveOverlay> next) {
    std::lock_guard lock(mutex_);
    current_.swap(next);
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const LiveOverlay> current_;
};

/// Snapshot text format: first line tau_now_ms, then one `edge_id live_ms|INF end_ms` per line.
struct LiveSnapshot {
  Timestamp tau_now = 0;
  std::vector<LiveEntry> entries;
};

LiveSnapshot read_snapshot(const std::filesystem::path& file);
void write_snapshot(const std::filesystem::path& file, const LiveSnapshot& snapshot);

struct VertexPairEntry {
  Vertex from, to;
  Duration live;
  Timestamp end;
};

/// Resolves vertex-pair incidents to edge IDs; pairs without an edge are counted and skipped.
std::vector<LiveEntry> resolve_vertex_pairs(const Graph& g, const std::vector<VertexPairEntry>& pairs,
                                            std::size_t* unresolved = nullptr);

}  // namespace tdpot
