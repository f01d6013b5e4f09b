#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "tdpot/cch.hpp"
#include "tdpot/heap.hpp"
#include "tdpot/traffic.hpp"
#include "tdpot/ttf.hpp"

namespace tdpot {

/// Interval grid: for every length, intervals start every step minutes so
/// that they lie within [day_begin, day_end]. A full-day interval is always added.
struct IntervalGridConfig {
  std::vector<std::uint32_t> lengths_min{60, 120, 240, 480};
  std::uint32_t step_min = 30;
  std::uint32_t day_begin_min = 6 * 60;
  std::uint32_t day_end_min = 22 * 60;
  Duration live_window = kLiveWindow;
};

/// Text key-value format: `lengths_min = 60,120,240,480`, `step_min = 30`,
/// `day_begin_min`, `day_end_min`, `live_window_ms`. '#' starts a comment.
IntervalGridConfig read_interval_config(const std::filesystem::path& file);
void write_interval_config(const std::filesystem::path& file, const IntervalGridConfig& cfg);

/// Closed time-of-day interval [begin, end] in ms. The full-day interval is
/// valid at any absolute time.
struct DayInterval {
  Timestamp begin = 0;
  Timestamp end = kPeriod;
  bool full_day = true;

  Duration length() const { return end - begin; }
};

/// Slot 0 is the full day, followed by the grid ordered by length, then start.
std::vector<DayInterval> build_intervals(const IntervalGridConfig& cfg);

/// Per input edge minimum of p over each interval; one vector per interval.
std::vector<std::vector<Weight>> interval_lower_bounds(const TravelTimeFunctions& p,
                                                       const std::vector<DayInterval>& intervals);

/// Several metrics on one topology, stored metric after metric: weight of
/// edge e in metric i at [i * edges + e].
struct MetricSet {
  std::uint32_t count = 0;
  std::size_t edges = 0;
  std::vector<Weight> up;
  std::vector<Weight> down;

  Weight up_at(EdgeId e, std::uint32_t i) const { return up[i * edges + e]; }
  Weight down_at(EdgeId e, std::uint32_t i) const { return down[i * edges + e]; }
  std::span<const Weight> up_of(std::uint32_t i) const { return std::span(up).subspan(i * edges, edges); }
  std::span<const Weight> down_of(std::uint32_t i) const { return std::span(down).subspan(i * edges, edges); }
};

/// Basic customization of many metrics. Metrics are relaxed `block` at a
/// time with their weights interleaved per edge, then scattered.
MetricSet customize_many(const CchTopology& topo, const std::vector<std::vector<Weight>>& inputs,
                         std::uint32_t block = 16);

void save_metric_set(const std::filesystem::path& dir, const MetricSet& metrics);
MetricSet load_metric_set(const std::filesystem::path& dir);

/// Predicted part of the MMP data, independent of live traffic.
struct MmpPreprocessed {
  std::vector<DayInterval> intervals;
  /// Interval slot -> metric index; the identity unless compressed.
  std::vector<std::uint32_t> slot_metric;
  MetricSet metrics;
  Duration live_window = kLiveWindow;
};

/// compress_k == 0 keeps one metric per interval; otherwise the interval lower
/// bounds are merged down to compress_k functions before customization.
MmpPreprocessed mmp_preprocess(const CchTopology& topo, const TravelTimeFunctions& p, const IntervalGridConfig& cfg,
                               std::uint32_t compress_k = 0, unsigned threads = 1);

/// Persisted as flat files in dir: intervals, slot table, metrics.
void save_mmp(const std::filesystem::path& dir, const MmpPreprocessed& prep);
MmpPreprocessed load_mmp(const std::filesystem::path& dir);

/// Live part, rebuilt on every overlay.
struct MmpUpdate {
  Timestamp tau_now = 0;
  Duration live_window = kLiveWindow;
  Metric live;
  Metric upper;
  PerfectMetric upper_perfect;
  /// Arcs kept for every lower-bound metric (joint removal criterion).
  std::vector<std::uint8_t> up_alive, down_alive;
  SearchTopology lower_search;
  SearchTopology upper_search;
  std::size_t removed_arcs = 0;
};

MmpUpdate mmp_update(const CchTopology& topo, const MmpPreprocessed& prep, const TravelTimeFunctions& p,
                     const LiveOverlay& overlay);

struct MmpOptions {
  bool metric_switching = true;
};

/// Time-dependent potential choosing among the interval metrics per query and,
/// with switching, per evaluation.
class MmpPotential {
 public:
  MmpPotential(const CchTopology& topo, const MmpPreprocessed& prep, const MmpUpdate& update, MmpOptions options = {});

  void init(Vertex s, Vertex t, Timestamp departure);
  Duration estimate(Vertex v, Timestamp t);

  /// Upper bound of the arrival at t found by init (kInfinity if none).
  Timestamp tau_max() const { return tau_max_; }
  /// Slot selected for [departure, tau_max]; slot == live_slot() for the live metric.
  std::uint32_t selected_slot() const { return selected_; }
  std::uint32_t live_slot() const { return static_cast<std::uint32_t>(prep_->intervals.size()); }
  std::size_t backward_searches() const { return backward_searches_; }
  /// Slots the query may switch between (1 without switching).
  std::size_t candidate_count() const { return candidates_.size(); }

 private:
  struct Span {
    Timestamp begin, end;
  };
  struct Frame {
    Vertex x;
    EdgeId next;
    Duration best;
  };

  const Weight* up_weights(std::uint32_t slot) const;
  const Weight* down_weights(std::uint32_t slot) const;
  bool covers(std::uint32_t outer, std::uint32_t inner) const {
    return span_[outer].begin <= span_[inner].begin && span_[inner].end <= span_[outer].end;
  }
  std::uint32_t best_slot(Timestamp t) const;
  TimestampedArray<Duration>& backward(std::uint32_t slot);

  const CchTopology* topo_;
  const MmpPreprocessed* prep_;
  const MmpUpdate* update_;
  MmpOptions options_;
  ChQuery upper_query_;

  Timestamp tau_max_ = kInfinity;
  Vertex target_ = kInvalidId;
  std::uint32_t selected_ = 0;
  std::vector<Span> span_;  // absolute validity per slot for the current query
  std::vector<std::uint32_t> candidates_;  // nested, outermost first

  std::vector<std::unique_ptr<TimestampedArray<Duration>>> backward_;
  std::vector<std::uint32_t> backward_query_;
  std::uint32_t query_ = 0;
  std::size_t backward_searches_ = 0;
  QuaternaryHeap heap_;
  TimestampedArray<Duration> memo_;
  TimestampedArray<std::uint32_t> memo_slot_;
  std::vector<Frame> stack_;
};

}  // namespace tdpot
