#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "simra/ride.hpp"

namespace simra {

// How the three per-axis (max - min) differences of a bucket collapse into
// the single value used for ranking.
enum class RankMode { Max, Sum, L2 };

struct AccelWindowConfig {
  std::size_t moving_avg_width = 30;
  std::size_t keep_every = 6;
  double bucket_seconds = 3.0;
  std::size_t top_k_buckets = 6;
  RankMode rank_mode = RankMode::Max;

  void validate() const;
  TimestampMs bucket_ms() const;
};

struct BucketScore {
  std::size_t bucket_index = 0;
  TimestampMs start_ts = 0;
  TimestampMs end_ts = 0;  // exclusive
  Vec3 axis_diffs;
  double rank_value = 0.0;
  std::size_t peak_sample = 0;  // index into the ride's samples
};

struct Candidate {
  Incident incident;
  BucketScore score;
};

/// Moving average over `moving_avg_width` raw vectors, keeping every
/// `keep_every`-th window. Inputs shorter than one window collapse to a
/// single mean.
std::vector<Vec3> aggregate_accel(std::span<Vec3 const> raw, AccelWindowConfig const& cfg);

/// One score per non-empty bucket, buckets aligned to the first sample.
std::vector<BucketScore> score_buckets(std::span<RideSample const> samples,
                                       AccelWindowConfig const& cfg);

/// Up to top_k_buckets Unlabeled, auto-detected candidates from the
/// highest-ranked buckets, sorted by timestamp. Ties in rank go to the
/// earlier bucket.
std::vector<Candidate> detect_candidates(std::span<RideSample const> samples,
                                         AccelWindowConfig const& cfg);

/// Appends candidates whose rank value reaches `min_diff` to the ride's
/// incident list. Returns how many were added.
std::size_t append_candidates(Ride& ride, AccelWindowConfig const& cfg, double min_diff);

}  // namespace simra
