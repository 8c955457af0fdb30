#include "simra/detection.hpp"

#include <algorithm>
#include <cmath>

#include "simra/error.hpp"

namespace simra {

namespace {

double component(Vec3 const& v, int axis) {
  return axis == 0 ? v.x : axis == 1 ? v.y : v.z;
}

double& component(Vec3& v, int axis) {
  return axis == 0 ? v.x : axis == 1 ? v.y : v.z;
}

// Mean of raw[first, first + count), clamped to the window's range so that
// rounding never pushes an average outside the values it summarises.
Vec3 window_mean(std::span<Vec3 const> raw, std::size_t first, std::size_t count) {
  Vec3 mean;
  for (int axis = 0; axis < 3; ++axis) {
    double sum = 0.0;
    double lo = component(raw[first], axis);
    double hi = lo;
    for (std::size_t i = first; i < first + count; ++i) {
      double const v = component(raw[i], axis);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    component(mean, axis) = std::clamp(sum / static_cast<double>(count), lo, hi);
  }
  return mean;
}

double rank_of(Vec3 const& d, RankMode mode) {
  switch (mode) {
    case RankMode::Sum: return d.x + d.y + d.z;
    case RankMode::L2: return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    case RankMode::Max: break;
  }
  return std::max({d.x, d.y, d.z});
}

}  // namespace

void AccelWindowConfig::validate() const {
  if (moving_avg_width < 1 || keep_every < 1 || top_k_buckets < 1 ||
      !(bucket_seconds >= 1.0) || !std::isfinite(bucket_seconds)) {
    fail(ErrorKind::InvalidArgument, "detection config fields must all be >= 1");
  }
}

TimestampMs AccelWindowConfig::bucket_ms() const {
  return static_cast<TimestampMs>(std::llround(bucket_seconds * 1000.0));
}

std::vector<Vec3> aggregate_accel(std::span<Vec3 const> raw, AccelWindowConfig const& cfg) {
  cfg.validate();
  if (raw.empty()) {
    fail(ErrorKind::Validation, "cannot aggregate an empty acceleration trace");
  }
  auto const width = cfg.moving_avg_width;
  if (raw.size() < width) {
    return {window_mean(raw, 0, raw.size())};
  }
  std::size_t const count = (raw.size() - width) / cfg.keep_every + 1;
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(window_mean(raw, i * cfg.keep_every, width));
  }
  return out;
}

std::vector<BucketScore> score_buckets(std::span<RideSample const> samples,
                                       AccelWindowConfig const& cfg) {
  cfg.validate();
  std::vector<BucketScore> buckets;
  if (samples.empty()) {
    return buckets;
  }
  auto const width = cfg.bucket_ms();
  auto const t0 = samples.front().timestamp;
  std::size_t begin = 0;
  while (begin < samples.size()) {
    auto const index = static_cast<std::size_t>((samples[begin].timestamp - t0) / width);
    std::size_t end = begin;
    Vec3 lo = samples[begin].accel;
    Vec3 hi = lo;
    Vec3 sum;
    while (end < samples.size() &&
           static_cast<std::size_t>((samples[end].timestamp - t0) / width) == index) {
      for (int axis = 0; axis < 3; ++axis) {
        double const v = component(samples[end].accel, axis);
        component(lo, axis) = std::min(component(lo, axis), v);
        component(hi, axis) = std::max(component(hi, axis), v);
        component(sum, axis) += v;
      }
      ++end;
    }
    BucketScore score;
    score.bucket_index = index;
    score.start_ts = t0 + static_cast<TimestampMs>(index) * width;
    score.end_ts = score.start_ts + width;
    score.axis_diffs = {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
    score.rank_value = rank_of(score.axis_diffs, cfg.rank_mode);

    int dominant = 0;
    for (int axis = 1; axis < 3; ++axis) {
      if (component(score.axis_diffs, axis) > component(score.axis_diffs, dominant)) {
        dominant = axis;
      }
    }
    double const mean = component(sum, dominant) / static_cast<double>(end - begin);
    score.peak_sample = begin;
    double best = -1.0;
    for (std::size_t i = begin; i < end; ++i) {
      double const dev = std::abs(component(samples[i].accel, dominant) - mean);
      if (dev > best) {
        best = dev;
        score.peak_sample = i;
      }
    }
    buckets.push_back(score);
    begin = end;
  }
  return buckets;
}

std::vector<Candidate> detect_candidates(std::span<RideSample const> samples,
                                         AccelWindowConfig const& cfg) {
  cfg.validate();
  std::vector<std::size_t> fixes;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].location) fixes.push_back(i);
  }
  if (fixes.empty()) {
    fail(ErrorKind::Detection, "ride has no GPS fix; candidates cannot be located");
  }

  auto buckets = score_buckets(samples, cfg);
  std::stable_sort(buckets.begin(), buckets.end(), [](BucketScore const& a, BucketScore const& b) {
    if (a.rank_value != b.rank_value) return a.rank_value > b.rank_value;
    return a.bucket_index < b.bucket_index;
  });
  buckets.resize(std::min(buckets.size(), cfg.top_k_buckets));

  std::vector<Candidate> out;
  out.reserve(buckets.size());
  for (auto const& bucket : buckets) {
    auto const peak_ts = samples[bucket.peak_sample].timestamp;
    // Nearest fix in time; the earlier one wins a tie.
    auto it = std::lower_bound(fixes.begin(), fixes.end(), peak_ts,
                               [&](std::size_t idx, TimestampMs ts) {
                                 return samples[idx].timestamp < ts;
                               });
    std::size_t fix = it == fixes.end() ? fixes.back() : *it;
    if (it != fixes.begin()) {
      auto const prev = *(it - 1);
      if (it == fixes.end() ||
          peak_ts - samples[prev].timestamp <= samples[fix].timestamp - peak_ts) {
        fix = prev;
      }
    }
    Candidate c;
    c.score = bucket;
    c.incident.location = *samples[fix].location;
    c.incident.timestamp = peak_ts;
    c.incident.type = IncidentType::Unlabeled;
    c.incident.auto_detected = true;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](Candidate const& a, Candidate const& b) {
    return a.incident.timestamp < b.incident.timestamp;
  });
  return out;
}

std::size_t append_candidates(Ride& ride, AccelWindowConfig const& cfg, double min_diff) {
  auto candidates = detect_candidates(ride.samples, cfg);
  std::size_t added = 0;
  for (auto& c : candidates) {
    if (c.score.rank_value >= min_diff) {
      ride.incidents.push_back(std::move(c.incident));
      ++added;
    }
  }
  return added;
}

}  // namespace simra
