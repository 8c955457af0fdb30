#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "generators.hpp"
#include "oracles.hpp"
#include "simra/detection.hpp"
#include "simra/error.hpp"
#include "simra/mapgraph.hpp"
#include "simra/matching.hpp"
#include "simra/ride_io.hpp"
#include "simra/scoring.hpp"
#include "simra/synth.hpp"

namespace props {

using namespace simra;

namespace {

bool close_rel(double a, double b) {
  return std::abs(a - b) <= kMeanRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

bool same_candidates(std::vector<Candidate> const& a, std::vector<Candidate> const& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].incident == b[i].incident) || a[i].score.bucket_index != b[i].score.bucket_index ||
        a[i].score.rank_value != b[i].score.rank_value || !(a[i].score.axis_diffs == b[i].score.axis_diffs) ||
        a[i].score.peak_sample != b[i].score.peak_sample) {
      return false;
    }
  }
  return true;
}

}  // namespace

Outcome detection_suite(std::uint64_t seed, DetectionSizes const& sizes) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> problems;

  // (a) window means against the brute-force oracle
  int mean_mismatch = 0;
  for (int t = 0; t < sizes.traces; ++t) {
    AccelWindowConfig cfg;
    if (t % 2 == 1) {
      cfg.moving_avg_width = 1 + rng() % 40;
      cfg.keep_every = 1 + rng() % 8;
    }
    std::size_t const len = 1 + rng() % 600;
    std::uniform_real_distribution<double> val(-20.0, 20.0);
    std::vector<Vec3> raw(len);
    std::vector<oracle::V3> plain(len);
    for (std::size_t i = 0; i < len; ++i) {
      raw[i] = {val(rng), val(rng), val(rng)};
      plain[i] = {raw[i].x, raw[i].y, raw[i].z};
    }
    auto const got = aggregate_accel(raw, cfg);
    auto const want = oracle::windowed_means(plain, cfg.moving_avg_width, cfg.keep_every);
    bool ok = got.size() == want.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) {
      ok = close_rel(got[i].x, want[i].x) && close_rel(got[i].y, want[i].y) && close_rel(got[i].z, want[i].z);
    }
    mean_mismatch += ok ? 0 : 1;
  }
  if (mean_mismatch > 0) problems.push_back(std::to_string(mean_mismatch) + " traces differ from windowed means");

  // (b) injected spikes at SNR 10
  AccelWindowConfig const defaults;
  std::size_t injected = 0;
  std::size_t found = 0;
  std::vector<Ride> spike_rides;
  for (int r = 0; r < sizes.spike_rides; ++r) {
    int const k = 1 + static_cast<int>(rng() % defaults.top_k_buckets);
    auto sr = gen::spike_ride(rng, 300.0, 120, 0.5, 10.0, k, defaults.bucket_ms());
    auto const candidates = detect_candidates(sr.ride.samples, defaults);
    auto const t0 = sr.ride.start_ts();
    for (auto idx : sr.spike_samples) {
      auto const bucket = static_cast<std::size_t>((sr.ride.samples[idx].timestamp - t0) / defaults.bucket_ms());
      ++injected;
      for (auto const& c : candidates) {
        if (c.score.bucket_index == bucket) {
          ++found;
          break;
        }
      }
    }
    spike_rides.push_back(std::move(sr.ride));
  }
  double const recall = injected == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(injected);
  if (recall < kSpikeRecallMin) problems.push_back("spike recall " + fixed(recall));

  // (c) constant signal
  int constant_bad = 0;
  for (int r = 0; r < sizes.constant_rides; ++r) {
    std::uniform_real_distribution<double> val(-15.0, 15.0);
    Vec3 const c{val(rng), val(rng), val(rng)};
    Ride ride;
    ride.region = "c";
    std::size_t const len = 30 + rng() % 500;
    for (std::size_t i = 0; i < len; ++i) {
      RideSample s;
      s.timestamp = 1000 + static_cast<TimestampMs>(i) * 120;
      s.accel = c;
      if (i % 8 == 0) {
        s.location = GeoPoint{52.5, 13.4 + 1e-5 * static_cast<double>(i)};
        s.accuracy_m = 3.0;
      }
      ride.samples.push_back(s);
    }
    bool ok = true;
    for (auto const& b : score_buckets(ride.samples, defaults)) {
      ok = ok && b.axis_diffs == Vec3{} && b.rank_value == 0.0;
    }
    for (auto const& cand : detect_candidates(ride.samples, defaults)) ok = ok && cand.score.rank_value == 0.0;
    std::vector<Vec3> raw(len, c);
    for (auto const& m : aggregate_accel(raw, defaults)) ok = ok && m == c;
    constant_bad += ok ? 0 : 1;
  }
  if (constant_bad > 0) problems.push_back(std::to_string(constant_bad) + " constant rides with nonzero diffs");

  // (d) determinism across 8 concurrent workers
  std::vector<std::vector<Candidate>> reference;
  auto const parallel_n = std::min<std::size_t>(spike_rides.size(), static_cast<std::size_t>(sizes.parallel_rides));
  for (std::size_t i = 0; i < parallel_n; ++i) reference.push_back(detect_candidates(spike_rides[i].samples, defaults));
  std::vector<int> diverged(8, 0);
  {
    std::vector<std::jthread> workers;
    for (int w = 0; w < 8; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t k = 0; k < parallel_n; ++k) {
          auto const i = (k + static_cast<std::size_t>(w) * 13) % parallel_n;
          if (!same_candidates(detect_candidates(spike_rides[i].samples, defaults), reference[i])) ++diverged[w];
        }
      });
    }
  }
  int total_diverged = 0;
  for (int d : diverged) total_diverged += d;
  if (total_diverged > 0) problems.push_back(std::to_string(total_diverged) + " parallel runs diverged");

  Outcome out;
  out.pass = problems.empty();
  out.detail = "means " + std::to_string(sizes.traces - mean_mismatch) + "/" + std::to_string(sizes.traces) +
               ", spike recall " + fixed(recall) + " (" + std::to_string(found) + "/" + std::to_string(injected) +
               "), constant " + std::to_string(sizes.constant_rides - constant_bad) + "/" +
               std::to_string(sizes.constant_rides) + ", parallel divergences " + std::to_string(total_diverged);
  for (auto const& p : problems) out.detail += "; " + p;
  return out;
}

Outcome matching_suite(std::uint64_t seed, int rides) {
  std::mt19937_64 rng(seed);
  GridSpec const spec;
  BuildParams bp;
  bp.region = spec.region;
  auto graph = build_graph(grid_extract(spec), bp);
  GraphIndex const index(graph);
  SynthRideParams const params;

  int recovered = 0;
  std::vector<MatchedRide> matched;
  std::int64_t labeled = 0;
  std::string first_miss;
  for (int i = 0; i < rides; ++i) {
    auto const sr = synth_grid_ride(spec, params, rng);
    std::vector<oracle::Pt> route;
    for (auto const& p : sr.route) route.push_back({p.x, p.y});
    auto const truth = oracle::grid_route_truth(route, spec.spacing_m, bp.buffer_width_m);
    auto m = match_ride(sr.ride, index, {});
    if (oracle::steps_of(m) == truth) {
      ++recovered;
    } else if (first_miss.empty()) {
      first_miss = "ride " + std::to_string(i);
    }
    for (auto const& inc : sr.ride.incidents) labeled += inc.labeled() ? 1 : 0;
    matched.push_back(std::move(m));
  }

  populate(graph, matched);
  auto const expected = oracle::recount(matched);
  int counter_mismatch = 0;
  std::int64_t counted = 0;
  for (auto const& node : graph.nodes) {
    oracle::Counters want;
    if (auto it = expected.find({static_cast<int>(ElementKind::Node), node.id}); it != expected.end()) want = it->second;
    bool ok = node.r == want.r[0] + want.r[1];
    for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
      ok = ok && node.s[t] == want.s[t][0] && node.n[t] == want.n[t][0];
      counted += node.s[t] + node.n[t];
    }
    counter_mismatch += ok ? 0 : 1;
  }
  for (auto const& edge : graph.edges) {
    oracle::Counters want;
    if (auto it = expected.find({static_cast<int>(ElementKind::Edge), edge.id}); it != expected.end()) want = it->second;
    bool ok = edge.r == want.r;
    for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
      for (std::size_t d = 0; d < 2; ++d) {
        ok = ok && edge.s[t][d] == want.s[t][d] && edge.n[t][d] == want.n[t][d];
        counted += edge.s[t][d] + edge.n[t][d];
      }
    }
    counter_mismatch += ok ? 0 : 1;
  }
  std::int64_t placed_total = 0;
  for (auto const& m : matched) {
    for (auto const& inc : m.incidents) placed_total += inc.type != IncidentType::Unlabeled ? 1 : 0;
  }
  auto const unmatched_labeled = labeled - placed_total;

  double const rate = rides == 0 ? 0.0 : static_cast<double>(recovered) / rides;
  bool const conserved = counted == placed_total && unmatched_labeled == 0;
  Outcome out;
  out.pass = rate >= kMatchRecoveryMin && counter_mismatch == 0 && conserved;
  out.detail = "recovered " + std::to_string(recovered) + "/" + std::to_string(rides) + " (" + fixed(rate) +
               "), counter mismatches " + std::to_string(counter_mismatch) + ", incidents labeled " +
               std::to_string(labeled) + " placed " + std::to_string(placed_total) + " counted " +
               std::to_string(counted);
  if (!first_miss.empty()) out.detail += ", first miss " + first_miss;
  return out;
}

namespace {

struct RandomElement {
  bool edge = false;
  std::array<std::int64_t, 2> r{};
  oracle::Counters c;
  std::int64_t length_mm = 0;
};

RandomElement random_element(std::mt19937_64& rng, bool zero_scary) {
  RandomElement e;
  e.edge = rng() % 2 == 0;
  std::uniform_int_distribution<std::int64_t> rides(1, 5000);
  e.r = {rides(rng), e.edge ? rides(rng) : 0};
  if (e.edge && rng() % 10 == 0) e.r[rng() % 2] = 0;
  int const cols = e.edge ? 2 : 1;
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    for (int d = 0; d < cols; ++d) {
      if (e.r[static_cast<std::size_t>(d)] == 0) continue;
      e.c.s[t][static_cast<std::size_t>(d)] = zero_scary ? 0 : static_cast<std::int64_t>(rng() % 60);
      e.c.n[t][static_cast<std::size_t>(d)] = static_cast<std::int64_t>(rng() % 200);
    }
  }
  e.length_mm = std::uniform_int_distribution<std::int64_t>(1000, 2'000'000)(rng);
  return e;
}

Intersection as_node(RandomElement const& e, std::string id, std::int64_t scale = 1) {
  Intersection n;
  n.id = std::move(id);
  n.r = e.r[0] * scale;
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    n.s[t] = e.c.s[t][0] * scale;
    n.n[t] = e.c.n[t][0] * scale;
  }
  return n;
}

StreetSegment as_edge(RandomElement const& e, std::string id, std::int64_t scale = 1) {
  StreetSegment s;
  s.id = std::move(id);
  s.length_m = static_cast<double>(e.length_mm) / 1000.0;
  s.r = {e.r[0] * scale, e.r[1] * scale};
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    for (std::size_t d = 0; d < 2; ++d) {
      s.s[t][d] = e.c.s[t][d] * scale;
      s.n[t][d] = e.c.n[t][d] * scale;
    }
  }
  return s;
}

ElementScore score_of(RandomElement const& e, std::string const& id, ScoreConfig const& cfg, std::int64_t scale = 1) {
  return e.edge ? score_edge(as_edge(e, id, scale), cfg) : score_node(as_node(e, id, scale), cfg);
}

// Expected cell values straight from the counters.
struct ExpectedCells {
  int columns = 1;
  std::array<std::array<std::optional<oracle::Frac>, 2>, kLabeledTypeCount> cells{};
};

ExpectedCells expected_cells(RandomElement const& e, std::int64_t an, std::int64_t ad, bool pooled) {
  ExpectedCells out;
  if (!e.edge || pooled) {
    std::int64_t const r = e.r[0] + e.r[1];
    for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
      out.cells[t][0] = oracle::score_cell(an, ad, e.c.s[t][0] + e.c.s[t][1], e.c.n[t][0] + e.c.n[t][1], r);
    }
    return out;
  }
  out.columns = 2;
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    for (std::size_t d = 0; d < 2; ++d) {
      if (e.r[d] > 0) out.cells[t][d] = oracle::score_cell(an, ad, e.c.s[t][d], e.c.n[t][d], e.r[d]);
    }
  }
  return out;
}

std::string str(Rational const& v) { return exact_string(v); }

}  // namespace

Outcome scoring_invariants(std::uint64_t seed, int elements) {
  std::mt19937_64 rng(seed);
  struct Alpha {
    std::int64_t num, den;
  };
  std::vector<Alpha> const alphas = {{22, 5}, {1, 1}, {5, 2}, {1, 10}, {7, 1}, {123, 100}};
  auto pick_alpha = [&] { return alphas[rng() % alphas.size()]; };
  auto cfg_for = [](Alpha a, bool pooled) {
    ScoreConfig cfg;
    cfg.alpha = Rational(a.num) / a.den;
    cfg.pool_directions = pooled;
    return cfg;
  };

  int cell_bad = 0, neutral_bad = 0, length_bad = 0, sum_bad = 0, rank_bad = 0;
  for (int i = 0; i < elements; ++i) {
    bool const pooled = rng() % 4 == 0;
    auto const a = pick_alpha();
    auto const e = random_element(rng, false);
    auto const id = "e" + std::to_string(i);
    auto const sc = score_of(e, id, cfg_for(a, pooled));
    auto const want = expected_cells(e, a.num, a.den, pooled);

    // Cell values against the fraction oracle.
    bool ok = sc.score.columns == want.columns;
    for (std::size_t t = 0; ok && t < kLabeledTypeCount; ++t) {
      for (std::size_t d = 0; d < 2; ++d) {
        auto const& got = sc.score.cells[t][d];
        auto const& exp = want.cells[t][d];
        ok = ok && got.has_value() == exp.has_value() && (!got || str(*got) == exp->str());
      }
    }
    cell_bad += ok ? 0 : 1;

    // Aggregation sums.
    oracle::Frac total;
    std::array<std::optional<oracle::Frac>, 2> cats;
    bool sums = true;
    for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
      oracle::Frac row;
      for (std::size_t d = 0; d < 2; ++d) {
        if (!want.cells[t][d]) continue;
        row = row + *want.cells[t][d];
        cats[d] = cats[d].value_or(oracle::Frac{}) + *want.cells[t][d];
      }
      sums = sums && str(sc.score.by_direction[t]) == row.str();
      total = total + row;
    }
    for (std::size_t d = 0; d < 2; ++d) {
      sums = sums && sc.score.by_category[d].has_value() == cats[d].has_value() &&
             (!cats[d] || str(*sc.score.by_category[d]) == cats[d]->str());
    }
    sums = sums && str(sc.score.total) == total.str();
    sum_bad += sums ? 0 : 1;

    // Length-adjusted cells are the plain cells divided by the length.
    if (e.edge) {
      bool la = sc.length_adjusted.has_value();
      auto const l = oracle::Frac::of(e.length_mm, 1000);
      for (std::size_t t = 0; la && t < kLabeledTypeCount; ++t) {
        for (std::size_t d = 0; d < 2; ++d) {
          auto const& got = sc.length_adjusted->cells[t][d];
          la = la && got.has_value() == want.cells[t][d].has_value() &&
               (!got || str(*got) == (*want.cells[t][d] / l).str());
        }
      }
      la = la && str(sc.length_adjusted->total) == (total / l).str();
      length_bad += la ? 0 : 1;
    } else {
      length_bad += sc.length_adjusted ? 1 : 0;
    }

    // With no scary incidents alpha has no effect.
    auto const quiet = random_element(rng, true);
    auto const s1 = score_of(quiet, id, cfg_for(a, pooled));
    auto const s2 = score_of(quiet, id, cfg_for(pick_alpha(), pooled));
    bool same = str(s1.score.total) == str(s2.score.total);
    for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
      for (std::size_t d = 0; d < 2; ++d) {
        same = same && s1.score.cells[t][d] == s2.score.cells[t][d];
      }
    }
    neutral_bad += same ? 0 : 1;
  }

  // Ranking under uniform positive scaling, in batches.
  int const batch = 100;
  int batches = 0;
  for (int start = 0; start < elements; start += batch, ++batches) {
    auto cfg = cfg_for(pick_alpha(), rng() % 4 == 0);
    cfg.min_rides = 1;
    cfg.length_adjusted = rng() % 2 == 0;
    std::int64_t const c = 2 + static_cast<std::int64_t>(rng() % 8);
    std::vector<ElementScore> base, scaled;
    for (int k = 0; k < batch && start + k < elements; ++k) {
      auto const e = random_element(rng, false);
      char id[16];
      std::snprintf(id, sizeof id, "x%05d", k);
      base.push_back(score_of(e, id, cfg));
      scaled.push_back(score_of(e, id, cfg, c));
    }
    auto const r1 = rank_hotspots(base, cfg);
    auto const r2 = rank_hotspots(scaled, cfg);
    bool ok = r1.combined.size() == r2.combined.size();
    for (std::size_t k = 0; ok && k < r1.combined.size(); ++k) {
      ok = r1.combined[k].id == r2.combined[k].id && r1.combined[k].rank == r2.combined[k].rank;
    }
    rank_bad += ok ? 0 : 1;
  }

  Outcome out;
  out.pass = cell_bad == 0 && neutral_bad == 0 && length_bad == 0 && sum_bad == 0 && rank_bad == 0;
  out.detail = std::to_string(elements) + " elements: cell mismatches " + std::to_string(cell_bad) +
               ", alpha-neutrality " + std::to_string(neutral_bad) + ", length-adjusted " + std::to_string(length_bad) +
               ", sums " + std::to_string(sum_bad) + ", scaled rankings differing " + std::to_string(rank_bad) + "/" +
               std::to_string(batches);
  return out;
}

namespace {

std::string mutate(std::string s, std::mt19937_64& rng) {
  static std::string const alphabet = ",\n\r\"=#;.-+eE0123456789abcdefxyz ";
  int const ops = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < ops; ++i) {
    auto const pos = s.empty() ? 0 : rng() % (s.size() + 1);
    switch (rng() % 7) {
      case 0:
        if (!s.empty() && pos < s.size()) s[pos] = alphabet[rng() % alphabet.size()];
        break;
      case 1:
        if (!s.empty() && pos < s.size()) s[pos] = static_cast<char>(rng() % 256);
        break;
      case 2:
        s.erase(pos, rng() % 40);
        break;
      case 3:
        s.insert(pos, s.substr(pos, rng() % 80));
        break;
      case 4:
        s.resize(pos);
        break;
      case 5:
        s.insert(pos, std::string(1, alphabet[rng() % alphabet.size()]));
        break;
      default:
        s.insert(pos, rng() % 2 ? "\n=========================\n" : "1e308,");
        break;
    }
  }
  return s;
}

}  // namespace

Outcome roundtrip_and_fuzz(std::uint64_t seed, int rides, int profiles, int fuzz) {
  std::mt19937_64 rng(seed);
  int ride_ok = 0, profile_ok = 0;
  std::vector<std::string> ride_corpus, profile_corpus;
  for (int i = 0; i < rides; ++i) {
    auto const ride = gen::random_ride(rng);
    auto const text = serialize_ride(ride);
    if (parse_ride(text) == ride) ++ride_ok;
    if (ride_corpus.size() < 64) ride_corpus.push_back(text.substr(0, 4000));
  }
  for (int i = 0; i < profiles; ++i) {
    auto const p = gen::random_profile(rng);
    auto const text = serialize_profile(p);
    if (parse_profile(text) == p) ++profile_ok;
    profile_corpus.push_back(text);
  }

  int accepted = 0, rejected = 0, foreign = 0, unstable = 0;
  std::string first_foreign;
  for (int i = 0; i < fuzz; ++i) {
    bool const as_ride = i % 4 != 3;
    std::string input;
    if (rng() % 10 == 0) {
      input.resize(rng() % 300);
      for (auto& ch : input) ch = static_cast<char>(rng() % 256);
      if (as_ride && rng() % 2) input = "simra-spec v1#x\n" + input;
    } else {
      auto const& corpus = as_ride ? ride_corpus : profile_corpus;
      input = mutate(corpus[rng() % corpus.size()], rng);
    }
    try {
      if (as_ride) {
        auto const once = serialize_ride(parse_ride(input));
        if (serialize_ride(parse_ride(once)) != once) ++unstable;
      } else {
        auto const once = serialize_profile(parse_profile(input));
        if (serialize_profile(parse_profile(once)) != once) ++unstable;
      }
      ++accepted;
    } catch (Error const&) {
      ++rejected;
    } catch (std::exception const& e) {
      ++foreign;
      if (first_foreign.empty()) first_foreign = e.what();
    }
  }

  Outcome out;
  out.pass = ride_ok == rides && profile_ok == profiles && foreign == 0 && unstable == 0 && rides >= 100 &&
             profiles >= 100 && fuzz >= 10'000;
  out.detail = "rides " + std::to_string(ride_ok) + "/" + std::to_string(rides) + ", profiles " +
               std::to_string(profile_ok) + "/" + std::to_string(profiles) + ", fuzz " + std::to_string(fuzz) +
               " (accepted " + std::to_string(accepted) + ", rejected " + std::to_string(rejected) +
               ", unexpected exceptions " + std::to_string(foreign) + ", unstable re-serialization " +
               std::to_string(unstable) + ")";
  if (!first_foreign.empty()) out.detail += "; first unexpected: " + first_foreign;
  return out;
}

}  // namespace props
