#include "simra/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "simra/error.hpp"

namespace simra {

namespace {

using boost::multiprecision::cpp_int;

cpp_int pow10(int e) {
  cpp_int p = 1;
  for (int i = 0; i < e; ++i) p *= 10;
  return p;
}

Rational make_rational(cpp_int const& num, cpp_int const& den) { return Rational(num, den); }

}  // namespace

Rational parse_decimal(std::string_view text) {
  auto bad = [&]() -> Rational {
    fail(ErrorKind::InvalidArgument, "not a decimal number: '" + std::string(text) + "'");
  };
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) negative = text[i++] == '-';
  std::string digits;
  int frac = 0;
  bool seen_digit = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    digits += text[i++];
    seen_digit = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits += text[i++];
      ++frac;
      seen_digit = true;
    }
  }
  if (!seen_digit) return bad();
  int exp = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    auto const* first = text.data() + i;
    if (i < text.size() && text[i] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), exp);
    if (ec != std::errc{} || ptr == first) return bad();
    i = static_cast<std::size_t>(ptr - text.data());
  }
  if (i != text.size() || std::abs(exp) > 400) return bad();
  // cpp_int reads a leading zero as an octal prefix.
  auto const nz = digits.find_first_not_of('0');
  cpp_int num(nz == std::string::npos ? std::string("0") : digits.substr(nz));
  if (negative) num = -num;
  int const scale = exp - frac;
  if (scale >= 0) return make_rational(num * pow10(scale), 1);
  return make_rational(num, pow10(-scale));
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) fail(ErrorKind::InvalidArgument, "non-finite number");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return parse_decimal(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::string exact_string(Rational const& value) {
  auto const num = boost::multiprecision::numerator(value);
  auto const den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

namespace {

// Base-10 integer; cpp_int's own string constructor treats "0x" and a leading
// zero as radix prefixes.
cpp_int decimal_int(std::string_view text) {
  bool const negative = !text.empty() && text.front() == '-';
  if (negative) text.remove_prefix(1);
  if (text.empty() || text.find_first_not_of("0123456789") != std::string_view::npos) {
    throw std::invalid_argument("digits");
  }
  auto const nz = text.find_first_not_of('0');
  cpp_int v(nz == std::string_view::npos ? std::string("0") : std::string(text.substr(nz)));
  return negative ? cpp_int(-v) : v;
}

}  // namespace

Rational parse_exact(std::string_view text) {
  auto const slash = text.find('/');
  try {
    if (slash == std::string_view::npos) return make_rational(decimal_int(text), 1);
    auto const den = decimal_int(text.substr(slash + 1));
    if (den <= 0) throw std::invalid_argument("denominator");
    return make_rational(decimal_int(text.substr(0, slash)), den);
  } catch (std::exception const&) {
    fail(ErrorKind::Format, "not an exact rational: '" + std::string(text) + "'");
  }
}

std::string format_scaled(Rational const& value, int scale, int decimals) {
  cpp_int num = boost::multiprecision::numerator(value);
  cpp_int const den = boost::multiprecision::denominator(value);
  bool const negative = num < 0;
  if (negative) num = -num;
  cpp_int const scaled = num * pow10(scale + decimals);
  cpp_int const rounded = (2 * scaled + den) / (2 * den);
  std::string digits = rounded.str();
  if (decimals > 0) {
    if (digits.size() <= static_cast<std::size_t>(decimals)) {
      digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
  }
  if (negative && rounded != 0) digits.insert(0, "-");
  return digits;
}

void ScoreConfig::validate() const {
  if (alpha <= 0) fail(ErrorKind::Validation, "alpha must be positive");
  if (min_rides < 1) fail(ErrorKind::Validation, "min_rides must be at least 1");
}

std::string ScoreConfig::fingerprint() const {
  return "alpha=" + exact_string(alpha) + ";pooled=" + (pool_directions ? "1" : "0");
}

Rational const& ElementScore::ranking_value(bool la) const {
  if (la && length_adjusted) return length_adjusted->total;
  return score.total;
}

namespace {

void fill_aggregates(ScoreMatrix& m) {
  m.total = 0;
  m.by_category = {};
  for (int d = 0; d < m.columns; ++d) {
    bool defined = false;
    Rational sum = 0;
    for (auto const& row : m.cells) {
      if (row[d]) {
        defined = true;
        sum += *row[d];
      }
    }
    if (defined) m.by_category[d] = sum;
  }
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    Rational sum = 0;
    for (int d = 0; d < m.columns; ++d) {
      if (m.cells[t][d]) sum += *m.cells[t][d];
    }
    m.by_direction[t] = sum;
    m.total += sum;
  }
}

ScoreMatrix divide(ScoreMatrix m, Rational const& by) {
  for (auto& row : m.cells) {
    for (auto& cell : row) {
      if (cell) *cell /= by;
    }
  }
  fill_aggregates(m);
  return m;
}

Rational cell_score(Rational const& alpha, std::int64_t s, std::int64_t n, std::int64_t r) {
  return (alpha * s + n) / r;
}

}  // namespace

ElementScore score_node(Intersection const& node, ScoreConfig const& cfg) {
  cfg.validate();
  if (node.r <= 0) fail(ErrorKind::UndefinedScore, "node '" + node.id + "' has no rides");
  ElementScore out;
  out.kind = ElementKind::Node;
  out.id = node.id;
  out.total_rides = node.r;
  out.fingerprint = cfg.fingerprint();
  out.score.columns = 1;
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    out.score.cells[t][0] = cell_score(cfg.alpha, node.s[t], node.n[t], node.r);
  }
  fill_aggregates(out.score);
  return out;
}

ElementScore score_edge(StreetSegment const& edge, ScoreConfig const& cfg) {
  cfg.validate();
  if (edge.total_rides() <= 0) fail(ErrorKind::UndefinedScore, "edge '" + edge.id + "' has no rides");
  ElementScore out;
  out.kind = ElementKind::Edge;
  out.id = edge.id;
  out.total_rides = edge.total_rides();
  out.length_m = edge.length_m;
  out.fingerprint = cfg.fingerprint();
  if (cfg.pool_directions) {
    out.score.columns = 1;
    for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
      out.score.cells[t][0] = cell_score(cfg.alpha, edge.s[t][0] + edge.s[t][1],
                                         edge.n[t][0] + edge.n[t][1], out.total_rides);
    }
  } else {
    out.score.columns = 2;
    for (int d = 0; d < 2; ++d) {
      if (edge.r[d] == 0) {
        out.partial = true;
        continue;
      }
      for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
        out.score.cells[t][d] = cell_score(cfg.alpha, edge.s[t][d], edge.n[t][d], edge.r[d]);
      }
    }
  }
  fill_aggregates(out.score);
  // Lengths are taken to the millimetre so the division stays exact.
  auto const mm = std::llround(edge.length_m * 1000.0);
  if (mm <= 0) fail(ErrorKind::UndefinedScore, "edge '" + edge.id + "' has no length");
  out.length_adjusted = divide(out.score, Rational(mm, 1000));
  return out;
}

GraphScores score_graph(MapGraph const& graph, ScoreConfig const& cfg) {
  cfg.validate();
  GraphScores out;
  for (auto const& node : graph.nodes) {
    if (node.r <= 0) {
      out.unscored.push_back(node.id);
      continue;
    }
    out.scores.push_back(score_node(node, cfg));
  }
  for (auto const& edge : graph.edges) {
    if (edge.total_rides() <= 0) {
      out.unscored.push_back(edge.id);
      continue;
    }
    out.scores.push_back(score_edge(edge, cfg));
  }
  return out;
}

namespace {

bool ranks_before(HotspotEntry const& a, HotspotEntry const& b) {
  if (a.value != b.value) return a.value > b.value;
  if (a.total_rides != b.total_rides) return a.total_rides > b.total_rides;
  if (a.id != b.id) return a.id < b.id;
  return a.kind < b.kind;
}

void finish(std::vector<HotspotEntry>& list, Selection const& sel) {
  std::sort(list.begin(), list.end(), ranks_before);
  if (sel.mode == SelectionMode::TopK && list.size() > sel.k) list.resize(sel.k);
  if (sel.mode == SelectionMode::Threshold) {
    std::erase_if(list, [&](HotspotEntry const& e) { return e.value < sel.threshold; });
  }
  for (std::size_t i = 0; i < list.size(); ++i) list[i].rank = i + 1;
}

}  // namespace

HotspotRanking rank_hotspots(std::span<ElementScore const> scores, ScoreConfig const& cfg) {
  cfg.validate();
  auto const fp = cfg.fingerprint();
  HotspotRanking out;
  out.separate = cfg.length_adjusted;
  for (auto const& s : scores) {
    if (s.fingerprint != fp) {
      fail(ErrorKind::Validation, "score for '" + s.id + "' was computed with " + s.fingerprint +
                                      ", expected " + fp);
    }
    if (s.total_rides < cfg.min_rides) continue;
    HotspotEntry e{s.kind, s.id, s.ranking_value(cfg.length_adjusted), s.total_rides, 0};
    if (!out.separate) {
      out.combined.push_back(std::move(e));
    } else if (s.kind == ElementKind::Node) {
      out.nodes.push_back(std::move(e));
    } else {
      out.edges.push_back(std::move(e));
    }
  }
  finish(out.combined, cfg.selection);
  finish(out.nodes, cfg.selection);
  finish(out.edges, cfg.selection);
  return out;
}

}  // namespace simra
