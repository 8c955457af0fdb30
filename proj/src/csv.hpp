#pragma once

// Minimal RFC 4180 record reader/writer shared by the ride and profile
// formats. Quoted fields may span lines; the reader tracks line numbers for
// diagnostics.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simra/error.hpp"

namespace simra::csv {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }

  // Line number (1-based) where the next record starts.
  std::size_t line() const { return line_; }

  // Unparsed physical line, without its terminator.
  std::string_view raw_line() {
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) {
      end = text_.size();
    }
    auto line = text_.substr(pos_, end - pos_);
    pos_ = end == text_.size() ? end : end + 1;
    ++line_;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    return line;
  }

  std::string_view peek_line() const {
    auto end = text_.find('\n', pos_);
    auto line = text_.substr(pos_, end == std::string_view::npos ? end : end - pos_);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    return line;
  }

  std::vector<std::string> record() {
    std::vector<std::string> fields;
    std::string field;
    auto const start_line = line_;
    bool quoted = false;
    bool after_quote = false;
    while (pos_ < text_.size()) {
      char const c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field.push_back('"');
            ++pos_;
          } else {
            quoted = false;
            after_quote = true;
          }
        } else {
          if (c == '\n') {
            ++line_;
          }
          field.push_back(c);
        }
        continue;
      }
      if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
      } else if (c == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return fields;
      } else if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') {
        // handled by the following '\n'
      } else if (after_quote) {
        fail(ErrorKind::Format, "line " + std::to_string(line_) +
                                    ": unexpected character after closing quote");
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else {
        field.push_back(c);
      }
    }
    if (quoted) {
      fail(ErrorKind::Format,
           "line " + std::to_string(start_line) + ": unterminated quoted field");
    }
    fields.push_back(std::move(field));
    return fields;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline void write_field(std::string& out, std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
    out.append(value);
    return;
  }
  out.push_back('"');
  for (char c : value) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
}

// Fixed-point rendering; "-0.000" collapses to "0.000" so output is canonical.
inline void write_fixed(std::string& out, double value, int decimals) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
  std::string_view text(buf, static_cast<std::size_t>(res.ptr - buf));
  if (!text.empty() && text.front() == '-' &&
      text.find_first_not_of("-0.") == std::string_view::npos) {
    text.remove_prefix(1);
  }
  out.append(text);
}

inline std::optional<double> to_double(std::string_view s) {
  if (s.empty() || s.front() == '+') {
    return std::nullopt;
  }
  double value = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<std::int64_t> to_int(std::string_view s) {
  if (s.empty()) {
    return std::nullopt;
  }
  std::int64_t value = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace simra::csv
