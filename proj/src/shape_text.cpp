#include "bodyshape/shape_text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

#include "bodyshape/errors.hpp"

namespace bodyshape {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_decimal(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value,
                                   std::chars_format::general);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Content between brackets as numbers, or nullopt if any item is not numeric.
std::optional<std::vector<double>> numeric_list(std::string_view body) {
  std::vector<double> values;
  if (trim(body).empty()) return values;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = body.find(',', start);
    auto item = parse_decimal(body.substr(start, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - start));
    if (!item) return std::nullopt;
    values.push_back(*item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return values;
}

}  // namespace

std::string format_decimal3(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string format_shape_params(const ShapeParams& beta) {
  std::string out = "[";
  for (std::size_t i = 0; i < kNumBetas; ++i) {
    if (i) out += ", ";
    out += format_decimal3(beta[i]);
  }
  out += ']';
  return out;
}

ShapeParams round_to_grid(const ShapeParams& beta) {
  std::array<double, kNumBetas> v{};
  for (std::size_t i = 0; i < kNumBetas; ++i) {
    v[i] = std::strtod(format_decimal3(beta[i]).c_str(), nullptr);
  }
  return ShapeParams(v);
}

ShapeParams parse_shape_string(std::string_view text) {
  std::size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    const std::size_t close = text.find(']', pos + 1);
    if (close == std::string_view::npos) break;
    auto values = numeric_list(text.substr(pos + 1, close - pos - 1));
    if (values) {
      if (values->size() != kNumBetas) {
        throw Error(ErrorKind::Arity, "shape list has " + std::to_string(values->size()) +
                                          " values, expected 10");
      }
      return ShapeParams(*values);
    }
    pos += 1;
  }
  throw Error(ErrorKind::MalformedOutput, "no bracketed numeric list found");
}

}  // namespace bodyshape
