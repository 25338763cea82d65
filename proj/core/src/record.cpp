#include "ctxgate/record.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "ctxgate/types.hpp"

namespace ctxgate {

namespace {

double parse_with(std::string_view s, std::chars_format fmt) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  bool negative = false;
  if (fmt == std::chars_format::hex) {
    // from_chars does not accept the 0x prefix.
    if (first != last && *first == '-') {
      negative = true;
      ++first;
    }
    if (last - first >= 2 && first[0] == '0' && (first[1] == 'x' || first[1] == 'X'))
      first += 2;
  }
  const auto [ptr, ec] = std::from_chars(first, last, v, fmt);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("malformed number: '" + std::string(s) + "'");
  return negative ? -v : v;
}

}  // namespace

Record& Record::add(std::string key, std::string value) {
  fields_.emplace_back(std::move(key), std::move(value));
  return *this;
}

Record& Record::add(std::string key, double value) {
  return add(std::move(key), format_double(value));
}

Record& Record::add(std::string key, std::int64_t value) {
  return add(std::move(key), std::to_string(value));
}

Record& Record::add(std::string key, std::uint64_t value) {
  return add(std::move(key), std::to_string(value));
}

bool Record::has(std::string_view key) const {
  for (const auto& [k, v] : fields_)
    if (k == key) return true;
  return false;
}

const std::string& Record::get(std::string_view key) const {
  for (const auto& [k, v] : fields_)
    if (k == key) return v;
  throw ConfigError("record is missing field '" + std::string(key) + "'");
}

double Record::get_double(std::string_view key) const {
  const std::string& v = get(key);
  if (v.find("0x") != std::string::npos) return parse_hex(v);
  return parse_double(v);
}

std::int64_t Record::get_int(std::string_view key) const {
  const std::string& v = get(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("field '" + std::string(key) + "' is not an integer: " + v);
  return out;
}

std::uint64_t Record::get_uint(std::string_view key) const {
  const std::string& v = get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("field '" + std::string(key) + "' is not an unsigned integer: " + v);
  return out;
}

std::string Record::str() const {
  std::string out;
  for (const auto& [k, v] : fields_) {
    if (!out.empty()) out += ' ';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

Record Record::parse(std::string_view line) {
  Record r;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size()) break;
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    const std::string_view tok = line.substr(pos, end - pos);
    const std::size_t eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ConfigError("malformed record field: '" + std::string(tok) + "'");
    r.add(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    pos = end;
  }
  return r;
}

std::string format_hex(double v) {
  if (!std::isfinite(v)) throw ConfigError("cannot serialise non-finite value");
  char buf[64];
  const char* prefix = std::signbit(v) ? "-0x" : "0x";
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), std::fabs(v), std::chars_format::hex);
  return std::string(prefix) + std::string(buf, ptr);
}

double parse_hex(std::string_view s) { return parse_with(s, std::chars_format::hex); }

std::string format_hex_list(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_hex(values[i]);
  }
  return out;
}

std::vector<double> parse_hex_list(std::string_view s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = s.find(',', pos);
    out.push_back(parse_hex(s.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  return parse_with(s, std::chars_format::general);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace ctxgate
