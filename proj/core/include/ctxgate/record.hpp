#ifndef CTXGATE_RECORD_HPP_
#define CTXGATE_RECORD_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxgate {

// Self-describing line record: space-separated key=value fields in a fixed,
// documented order. Values never contain spaces or '='.
class Record {
 public:
  Record() = default;

  Record& add(std::string key, std::string value);
  Record& add(std::string key, double value);  // shortest round-trip decimal
  Record& add(std::string key, std::int64_t value);
  Record& add(std::string key, std::uint64_t value);
  Record& add(std::string key, int value) {
    return add(std::move(key), static_cast<std::int64_t>(value));
  }

  // Throws ConfigError naming the key when absent.
  const std::string& get(std::string_view key) const;
  bool has(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& fields() const {
    return fields_;
  }

  std::string str() const;
  static Record parse(std::string_view line);

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

// Exact hexadecimal float text (e.g. 0x1.8p+0).
std::string format_hex(double v);
double parse_hex(std::string_view s);
std::string format_hex_list(std::span<const double> values);
std::vector<double> parse_hex_list(std::string_view s);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string hex64(std::uint64_t v);

}  // namespace ctxgate

#endif  // CTXGATE_RECORD_HPP_
