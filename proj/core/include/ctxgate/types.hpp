#ifndef CTXGATE_TYPES_HPP_
#define CTXGATE_TYPES_HPP_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxgate {

// Raised for malformed configuration, mismatched dimensions and bad inputs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PromptVariant : std::uint8_t { kNoContext = 0, kWithContext = 1 };

// First output position: whether the answer relies on the supplied chunk.
enum class UsageToken : std::uint8_t { kAdopt = 0, kIgnore = 1 };

// Second output position. Token index i corresponds to relevance tier i + 1.
enum class Label : std::uint8_t { kL1 = 0, kL2 = 1, kL3 = 2, kL4 = 3 };

enum class Category : std::uint8_t {
  kNegation = 0,
  kAlternative = 1,
  kQa = 2,
  kKnowledge = 3
};

enum class Ambiguity : std::uint8_t { kLow = 0, kHigh = 1 };

enum class Utility : std::uint8_t { kAdopt = 0, kPartial = 1, kIgnore = 2 };

inline constexpr int kUsageVocab = 2;
inline constexpr int kLabelVocab = 4;
inline constexpr int kNumCategories = 4;
inline constexpr int kNumUtilities = 3;
inline constexpr int kSequenceLength = 2;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kNegation, Category::kAlternative, Category::kQa,
    Category::kKnowledge};
inline constexpr std::array<Utility, kNumUtilities> kAllUtilities = {
    Utility::kAdopt, Utility::kPartial, Utility::kIgnore};

struct TokenPair {
  UsageToken usage = UsageToken::kAdopt;
  Label label = Label::kL1;

  friend bool operator==(const TokenPair&, const TokenPair&) = default;
};

constexpr int index(UsageToken t) { return static_cast<int>(t); }
constexpr int index(Label l) { return static_cast<int>(l); }
constexpr int index(Category c) { return static_cast<int>(c); }
constexpr int index(Utility u) { return static_cast<int>(u); }

// Relevance tier in 1..4.
constexpr int tier(Label l) { return static_cast<int>(l) + 1; }

Label label_from_tier(int tier);
Label label_from_index(int idx);
UsageToken usage_from_index(int idx);

std::string_view to_string(PromptVariant v);
std::string_view to_string(UsageToken t);
std::string_view to_string(Category c);
std::string_view to_string(Ambiguity a);
std::string_view to_string(Utility u);

PromptVariant parse_variant(std::string_view s);
Category parse_category(std::string_view s);
Ambiguity parse_ambiguity(std::string_view s);
Utility parse_utility(std::string_view s);

}  // namespace ctxgate

#endif  // CTXGATE_TYPES_HPP_
