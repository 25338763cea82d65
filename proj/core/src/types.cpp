#include "ctxgate/types.hpp"

#include <string>

namespace ctxgate {

Label label_from_tier(int t) {
  if (t < 1 || t > kLabelVocab)
    throw ConfigError("relevance tier out of range: " + std::to_string(t));
  return static_cast<Label>(t - 1);
}

Label label_from_index(int idx) { return label_from_tier(idx + 1); }

UsageToken usage_from_index(int idx) {
  if (idx < 0 || idx >= kUsageVocab)
    throw ConfigError("usage token out of range: " + std::to_string(idx));
  return static_cast<UsageToken>(idx);
}

std::string_view to_string(PromptVariant v) {
  return v == PromptVariant::kNoContext ? "NO_CONTEXT" : "WITH_CONTEXT";
}

std::string_view to_string(UsageToken t) {
  return t == UsageToken::kAdopt ? "ADOPT" : "IGNORE";
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kNegation: return "NEGATION";
    case Category::kAlternative: return "ALTERNATIVE";
    case Category::kQa: return "QA";
    case Category::kKnowledge: return "KNOWLEDGE";
  }
  return "?";
}

std::string_view to_string(Ambiguity a) {
  return a == Ambiguity::kLow ? "LOW" : "HIGH";
}

std::string_view to_string(Utility u) {
  switch (u) {
    case Utility::kAdopt: return "ADOPT";
    case Utility::kPartial: return "PARTIAL";
    case Utility::kIgnore: return "IGNORE";
  }
  return "?";
}

PromptVariant parse_variant(std::string_view s) {
  if (s == "NO_CONTEXT") return PromptVariant::kNoContext;
  if (s == "WITH_CONTEXT") return PromptVariant::kWithContext;
  throw ConfigError("unknown prompt variant: " + std::string(s));
}

Category parse_category(std::string_view s) {
  for (Category c : kAllCategories)
    if (to_string(c) == s) return c;
  throw ConfigError("unknown category: " + std::string(s));
}

Ambiguity parse_ambiguity(std::string_view s) {
  if (s == "LOW") return Ambiguity::kLow;
  if (s == "HIGH") return Ambiguity::kHigh;
  throw ConfigError("unknown ambiguity: " + std::string(s));
}

Utility parse_utility(std::string_view s) {
  for (Utility u : kAllUtilities)
    if (to_string(u) == s) return u;
  throw ConfigError("unknown utility: " + std::string(s));
}

}  // namespace ctxgate
