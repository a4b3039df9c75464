#include "opinion/bias_registry.hpp"

#include <cmath>

#include <json.hpp>

#include "opinion/error.hpp"

namespace opinion {

std::string_view to_string(BiasCategory c) noexcept {
  switch (c) {
    case BiasCategory::geographical: return "geographical";
    case BiasCategory::political: return "political";
    case BiasCategory::gender: return "gender";
    case BiasCategory::age: return "age";
  }
  return "unknown";
}

std::optional<BiasId> try_parse_bias(std::string_view key) noexcept {
  for (const auto& b : kBiases) {
    if (b.key == key) return b.id;
  }
  return std::nullopt;
}

BiasId parse_bias(std::string_view key) {
  if (auto id = try_parse_bias(key)) return *id;
  throw ValidationError("unknown bias '" + std::string(key) + "'", {std::string(key)});
}

std::vector<BiasSource> lookup(BiasId bias) {
  std::vector<BiasSource> out;
  for (const auto& s : kSources) {
    if (s.bias == bias) out.push_back(s);
  }
  return out;
}

std::vector<BiasSource> lookup(std::string_view key) { return lookup(parse_bias(key)); }

std::string_view serving_subreddit(BiasId bias) noexcept {
  for (const auto& s : kSources) {
    if (s.bias == bias) return s.subreddit;
  }
  return {};
}

std::optional<BiasSource> source_for_subreddit(std::string_view subreddit) noexcept {
  for (const auto& s : kSources) {
    if (s.subreddit == subreddit) return s;
  }
  return std::nullopt;
}

void validate_scale(double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw ValidationError("scale must be in (0, 1], got " + std::to_string(scale), {"scale"});
  }
}

std::uint32_t scaled_quota(std::uint32_t quota, double scale) {
  validate_scale(scale);
  // The epsilon keeps products like 12500 * 0.002 from landing on 24.999...
  auto scaled = static_cast<std::uint32_t>(std::floor(static_cast<double>(quota) * scale + 1e-9));
  return scaled < 1 ? 1 : scaled;
}

nlohmann::json registry_json(double scale) {
  auto out = nlohmann::json::array();
  for (const auto& s : kSources) {
    const auto& b = info(s.bias);
    out.push_back({
        {"bias", b.key},
        {"display_name", b.display_name},
        {"category", to_string(b.category)},
        {"subreddit", s.subreddit},
        {"quota", scaled_quota(s.quota, scale)},
    });
  }
  return out;
}

}  // namespace opinion
