#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace opinion {

enum class BiasCategory { geographical, political, gender, age };

// Closed set of modeled biases. The enumerator order is the canonical
// ordering used for corpus output and report rows.
enum class BiasId {
  american,
  german,
  latin_american,
  middle_east,
  liberal,
  conservative,
  female,
  male,
  teenager,
  people_over_30,
  old_people,
};

inline constexpr std::size_t kBiasCount = 11;

struct BiasInfo {
  BiasId id;
  std::string_view key;           // stable snake-case id used on the wire
  std::string_view display_name;
  BiasCategory category;
};

// One subreddit feeding a bias, with the number of top responses kept from
// it at full scale.
struct BiasSource {
  BiasId bias;
  std::string_view subreddit;
  std::uint32_t quota;

  friend constexpr bool operator==(const BiasSource&, const BiasSource&) = default;
};

inline constexpr std::array<BiasInfo, kBiasCount> kBiases{{
    {BiasId::american, "american", "American", BiasCategory::geographical},
    {BiasId::german, "german", "German", BiasCategory::geographical},
    {BiasId::latin_american, "latin_american", "Latin America", BiasCategory::geographical},
    {BiasId::middle_east, "middle_east", "Middle East", BiasCategory::geographical},
    {BiasId::liberal, "liberal", "Liberal", BiasCategory::political},
    {BiasId::conservative, "conservative", "Conservative", BiasCategory::political},
    {BiasId::female, "female", "Female", BiasCategory::gender},
    {BiasId::male, "male", "Male", BiasCategory::gender},
    {BiasId::teenager, "teenager", "Teenager", BiasCategory::age},
    {BiasId::people_over_30, "people_over_30", "People over 30", BiasCategory::age},
    {BiasId::old_people, "old_people", "Old People", BiasCategory::age},
}};

// Source table in its published order. AskMen has no published count; it
// gets 25k like AskWomen so every bias totals 25k.
inline constexpr std::array<BiasSource, 13> kSources{{
    {BiasId::german, "AskAGerman", 25000},
    {BiasId::american, "AskAnAmerican", 25000},
    {BiasId::latin_american, "AskLatinAmerica", 25000},
    {BiasId::middle_east, "AskMiddleEast", 25000},
    {BiasId::liberal, "AskALiberal", 25000},
    {BiasId::conservative, "AskConservatives", 25000},
    {BiasId::female, "AskWomen", 25000},
    {BiasId::male, "AskMen", 25000},
    {BiasId::teenager, "AskTeenGirls", 12500},
    {BiasId::teenager, "AskTeenBoys", 12500},
    {BiasId::people_over_30, "AskMenOver30", 12500},
    {BiasId::people_over_30, "AskWomenOver30", 12500},
    {BiasId::old_people, "AskOldPeople", 25000},
}};

constexpr std::span<const BiasSource> registry() noexcept { return kSources; }

constexpr const BiasInfo& info(BiasId id) noexcept { return kBiases[static_cast<std::size_t>(id)]; }
constexpr std::string_view to_string(BiasId id) noexcept { return info(id).key; }
std::string_view to_string(BiasCategory c) noexcept;

std::optional<BiasId> try_parse_bias(std::string_view key) noexcept;

// Throws ValidationError naming the id when it is not one of the eleven.
BiasId parse_bias(std::string_view key);

std::vector<BiasSource> lookup(BiasId bias);
std::vector<BiasSource> lookup(std::string_view key);

// The subreddit used when prompting for a bias: its first source.
std::string_view serving_subreddit(BiasId bias) noexcept;

std::optional<BiasSource> source_for_subreddit(std::string_view subreddit) noexcept;

// quota * scale, rounded down, never below 1. Throws ValidationError unless
// scale is in (0, 1].
std::uint32_t scaled_quota(std::uint32_t quota, double scale);

void validate_scale(double scale);

// Machine-readable registry listing, one object per source.
nlohmann::json registry_json(double scale = 1.0);

}  // namespace opinion
