#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace opinion {

// Bytes from the kernel CSPRNG (getrandom). Throws IoError if unavailable.
void secure_random_bytes(std::span<std::uint8_t> out);

template <std::size_t N>
std::array<std::uint8_t, N> secure_random() {
  std::array<std::uint8_t, N> out{};
  secure_random_bytes(out);
  return out;
}

// RFC 4648 url-safe alphabet, no padding.
std::string base64url(std::span<const std::uint8_t> bytes);
std::string hex(std::span<const std::uint8_t> bytes);

}  // namespace opinion
