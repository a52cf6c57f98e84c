#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bridgedist {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);

/// Appends a big-endian 64-bit word to a byte buffer.
void put_u64_be(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint64_t read_u64_be(std::span<const std::uint8_t> in);

/// First eight bytes of a digest as a big-endian word.
std::uint64_t digest_prefix(const Digest& d);

}  // namespace bridgedist
