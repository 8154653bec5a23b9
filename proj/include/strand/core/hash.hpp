#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace strand {

std::string sha256_hex(std::string_view data);

/// First 64 bits of SHA-256 over the parts, each length-prefixed.
std::uint64_t derive_seed(std::initializer_list<std::string_view> parts);

}  // namespace strand
