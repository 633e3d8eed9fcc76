#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace octo {

/// 64-bit FNV-1a. Used for config/model fingerprints and checkpoint checksums.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);

/// Content hash in git's blob format: sha1("blob <size>\0" + content), hex.
std::string git_blob_hash(std::string_view content);

std::string to_hex(std::uint64_t value);

}  // namespace octo
