#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace cvl {

inline constexpr std::string_view kToolName = "cvl";
inline constexpr std::string_view kToolVersion = "0.1.0";

// 64-bit FNV-1a. Stable across platforms, which std::hash is not.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string digest_of(std::string_view canonical) { return to_hex(fnv1a64(canonical)); }

} // namespace cvl
