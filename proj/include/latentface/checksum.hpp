#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace latentface {

/// 64-bit FNV-1a. Used for the container trailer and model fingerprints.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    void update(std::span<const std::byte> bytes) noexcept {
        for (std::byte b : bytes) {
            state_ ^= static_cast<std::uint64_t>(b);
            state_ *= kPrime;
        }
    }
    void update(std::string_view s) noexcept { update(std::as_bytes(std::span(s.data(), s.size()))); }

    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept {
    Fnv1a64 h;
    h.update(bytes);
    return h.digest();
}

}  // namespace latentface
