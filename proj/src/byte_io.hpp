#pragma once

// Little-endian primitive encoding shared by the container codec and the
// model fingerprint.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "latentface/error.hpp"

namespace latentface::detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void append_le(std::vector<std::byte>& out, T value) {
    std::byte raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t k = sizeof(T); k-- > 0;) out.push_back(raw[k]);
    } else {
        out.insert(out.end(), raw, raw + sizeof(T));
    }
}

inline void append_f32(std::vector<std::byte>& out, double value) {
    append_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

inline void append_string(std::vector<std::byte>& out, std::string_view s) {
    append_le(out, static_cast<std::uint32_t>(s.size()));
    const auto* p = reinterpret_cast<const std::byte*>(s.data());
    out.insert(out.end(), p, p + s.size());
}

/// Bounds-checked cursor over an immutable byte buffer.
class ByteReader {
public:
    ByteReader(const std::byte* data, std::size_t size) : data_(data), size_(size) {}

    template <class T>
    T read_le() {
        need(sizeof(T));
        std::byte raw[sizeof(T)];
        if constexpr (std::endian::native == std::endian::big) {
            for (std::size_t k = 0; k < sizeof(T); ++k) raw[k] = data_[pos_ + sizeof(T) - 1 - k];
        } else {
            std::memcpy(raw, data_ + pos_, sizeof(T));
        }
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

    float read_f32() { return std::bit_cast<float>(read_le<std::uint32_t>()); }

    std::string read_string() {
        const auto n = read_le<std::uint32_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return size_ - pos_; }

    void need(std::size_t n) const {
        if (n > size_ - pos_) throw TruncatedError("container ends before its declared contents");
    }

private:
    const std::byte* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace latentface::detail
