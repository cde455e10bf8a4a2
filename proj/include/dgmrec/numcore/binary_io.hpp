#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dgmrec::binio {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(b[i], b[sizeof(T) - 1 - i]);
        }
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f32(std::ostream& os, float v) {
    auto bits = to_little(std::bit_cast<std::uint32_t>(v));
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw std::runtime_error("unexpected end of file");
    }
    return to_little(v);
}

inline float read_f32(std::istream& is) {
    std::uint32_t bits = read_u32(is);
    return std::bit_cast<float>(bits);
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
    char buf[4];
    if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
        throw std::runtime_error(std::string("bad magic, expected ") + magic);
    }
}

} // namespace dgmrec::binio
