#include "dgpe/binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace dgpe::binio {

namespace {

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

}  // namespace

void write_f64_le(std::ostream& os, std::span<const double> values) {
    constexpr std::size_t kChunk = 4096;
    unsigned char buf[kChunk * 8];
    for (std::size_t start = 0; start < values.size(); start += kChunk) {
        const std::size_t n = std::min(kChunk, values.size() - start);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t le = to_le(std::bit_cast<std::uint64_t>(values[start + i]));
            std::memcpy(buf + 8 * i, &le, 8);
        }
        os.write(reinterpret_cast<const char*>(buf), static_cast<std::streamsize>(8 * n));
    }
}

bool read_f64_le(std::istream& is, std::span<double> values) {
    for (double& v : values) {
        std::uint64_t raw = 0;
        if (!is.read(reinterpret_cast<char*>(&raw), 8)) return false;
        v = std::bit_cast<double>(to_le(raw));
    }
    return true;
}

}  // namespace dgpe::binio
