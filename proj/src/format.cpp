#include "crowdlabel/format.hpp"

#include <charconv>
#include <cmath>

namespace crowdlabel {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

void Fnv1a::add(std::uint64_t value) {
    for (int b = 0; b < 8; ++b) {
        h_ ^= (value >> (8 * b)) & 0xffu;
        h_ *= 0x100000001b3ull;
    }
}

void Fnv1a::add(std::string_view bytes) {
    for (unsigned char c : bytes) {
        h_ ^= c;
        h_ *= 0x100000001b3ull;
    }
}

std::string Fnv1a::hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = kDigits[(h_ >> (4 * i)) & 0xfu];
    return out;
}

}  // namespace crowdlabel
