#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace crowdlabel {

/// Shortest decimal text that parses back to exactly `x`; "inf", "-inf" and
/// "nan" for non-finite values. Locale independent.
std::string format_double(double x);

/// 64-bit FNV-1a digest, identical on every platform.
class Fnv1a {
public:
    void add(std::uint64_t value);
    void add(std::string_view bytes);
    std::uint64_t value() const noexcept { return h_; }
    /// 16 lowercase hex digits.
    std::string hex() const;

private:
    std::uint64_t h_ = 0xcbf29ce484222325ull;
};

}  // namespace crowdlabel
