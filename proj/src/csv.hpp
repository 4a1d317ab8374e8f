#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace crowdlabel::csv {

// Minimal reader for the comma-separated, header-first files this library
// emits. No quoting: none of the formats carry commas inside fields.
class Reader {
public:
    Reader(std::istream& in, std::string source_name);

    // Throws DataError unless the header equals `expected` (after trimming).
    void expect_header(const std::vector<std::string_view>& expected);

    // Next non-blank row; false at end of input.
    bool next(std::vector<std::string>& fields);

    std::size_t line() const noexcept { return line_; }
    [[noreturn]] void fail(const std::string& message) const;

    std::uint32_t parse_index(const std::string& field, std::string_view column) const;
    std::uint8_t parse_label(const std::string& field) const;
    double parse_double(const std::string& field, std::string_view column) const;

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

std::vector<std::string> split(std::string_view line);
std::string_view trim(std::string_view s);

}  // namespace crowdlabel::csv
