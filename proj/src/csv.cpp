#include "csv.hpp"

#include <charconv>
#include <limits>

#include "crowdlabel/errors.hpp"

namespace crowdlabel::csv {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

Reader::Reader(std::istream& in, std::string source_name) : in_(in), source_(std::move(source_name)) {}

void Reader::fail(const std::string& message) const {
    throw DataError(source_ + ":" + std::to_string(line_) + ": " + message);
}

void Reader::expect_header(const std::vector<std::string_view>& expected) {
    std::vector<std::string> fields;
    if (!next(fields)) fail("missing header");
    bool ok = fields.size() == expected.size();
    for (std::size_t c = 0; ok && c < fields.size(); ++c) ok = fields[c] == expected[c];
    if (!ok) {
        std::string want;
        for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
        fail("expected header '" + want + "'");
    }
}

bool Reader::next(std::vector<std::string>& fields) {
    std::string raw;
    while (std::getline(in_, raw)) {
        ++line_;
        if (line_ == 1 && raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            raw.erase(0, 3);
        }
        if (trim(raw).empty()) continue;
        fields = split(raw);
        return true;
    }
    return false;
}

std::uint32_t Reader::parse_index(const std::string& field, std::string_view column) const {
    std::uint64_t value = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty() ||
        value > std::numeric_limits<std::uint32_t>::max()) {
        fail("invalid " + std::string(column) + " index '" + field + "'");
    }
    return static_cast<std::uint32_t>(value);
}

std::uint8_t Reader::parse_label(const std::string& field) const {
    if (field == "0") return 0;
    if (field == "1") return 1;
    fail("label must be 0 or 1, got '" + field + "'");
}

double Reader::parse_double(const std::string& field, std::string_view column) const {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty()) {
        fail("invalid " + std::string(column) + " value '" + field + "'");
    }
    return value;
}

}  // namespace crowdlabel::csv
