#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace osnids {

std::string_view trim(std::string_view s);

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    std::optional<std::vector<std::string>> next_row();
    /// 1-based line on which the last returned row started.
    std::size_t line_number() const { return row_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t row_line_ = 0;
};

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

} // namespace osnids
