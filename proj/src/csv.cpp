#include "osnids/csv.hpp"

#include "osnids/error.hpp"

namespace osnids {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<std::vector<std::string>> CsvReader::next_row() {
    std::string line;
    if (!std::getline(in_, line)) {
        return std::nullopt;
    }
    ++line_;
    row_line_ = line_;

    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    while (true) {
        if (i == line.size()) {
            if (!quoted) {
                break;
            }
            // Quoted field spans a newline.
            std::string more;
            if (!std::getline(in_, more)) {
                fail(ErrorCode::BadCsv, "unterminated quote starting on line " + std::to_string(row_line_));
            }
            ++line_;
            field += '\n';
            line = std::move(more);
            i = 0;
            continue;
        }
        const char c = line[i++];
        if (quoted) {
            if (c == '"') {
                if (i < line.size() && line[i] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i == line.size()) {
            // CRLF line ending
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            out << ',';
        }
        out << csv_escape(fields[i]);
    }
    out << '\n';
}

} // namespace osnids
