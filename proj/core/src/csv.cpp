#include "nidsgen/csv.hpp"

#include <istream>
#include <ostream>

#include "nidsgen/error.hpp"

namespace nidsgen {

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(fields[i]);
    }
    out << '\n';
}

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    for (;;) {
        if (!std::getline(in_, line)) return false;
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            comments_.push_back(line);
            continue;
        }
        break;
    }
    record_line_ = line_;
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    for (;;) {
        if (i >= line.size()) {
            if (!quoted) break;
            // Quoted field spans a line break.
            std::string more;
            if (!std::getline(in_, more)) {
                throw Error(ErrorCode::parse_error, "unterminated quoted field starting at line " +
                                                        std::to_string(record_line_));
            }
            ++line_;
            if (!more.empty() && more.back() == '\r') more.pop_back();
            field.push_back('\n');
            line = std::move(more);
            i = 0;
            continue;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            field.push_back(c);
            ++i;
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    fields.push_back(std::move(field));
    return true;
}

}  // namespace nidsgen
