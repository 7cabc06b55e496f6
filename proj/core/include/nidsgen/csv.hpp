#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nidsgen {

/// Quotes a field when it contains a comma, quote, CR or LF (RFC 4180).
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

/// RFC 4180 reader. Lines starting with '#' outside a quoted field are
/// collected as comments; blank lines are skipped.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Reads the next record. Returns false at end of input.
    bool next(std::vector<std::string>& fields);
    /// 1-based line number where the last returned record started.
    std::size_t line() const noexcept { return record_line_; }
    const std::vector<std::string>& comments() const noexcept { return comments_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
    std::vector<std::string> comments_;
};

}  // namespace nidsgen
