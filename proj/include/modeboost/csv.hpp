#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace modeboost::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and `""`
/// escapes; surrounding whitespace and a trailing CR are stripped.
std::vector<std::string> split_row(std::string_view line);

/// Quotes a field when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

/// Line-oriented CSV reader over a whole file. Blank lines and lines starting
/// with `#` are skipped; `line_number` reports 1-based file lines.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path);

    const std::vector<std::string>& header() const { return header_; }
    std::optional<std::size_t> column(std::string_view name) const;

    /// Next record, or false at end of file.
    bool next(std::vector<std::string>& fields);
    std::size_t line_number() const { return line_number_; }

private:
    std::vector<std::string> lines_;
    std::size_t cursor_ = 0;
    std::size_t line_number_ = 0;
    std::vector<std::string> header_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace modeboost::csv
