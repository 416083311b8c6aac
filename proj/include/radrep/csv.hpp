#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radrep::csv {

using Row = std::vector<std::string>;

/// 17 significant digits, round-trippable for doubles.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

/// Quotes the field when it contains a comma, quote or newline.
std::string escape(std::string_view field);
std::string join(const Row& row);

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<Row> parse(std::string_view text);
std::vector<Row> read_file(const std::filesystem::path& path);

/// Writes the rows with LF line ends. Throws IoError on failure.
void write_file(const std::filesystem::path& path, const std::vector<Row>& rows);

std::optional<double> parse_number(std::string_view cell);

}  // namespace radrep::csv
