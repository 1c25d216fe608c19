#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pdfm {

/// Shortest decimal that reads back to the same double; "nan"/"inf"/"-inf"
/// for non-finite values.
std::string format_double(double v);
double parse_double(const std::string& text);

std::string read_text(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// Splits one CSV line on `sep`; no quoting support beyond stripping a pair
/// of surrounding double quotes from a field.
std::vector<std::string> split_csv_line(const std::string& line, char sep = ',');

/// Collects every results.csv under `dir` and renders one Markdown table per
/// dataset: rows are modes, columns K-shot x {Acc, DBC, Disc, Cons}.
std::string render_report(const std::filesystem::path& dir);

}  // namespace pdfm
