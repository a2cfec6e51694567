#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace toothseg {

using Json = nlohmann::ordered_json;

/// Rounds to `digits` significant decimal digits so that serialized reports
/// are stable across platforms.
double round_significant(double value, int digits = 6);

/// "%.6g" formatting used for CSV output.
std::string format_number(double value);

/// Pretty-printed JSON with a trailing newline.
std::string to_report_text(const Json& doc);
void write_report(const std::filesystem::path& path, const Json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Json parse_json_file(const std::filesystem::path& path);

}  // namespace toothseg
