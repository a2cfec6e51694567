#include "toothseg/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <span>

#include "toothseg/error.hpp"
#include "toothseg/image_io.hpp"

namespace toothseg {

double round_significant(double value, int digits) {
  if (!std::isfinite(value) || value == 0.0) return value == 0.0 ? 0.0 : value;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value == 0.0 ? 0.0 : value);
  return buf;
}

std::string to_report_text(const Json& doc) { return doc.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_report(const std::filesystem::path& path, const Json& doc) { write_text_file(path, to_report_text(doc)); }

Json parse_json_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::CorruptFile, path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace toothseg
