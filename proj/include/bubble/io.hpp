#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bubble {

// Artifact schema tag. CSV artifacts carry it on a leading "# schema_version=" line,
// JSON artifacts under the "schema_version" key.
inline constexpr std::string_view kSchemaVersion = "bubble/1";

/// Bad or missing input data. The CLI maps this to exit status 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimation or numerical failure (non-convergence, singular design). Exit status 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

// Writes via a temporary sibling file and rename, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// RFC-4180 CSV writer. Fields containing separators, quotes or line breaks are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header, bool schema_line = true);

  void add_row(const std::vector<std::string>& fields);
  std::string str() const { return out_; }
  std::size_t rows() const { return rows_; }

  static std::string quote(std::string_view field);

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::optional<std::string> schema_version;

  std::size_t column(std::string_view name) const;  // throws InputError when absent
};

// Parses RFC-4180 text. Lines beginning with '#' before the header are treated as
// metadata; a "# schema_version=" line is captured.
CsvTable parse_csv(std::string_view text, const std::string& source_name = "<csv>");
CsvTable read_csv(const std::filesystem::path& path);

// Throws InputError if the table carries a schema tag that differs from ours.
void check_schema(const CsvTable& table, const std::string& source_name);

// Shortest round-trip decimal representation; empty string for NaN (missing).
std::string format_double(double value);
double parse_double(std::string_view text, const std::string& context);
std::int64_t parse_int(std::string_view text, const std::string& context);

}  // namespace bubble
