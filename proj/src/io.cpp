#include "bubble/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace bubble {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CsvWriter::CsvWriter(std::vector<std::string> header, bool schema_line) : columns_(header.size()) {
  if (schema_line) {
    out_ += "# schema_version=";
    out_ += kSchemaVersion;
    out_ += '\n';
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += quote(header[i]);
  }
  out_ += '\n';
}

void CsvWriter::add_row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw std::logic_error("csv row width mismatch");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += quote(fields[i]);
  }
  out_ += '\n';
  ++rows_;
}

std::string CsvWriter::quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string q = "\"";
  for (char c : field) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InputError("missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, const std::string& source_name) {
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line_no = 1;

  while (pos < text.size() && text[pos] == '#') {
    auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    constexpr std::string_view tag = "# schema_version=";
    if (line.starts_with(tag)) table.schema_version = std::string(line.substr(tag.size()));
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
  }

  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool have_header = false;
  bool record_open = false;

  auto finish_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    if (!have_header) {
      table.header = std::move(record);
      have_header = true;
    } else if (!(record.size() == 1 && record[0].empty())) {
      if (record.size() != table.header.size())
        throw InputError(source_name + ": line " + std::to_string(line_no) + ": expected " +
                         std::to_string(table.header.size()) + " fields, got " + std::to_string(record.size()));
      table.rows.push_back(std::move(record));
    }
    record.clear();
    record_open = false;
  };

  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field += c;
      }
      continue;
    }
    record_open = true;
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // tolerated before \n
    } else if (c == '\n') {
      finish_record();
      ++line_no;
    } else {
      field += c;
    }
  }
  if (in_quotes) throw InputError(source_name + ": unterminated quoted field");
  if (record_open) finish_record();
  if (!have_header) throw InputError(source_name + ": missing header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path), path.string());
}

void check_schema(const CsvTable& table, const std::string& source_name) {
  if (table.schema_version && *table.schema_version != kSchemaVersion)
    throw InputError(source_name + ": schema version mismatch (found '" + *table.schema_version +
                     "', expected '" + std::string(kSchemaVersion) + "')");
}

std::string format_double(double value) {
  if (std::isnan(value)) return {};
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw InputError(context + ": not a number: '" + std::string(text) + "'");
  return v;
}

std::int64_t parse_int(std::string_view text, const std::string& context) {
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw InputError(context + ": not an integer: '" + std::string(text) + "'");
  return v;
}

}  // namespace bubble
