#include "depshap/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "depshap/errors.hpp"
#include "depshap/format.hpp"

namespace depshap {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one line on commas; fields may be double-quoted with "" escapes.
std::vector<std::string> split_fields(std::string_view line, const std::string& where) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw SchemaError(where + ": unterminated quote");
  out.push_back(was_quoted ? field : std::string(trim(field)));
  return out;
}

std::string quote_name(const std::string& name) {
  if (name.find_first_of(",\"\n") == std::string::npos) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null" || s == "?";
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "'" : ", '") + s + "'";
  return out;
}

}  // namespace

int Table::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw SchemaError("column '" + name + "' not found");
  return static_cast<int>(it - names.begin());
}

Table Table::without(const std::string& name) const {
  const int drop = column(name);
  std::vector<std::string> keep;
  for (int j = 0; j < columns(); ++j) {
    if (j != drop) keep.push_back(names[static_cast<std::size_t>(j)]);
  }
  return select(keep);
}

Table Table::select(const std::vector<std::string>& columns) const {
  Table out;
  out.names = columns;
  out.values.resize(rows(), std::ssize(columns));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(column(columns[j]));
  }
  return out;
}

Table parse_csv(std::string_view text, const std::string& source) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw SchemaError(source + ": empty file, header row required");
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") lines.front().remove_prefix(3);

  Table table;
  table.names = split_fields(lines.front(), source + " line 1");
  std::set<std::string> seen;
  for (const auto& name : table.names) {
    if (name.empty()) throw SchemaError(source + ": empty column name in header");
    if (!seen.insert(name).second) throw SchemaError(source + ": duplicate column '" + name + "'");
  }
  const auto m = table.names.size();
  table.values.resize(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(m));
  std::vector<bool> non_numeric(m, false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = source + " line " + std::to_string(i + 1);
    const auto fields = split_fields(lines[i], where);
    if (fields.size() != m) {
      throw SchemaError(where + ": expected " + std::to_string(m) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < m; ++j) {
      const std::string_view f = fields[j];
      if (is_missing(f)) {
        throw SchemaError(where + ": missing value in column '" + table.names[j] + "'");
      }
      std::string_view digits = f;
      if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        non_numeric[j] = true;
        continue;
      }
      if (!std::isfinite(v)) throw SchemaError(where + ": non-finite value in column '" + table.names[j] + "'");
      table.values(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) = v;
    }
  }
  std::vector<std::string> bad;
  for (std::size_t j = 0; j < m; ++j) {
    if (non_numeric[j]) bad.push_back(table.names[j]);
  }
  if (!bad.empty()) throw SchemaError(source + ": non-numeric columns: " + join(bad));
  return table;
}

Table read_csv(const std::string& path) { return parse_csv(read_text_file(path), path); }

std::string format_csv(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.names.size(); ++j) out += (j ? "," : "") + quote_name(table.names[j]);
  out += '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      if (j) out += ',';
      out += format_number(table.values(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace depshap
