#include "optknn/csv.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "optknn/error.hpp"

namespace optknn {

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown column '" + std::string(name) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Splits the whole input into records, honouring quoted fields that span lines.
std::vector<std::vector<std::string>> parse_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  const auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  const auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && trim(record[0]).empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && trim(field).empty() && !field_started) {
      quoted = true;
      field_started = true;
      field.clear();
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
      ++line;
    } else if (c == '\r') {
      // tolerated before \n
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::Parse, "unterminated quoted field near line " + std::to_string(line));
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

double parse_number(const std::string& cell, const std::string& column, std::size_t row) {
  const std::string_view s = trim(cell);
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorCode::Parse, "row " + std::to_string(row) + ", column '" + column + "': '" + cell +
                                      "' is not a finite number");
  }
  return value;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto records = parse_records(text);
  if (records.empty()) throw Error(ErrorCode::Parse, "empty CSV input");
  CsvTable table;
  for (auto& name : records.front()) table.header.emplace_back(trim(name));
  if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) table.header[0].erase(0, 3);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::Parse, "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                        " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_csv(in);
}

Dataset dataset_from_csv(const CsvTable& table, const ColumnSpec& columns) {
  if (columns.covariates.empty()) throw Error(ErrorCode::InvalidArgument, "at least one covariate column required");
  const std::size_t d_col = table.column(columns.treatment);
  const std::size_t y_col = table.column(columns.outcome);
  std::vector<std::size_t> x_cols;
  for (const auto& name : columns.covariates) x_cols.push_back(table.column(name));

  const auto n = table.rows.size();
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x_cols.size()));
  std::vector<int> d(n);
  std::vector<double> y(n);
  bool all_binary = true;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const double t = parse_number(row[d_col], columns.treatment, r + 1);
    if (t != 0.0 && t != 1.0) {
      throw Error(ErrorCode::Parse, "row " + std::to_string(r + 1) + ": treatment column '" + columns.treatment +
                                        "' must contain only 0 and 1");
    }
    d[r] = static_cast<int>(t);
    y[r] = parse_number(row[y_col], columns.outcome, r + 1);
    all_binary = all_binary && (y[r] == 0.0 || y[r] == 1.0);
    for (std::size_t c = 0; c < x_cols.size(); ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_number(row[x_cols[c]], columns.covariates[c], r + 1);
    }
  }
  const OutcomeKind kind = columns.outcome_kind.value_or(all_binary ? OutcomeKind::Binary : OutcomeKind::Continuous);
  return Dataset(std::move(x), std::move(d), std::move(y), kind, columns.covariates);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  out << "d,y";
  for (const auto& name : dataset.covariate_names()) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < dataset.size(); ++i) {
    out << dataset.treatment(i) << ',' << format_double(dataset.outcome(i));
    for (Index p = 0; p < dataset.dims(); ++p) {
      out << ',' << format_double(dataset.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)));
    }
    out << '\n';
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace optknn
