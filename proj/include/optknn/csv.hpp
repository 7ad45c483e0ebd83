#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optknn/dataset.hpp"

namespace optknn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Position of `name` in the header; throws InvalidArgument when absent.
  std::size_t column(std::string_view name) const;
};

// RFC 4180 style: comma separated, optional double quotes, header row
// required. Throws Parse on ragged rows or unterminated quotes.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

struct ColumnSpec {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
  // Unset: binary when every outcome is 0 or 1.
  std::optional<OutcomeKind> outcome_kind;
};

// Missing or non-numeric cells and treatment values other than 0/1 throw Parse.
Dataset dataset_from_csv(const CsvTable& table, const ColumnSpec& columns);

void write_dataset_csv(std::ostream& out, const Dataset& dataset);

// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

std::string sha256_hex(std::string_view bytes);
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace optknn
