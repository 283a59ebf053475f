#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "subfuse/dataset.hpp"
#include "subfuse/types.hpp"

namespace subfuse {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;  // rows x columns

  Index column(const std::string& name) const;  // throws IoError when absent
};

CsvTable read_csv(std::istream& in, const std::string& origin = "<stream>");
CsvTable read_csv_file(const std::string& path);

// Assembles a dataset from named columns; covar may be empty (intercept-only Z).
Dataset dataset_from_table(const CsvTable& table, const std::string& response,
                           const std::vector<std::string>& treat,
                           const std::vector<std::string>& covar);

}  // namespace subfuse
