#include "subfuse/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace subfuse {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return Index(j);
  throw IoError("csv: no column named '" + name + "'");
}

CsvTable read_csv(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: " + origin + " is empty");
  CsvTable table;
  table.header = split_row(line);
  const size_t ncol = table.header.size();
  std::vector<double> data;
  Index nrow = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_row(line);
    if (fields.size() != ncol)
      throw IoError("csv: " + origin + " row " + std::to_string(nrow + 2) +
                    " has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(ncol));
    for (const auto& f : fields) {
      double v;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        throw IoError("csv: " + origin + " row " + std::to_string(nrow + 2) +
                      ": cannot parse '" + f + "' as a number");
      data.push_back(v);
    }
    ++nrow;
  }
  table.values = Matrix(nrow, Index(ncol));
  for (Index i = 0; i < nrow; ++i)
    for (Index j = 0; j < Index(ncol); ++j)
      table.values(i, j) = data[size_t(i) * ncol + size_t(j)];
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("csv: cannot open '" + path + "'");
  return read_csv(in, path);
}

Dataset dataset_from_table(const CsvTable& table, const std::string& response,
                           const std::vector<std::string>& treat,
                           const std::vector<std::string>& covar) {
  const Index n = table.values.rows();
  Vector y = table.values.col(table.column(response));
  Matrix X(n, Index(treat.size()));
  for (size_t j = 0; j < treat.size(); ++j)
    X.col(Index(j)) = table.values.col(table.column(treat[j]));
  Matrix Z(n, Index(covar.size()));
  for (size_t j = 0; j < covar.size(); ++j)
    Z.col(Index(j)) = table.values.col(table.column(covar[j]));
  return make_dataset(std::move(y), std::move(Z), std::move(X));
}

}  // namespace subfuse
