#include "mtqml/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace mtqml {

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "# mtqml-dataset v1 p=" << data.dim() << " n=" << data.size() << '\n';
  for (Index k = 0; k < data.dim(); ++k) {
    if (k > 0) out << ',';
    out << "re_" << k << ",im_" << k;
  }
  out << '\n' << std::setprecision(17);
  for (Index n = 0; n < data.size(); ++n) {
    for (Index k = 0; k < data.dim(); ++k) {
      if (k > 0) out << ',';
      out << data.samples()(k, n).real() << ',' << data.samples()(k, n).imag();
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing dataset");
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_dataset_csv(data, out);
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("missing dataset header");
  long long p = -1;
  long long n = -1;
  if (std::sscanf(line.c_str(), "# mtqml-dataset v1 p=%lld n=%lld", &p, &n) != 2 || p < 1 || n < 0) {
    throw Error("malformed dataset header");
  }
  if (!std::getline(in, line)) throw Error("missing dataset column line");
  ComplexMatrix x(p, n);
  for (long long j = 0; j < n; ++j) {
    if (!std::getline(in, line)) throw Error("dataset ends after " + std::to_string(j) + " rows");
    std::stringstream row(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) throw Error("malformed number in dataset row " + std::to_string(j));
      values.push_back(v);
    }
    if (static_cast<long long>(values.size()) != 2 * p) {
      throw Error("dataset row " + std::to_string(j) + " has the wrong number of columns");
    }
    for (long long k = 0; k < p; ++k) {
      x(k, j) = Complex(values[static_cast<std::size_t>(2 * k)], values[static_cast<std::size_t>(2 * k + 1)]);
    }
  }
  return Dataset(std::move(x));
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return read_dataset_csv(in);
}

}  // namespace mtqml
