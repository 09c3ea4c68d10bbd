#include "resqpass/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace resqpass {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

double parse_double(const std::string& token, const std::string& context) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ParseError(context + ": bad number '" + token + "'");
  return value;
}

}  // namespace

SparseMatrixCSR read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix market: empty input");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lowercase(object) != "matrix" ||
      lowercase(format) != "coordinate") {
    throw ParseError("matrix market: expected a coordinate matrix header");
  }
  field = lowercase(field);
  symmetry = lowercase(symmetry);
  if (field != "real" && field != "integer" && field != "pattern") {
    throw ParseError("matrix market: unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw ParseError("matrix market: unsupported symmetry '" + symmetry + "'");
  }

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  long long rows = 0, cols = 0, entries = 0;
  {
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0) {
      throw ParseError("matrix market: bad size line");
    }
  }

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(entries));
  for (long long e = 0; e < entries; ++e) {
    if (!std::getline(in, line)) throw ParseError("matrix market: too few entries");
    if (line.empty() || line[0] == '%') {
      --e;
      continue;
    }
    std::istringstream entry(line);
    long long i = 0, j = 0;
    double value = 1.0;
    if (!(entry >> i >> j)) throw ParseError("matrix market: bad entry line");
    if (field != "pattern" && !(entry >> value)) throw ParseError("matrix market: missing value");
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw ParseError("matrix market: entry index out of range");
    }
    triplets.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), value});
    if (symmetry == "symmetric" && i != j) {
      triplets.push_back({static_cast<Index>(j - 1), static_cast<Index>(i - 1), value});
    }
  }
  return SparseMatrixCSR::from_triplets(rows, cols, std::move(triplets));
}

SparseMatrixCSR read_matrix_market(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseMatrixCSR& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) {
      out << i + 1 << ' ' << a.col_idx()[p] + 1 << ' ' << a.values()[p] << '\n';
    }
  }
}

void write_matrix_market(const std::filesystem::path& path, const SparseMatrixCSR& a) {
  auto out = open_for_write(path);
  write_matrix_market(out, a);
}

Vector read_vector(std::istream& in) {
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%' || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    values.push_back(parse_double(line.substr(first, last - first + 1), "vector"));
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Vector read_vector(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_vector(in);
}

void write_vector(std::ostream& out, const Vector& v) {
  out << std::setprecision(17);
  for (Index i = 0; i < v.size(); ++i) out << v(i) << '\n';
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
  auto out = open_for_write(path);
  write_vector(out, v);
}

}  // namespace resqpass
