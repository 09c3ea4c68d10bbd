#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "resqpass/operators.hpp"

namespace resqpass {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a "%%MatrixMarket matrix coordinate real general" stream (1-based
/// indices). Symmetric files are expanded. Duplicate entries are summed.
SparseMatrixCSR read_matrix_market(std::istream& in);
SparseMatrixCSR read_matrix_market(const std::filesystem::path& path);

void write_matrix_market(std::ostream& out, const SparseMatrixCSR& a);
void write_matrix_market(const std::filesystem::path& path, const SparseMatrixCSR& a);

/// One decimal value per line; "inf", "-inf" and "nan" are accepted, blank
/// lines and lines starting with '%' or '#' are skipped.
Vector read_vector(std::istream& in);
Vector read_vector(const std::filesystem::path& path);

void write_vector(std::ostream& out, const Vector& v);
void write_vector(const std::filesystem::path& path, const Vector& v);

}  // namespace resqpass
