// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cocyclab/cocycle.hpp"
#include "cocyclab/linalg.hpp"
#include "cocyclab/markov.hpp"

namespace cocyclab {

/// "%.17g".
std::string format_double(double v);

/// Parses whitespace-separated reals; rows separated by ';' or newlines.
Matrix parse_matrix(std::string_view text);

/// Plain-text kernel: first line S, then S lines of S probabilities.
/// Lines starting with '#' are ignored.
MarkovKernel parse_kernel_text(std::string_view text);
std::string format_kernel(const MarkovKernel& kernel);

/// Edge blocks: a line "edge i j" followed by m rows of m reals.
MatrixField parse_matrix_field_text(std::string_view text, std::size_t n_states, std::size_t dim);
std::string format_matrix_field(const MatrixField& field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// Comma-separated table with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace cocyclab
