// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cocyclab/errors.hpp"

namespace cocyclab {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> content_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos));
    if (!line.empty() && line.front() != '#') out.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::vector<double> parse_reals(std::string_view line) {
  std::vector<double> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw Error(Errc::Parse, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto sep = text.find_first_of(";\n", pos);
    const auto piece = trim(text.substr(pos, sep == std::string_view::npos ? text.size() - pos : sep - pos));
    if (!piece.empty()) rows.push_back(parse_reals(piece));
    if (sep == std::string_view::npos) break;
    pos = sep + 1;
  }
  if (rows.empty()) throw Error(Errc::Parse, "empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw Error(Errc::Parse, "matrix row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                   " entries, expected " + std::to_string(rows[0].size()));
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

MarkovKernel parse_kernel_text(std::string_view text) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw Error(Errc::Parse, "kernel file is empty");
  const auto head = parse_reals(lines[0]);
  if (head.size() != 1 || head[0] < 1 || head[0] != static_cast<double>(static_cast<std::size_t>(head[0])))
    throw Error(Errc::Parse, "first line must be the state count S");
  const auto s = static_cast<std::size_t>(head[0]);
  if (lines.size() != s + 1)
    throw Error(Errc::Parse, "expected " + std::to_string(s) + " kernel rows, found " + std::to_string(lines.size() - 1));
  Matrix m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  for (std::size_t i = 0; i < s; ++i) {
    const auto row = parse_reals(lines[i + 1]);
    if (row.size() != s) throw Error(Errc::Parse, "kernel row " + std::to_string(i) + " needs " + std::to_string(s) + " entries");
    for (std::size_t j = 0; j < s; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return MarkovKernel(std::move(m));
}

std::string format_kernel(const MarkovKernel& kernel) {
  std::string out = std::to_string(kernel.n_states()) + "\n";
  for (std::size_t i = 0; i < kernel.n_states(); ++i) {
    for (std::size_t j = 0; j < kernel.n_states(); ++j) {
      if (j) out += ' ';
      out += format_double(kernel(i, j));
    }
    out += '\n';
  }
  return out;
}

MatrixField parse_matrix_field_text(std::string_view text, std::size_t n_states, std::size_t dim) {
  const auto lines = content_lines(text);
  MatrixField field(n_states, dim);
  std::size_t k = 0;
  while (k < lines.size()) {
    std::istringstream in{std::string(lines[k])};
    std::string word;
    long long i = -1, j = -1;
    if (!(in >> word >> i >> j) || word != "edge" || i < 0 || j < 0)
      throw Error(Errc::Parse, "expected 'edge i j', got '" + std::string(lines[k]) + "'");
    if (k + dim >= lines.size())
      throw Error(Errc::Parse, "edge " + std::to_string(i) + " " + std::to_string(j) + " needs " + std::to_string(dim) + " rows");
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
      const auto row = parse_reals(lines[k + 1 + r]);
      if (row.size() != dim) throw Error(Errc::Parse, "matrix rows must have " + std::to_string(dim) + " entries");
      for (std::size_t c = 0; c < dim; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    field.set(static_cast<State>(i), static_cast<State>(j), std::move(m));
    k += dim + 1;
  }
  return field;
}

std::string format_matrix_field(const MatrixField& field) {
  std::string out;
  for (const Edge& e : field.edges()) {
    out += "edge " + std::to_string(e.from) + " " + std::to_string(e.to) + "\n";
    const Matrix& m = field.at(e.from, e.to);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) out += ' ';
        out += format_double(m(r, c));
      }
      out += '\n';
    }
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Parse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
  out << contents;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  require(cells.size() == header_.size(), Errc::ShapeMismatch, "CSV row width does not match header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += r[i];
    }
    out += '\n';
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out;
}

}  // namespace cocyclab
