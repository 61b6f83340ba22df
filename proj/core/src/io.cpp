#include "tml/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "tml/matrix_core.hpp"

namespace tml {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_complex(Complex z) {
  std::string s = format_double(z.real());
  s += (z.imag() < 0.0 || std::signbit(z.imag())) ? "-" : "+";
  s += format_double(std::abs(z.imag()));
  s += "i";
  return s;
}

Complex parse_complex(const std::string& token) {
  const char* p = token.c_str();
  char* end = nullptr;
  const double re = std::strtod(p, &end);
  if (end == p) throw std::runtime_error("parse_complex: bad token '" + token + "'");
  while (*end == ' ') ++end;
  if (*end == '\0') return {re, 0.0};  // tolerate plain reals
  if (*end != '+' && *end != '-')
    throw std::runtime_error("parse_complex: bad token '" + token + "'");
  const double sign = (*end == '-') ? -1.0 : 1.0;
  const char* q = end + 1;
  const double im = std::strtod(q, &end);
  if (end == q || *end != 'i')
    throw std::runtime_error("parse_complex: bad token '" + token + "'");
  return {re, sign * im};
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  return f;
}

}  // namespace

void write_dense_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream f = open_out(path);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) f << ',';
      f << format_complex(m(i, j));
    }
    f << '\n';
  }
}

Matrix read_dense_matrix(const std::filesystem::path& path) {
  std::ifstream f = open_in(path);
  std::vector<std::vector<Complex>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<Complex> row;
    for (const auto& tok : split_csv(line)) row.push_back(parse_complex(tok));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("read_dense_matrix: empty file " + path.string());
  const size_t cols = rows[0].size();
  Matrix m(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw std::runtime_error("read_dense_matrix: ragged rows in " + path.string());
    for (size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_sym_toeplitz(const std::filesystem::path& path, const SymToeplitz& t) {
  std::ofstream f = open_out(path);
  f << "toeplitz-sym," << t.size() << '\n';
  for (int k = 0; k < t.size(); ++k) {
    if (k) f << ',';
    f << format_double(t.lag(k));
  }
  f << '\n';
}

SymToeplitz read_sym_toeplitz(const std::filesystem::path& path) {
  std::ifstream f = open_in(path);
  std::string header, data;
  if (!std::getline(f, header) || !std::getline(f, data))
    throw std::runtime_error("read_sym_toeplitz: truncated file " + path.string());
  const auto head = split_csv(header);
  if (head.size() != 2 || head[0] != "toeplitz-sym")
    throw std::runtime_error("read_sym_toeplitz: bad header in " + path.string());
  const int n = std::stoi(head[1]);
  const auto toks = split_csv(data);
  if (static_cast<int>(toks.size()) != n)
    throw std::runtime_error("read_sym_toeplitz: lag count mismatch in " + path.string());
  Vector lags(n);
  for (int k = 0; k < n; ++k) lags(k) = std::strtod(toks[k].c_str(), nullptr);
  return SymToeplitz(std::move(lags));
}

void write_snapshots(const std::filesystem::path& path, const SnapshotSet& s) {
  std::ofstream f = open_out(path);
  f << "snapshots," << s.dim() << ',' << s.count() << ',' << s.seed << '\n';
  for (int i = 0; i < s.dim(); ++i) {
    for (int t = 0; t < s.count(); ++t) {
      if (t) f << ',';
      f << format_complex(s.snapshots(i, t));
    }
    f << '\n';
  }
}

SnapshotSet read_snapshots(const std::filesystem::path& path) {
  std::ifstream f = open_in(path);
  std::string header;
  if (!std::getline(f, header))
    throw std::runtime_error("read_snapshots: truncated file " + path.string());
  const auto head = split_csv(header);
  if (head.size() != 4 || head[0] != "snapshots")
    throw std::runtime_error("read_snapshots: bad header in " + path.string());
  const int n = std::stoi(head[1]);
  const int t_count = std::stoi(head[2]);
  SnapshotSet s;
  s.seed = std::strtoull(head[3].c_str(), nullptr, 10);
  s.snapshots = Matrix(n, t_count);
  std::string line;
  for (int i = 0; i < n; ++i) {
    if (!std::getline(f, line))
      throw std::runtime_error("read_snapshots: truncated file " + path.string());
    const auto toks = split_csv(line);
    if (static_cast<int>(toks.size()) != t_count)
      throw std::runtime_error("read_snapshots: column mismatch in " + path.string());
    for (int t = 0; t < t_count; ++t) s.snapshots(i, t) = parse_complex(toks[t]);
  }
  return s;
}

LoadedMatrix read_matrix_auto(const std::filesystem::path& path) {
  std::string header;
  {
    std::ifstream f = open_in(path);
    std::getline(f, header);
  }
  if (header.rfind("toeplitz-sym,", 0) == 0) return read_sym_toeplitz(path);
  if (header.rfind("snapshots,", 0) == 0) return read_snapshots(path);
  return read_dense_matrix(path);
}

Matrix load_hermitian(const std::filesystem::path& path) {
  LoadedMatrix m = read_matrix_auto(path);
  if (std::holds_alternative<SymToeplitz>(m)) return to_dense(std::get<SymToeplitz>(m));
  if (std::holds_alternative<SnapshotSet>(m)) return sample_covariance(std::get<SnapshotSet>(m));
  return hermitize(std::get<Matrix>(m));
}

}  // namespace tml
