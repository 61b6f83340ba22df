#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "tml/types.hpp"

namespace tml {

/// Complex scalar as "re+imi" (e.g. "0.25-0.5i"), round-trip exact.
std::string format_complex(Complex z);
Complex parse_complex(const std::string& token);

std::string format_double(double x);

/// Dense matrix: plain-text CSV, one row per matrix row, complex entries.
void write_dense_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_dense_matrix(const std::filesystem::path& path);

/// Symmetric Toeplitz: header "toeplitz-sym,N" then one row of N real lags.
void write_sym_toeplitz(const std::filesystem::path& path, const SymToeplitz& t);
SymToeplitz read_sym_toeplitz(const std::filesystem::path& path);

/// Snapshots: header "snapshots,N,T,seed" then N rows of T complex entries.
void write_snapshots(const std::filesystem::path& path, const SnapshotSet& s);
SnapshotSet read_snapshots(const std::filesystem::path& path);

using LoadedMatrix = std::variant<SymToeplitz, SnapshotSet, Matrix>;

/// Sniff the header line and dispatch to the right reader.
LoadedMatrix read_matrix_auto(const std::filesystem::path& path);

/// Any loadable input viewed as a Hermitian matrix (snapshot sets are turned
/// into their sample covariance).
Matrix load_hermitian(const std::filesystem::path& path);

}  // namespace tml
