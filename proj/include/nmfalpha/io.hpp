#ifndef NMFALPHA_IO_HPP_
#define NMFALPHA_IO_HPP_

// Sparse label-line datasets, text model archives and flat config files.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nmfalpha/matrix.hpp"

namespace nmfa::io {

/// One example per line: `<label-field> <idx>:<value> ...` with 1-based,
/// strictly increasing feature indices. The label field is `+1`/`-1`, an
/// integer, or comma-separated integers; a line whose first token already
/// is a feature carries no label. `#` starts a comment.
struct SparseDataset {
  NonNegMatrix X;
  std::vector<std::vector<int>> label_ids;
};

/// `min_rows` pads the feature dimension (useful to align several files).
SparseDataset parse_sparse_dataset(const std::string& path, std::size_t min_rows = 0);
SparseDataset parse_sparse_stream(std::istream& in, const std::string& source,
                                  std::size_t min_rows = 0);

/// Reads several files into one matrix: columns in file order, feature
/// dimension the largest found. Returns the column offset of every file.
SparseDataset parse_sparse_files(const std::vector<std::string>& paths,
                                 std::vector<std::size_t>* offsets = nullptr);

inline constexpr int kArchiveVersion = 1;

/// Text archive:
///
///   NMFALPHA v1 <kind>
///   <key> = <value>           (any number)
///   block <name> <rows> <cols>
///   <row of cols numbers>     (rows lines)
///   ...
///   CRC32 <8 hex digits>      (zlib CRC-32 of every byte above this line)
///
/// Numbers use 17 significant digits, so doubles round-trip exactly.
struct ModelArchive {
  int format_version = kArchiveVersion;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Dense>> blocks;

  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  /// Throws ParseError when the key is absent.
  std::string require(const std::string& key) const;
  void add_block(const std::string& name, Dense block);
  bool has_block(const std::string& name) const;
  /// Throws ParseError when the block is absent.
  const Dense& block(const std::string& name) const;
};

/// Kinds whose factor blocks (V, H, U, Q, H_unlabeled) must be nonnegative.
bool is_factorization_kind(std::string_view kind);

std::string serialize(const ModelArchive& archive);
/// Throws ParseError (malformed), VersionError (other format version),
/// ChecksumError (missing or wrong CRC line, e.g. a truncated file) and
/// DomainError (negative factor entry in an NMF-family archive).
ModelArchive deserialize(std::string_view text);

void save_model(const std::string& path, const ModelArchive& archive);
ModelArchive load_model(const std::string& path);

/// Flat `key = value` lines; `#` comments and blank lines ignored.
/// Duplicate keys are a parse error.
std::map<std::string, std::string> parse_config(std::istream& in, const std::string& source);
std::map<std::string, std::string> load_config(const std::string& path);

/// %.17g.
std::string format_double(double value);
/// Shortest text that parses back to the same double (CSV output).
std::string format_shortest(double value);
/// Whole-string parse; ParseError otherwise.
double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);
std::vector<std::string> split_list(std::string_view text, char separator = ',');

}  // namespace nmfa::io

#endif  // NMFALPHA_IO_HPP_
