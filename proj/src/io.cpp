#include "nmfalpha/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nmfa::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> tokens_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t p = 0;
  while (p < line.size()) {
    while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
    const std::size_t start = p;
    while (p < line.size() && line[p] != ' ' && line[p] != '\t') ++p;
    if (p > start) out.push_back(line.substr(start, p - start));
  }
  return out;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

std::vector<int> parse_label_field(std::string_view field, const std::string& at) {
  std::vector<int> ids;
  for (const std::string& part : split_list(field)) {
    std::string_view text = part;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    int value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
      throw ParseError(at + "bad label '" + std::string(field) + "'");
    }
    ids.push_back(value);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ParseError(at + "repeated label in '" + std::string(field) + "'");
  }
  return ids;
}

}  // namespace

// ---------------------------------------------------------------------------
// Helpers

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string format_shortest(double value) {
  char buffer[32];
  const auto res = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ParseError("bad number '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

long long parse_integer(std::string_view text, std::string_view what) {
  text = trim(text);
  long long value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ParseError("bad integer '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

std::vector<std::string> split_list(std::string_view text, char separator) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t stop = text.find(separator, start);
    const std::string_view part =
        trim(text.substr(start, stop == std::string_view::npos ? std::string_view::npos : stop - start));
    if (!part.empty()) out.emplace_back(part);
    if (stop == std::string_view::npos) break;
    start = stop + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Datasets

SparseDataset parse_sparse_stream(std::istream& in, const std::string& source,
                                  std::size_t min_rows) {
  std::vector<std::vector<SparseEntry>> columns;
  SparseDataset out;
  std::size_t rows = min_rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = tokens_of(trim(view));
    if (tokens.empty()) continue;
    const std::string at = where(source, line_no);

    std::size_t first_feature = 0;
    std::vector<int> labels;
    if (tokens[0].find(':') == std::string_view::npos) {
      labels = parse_label_field(tokens[0], at);
      first_feature = 1;
    }
    std::vector<SparseEntry> column;
    std::size_t previous = 0;
    for (std::size_t t = first_feature; t < tokens.size(); ++t) {
      const std::string_view token = tokens[t];
      const std::size_t colon = token.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(at + "expected <index>:<value>, got '" + std::string(token) + "'");
      }
      const std::string_view index_text = token.substr(0, colon);
      std::size_t index = 0;
      const auto [end, ec] =
          std::from_chars(index_text.data(), index_text.data() + index_text.size(), index);
      if (ec != std::errc() || end != index_text.data() + index_text.size() || index == 0) {
        throw ParseError(at + "feature indices are positive integers, got '" +
                         std::string(index_text) + "'");
      }
      if (index <= previous) throw ParseError(at + "feature indices must strictly increase");
      previous = index;
      const double value = parse_double(token.substr(colon + 1), at + "feature value");
      if (!std::isfinite(value)) throw DomainError(at + "feature value is not finite");
      if (value < 0.0) {
        throw DomainError(at + "negative feature value " + std::string(token.substr(colon + 1)) +
                          " at index " + std::to_string(index));
      }
      column.push_back({index - 1, value});
      rows = std::max(rows, index);
    }
    columns.push_back(std::move(column));
    out.label_ids.push_back(std::move(labels));
  }
  if (columns.empty()) throw ParseError(source + ": no examples");
  out.X = NonNegMatrix::from_columns_auto(rows, columns);
  return out;
}

SparseDataset parse_sparse_dataset(const std::string& path, std::size_t min_rows) {
  std::ifstream in = open_input(path);
  return parse_sparse_stream(in, path, min_rows);
}

SparseDataset parse_sparse_files(const std::vector<std::string>& paths,
                                 std::vector<std::size_t>* offsets) {
  if (paths.empty()) throw ParameterError("no dataset files given");
  std::vector<SparseDataset> parts;
  std::size_t rows = 0;
  for (const auto& path : paths) {
    parts.push_back(parse_sparse_dataset(path));
    rows = std::max(rows, parts.back().X.rows());
  }
  std::vector<std::vector<SparseEntry>> columns;
  SparseDataset out;
  if (offsets) offsets->clear();
  for (const auto& part : parts) {
    if (offsets) offsets->push_back(columns.size());
    for (std::size_t j = 0; j < part.X.cols(); ++j) {
      std::vector<SparseEntry> column;
      part.X.for_each_in_column(j, [&](std::size_t i, double v) { column.push_back({i, v}); });
      columns.push_back(std::move(column));
    }
    out.label_ids.insert(out.label_ids.end(), part.label_ids.begin(), part.label_ids.end());
  }
  out.X = NonNegMatrix::from_columns_auto(rows, columns);
  return out;
}

// ---------------------------------------------------------------------------
// Archives

void ModelArchive::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of(" \t=\n") != std::string::npos) {
    throw ParameterError("archive key '" + key + "' is not a single word");
  }
  if (value.find('\n') != std::string::npos) throw ParameterError("archive value spans lines");
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

std::optional<std::string> ModelArchive::get(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return std::nullopt;
}

std::string ModelArchive::require(const std::string& key) const {
  auto value = get(key);
  if (!value) throw ParseError("archive lacks '" + key + "'");
  return *value;
}

void ModelArchive::add_block(const std::string& name, Dense block) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw ParameterError("block name '" + name + "' is not a single word");
  }
  for (auto& [n, b] : blocks) {
    if (n == name) {
      b = std::move(block);
      return;
    }
  }
  blocks.emplace_back(name, std::move(block));
}

bool ModelArchive::has_block(const std::string& name) const {
  return std::any_of(blocks.begin(), blocks.end(), [&](const auto& b) { return b.first == name; });
}

const Dense& ModelArchive::block(const std::string& name) const {
  for (const auto& [n, b] : blocks)
    if (n == name) return b;
  throw ParseError("archive lacks block '" + name + "'");
}

bool is_factorization_kind(std::string_view kind) {
  return kind == "nmf" || kind == "nmf_alpha" || kind == "ssnmf" || kind == "cnmf";
}

namespace {

bool factor_block(std::string_view name) {
  return name == "V" || name == "H" || name == "U" || name == "Q" || name == "H_unlabeled";
}

std::string crc_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  char buffer[16];
  std::snprintf(buffer, sizeof buffer, "%08lx", static_cast<unsigned long>(crc));
  return buffer;
}

}  // namespace

std::string serialize(const ModelArchive& archive) {
  std::string out = "NMFALPHA v" + std::to_string(archive.format_version) + " " + archive.kind + "\n";
  for (const auto& [k, v] : archive.meta) out += k + " = " + v + "\n";
  for (const auto& [name, b] : archive.blocks) {
    out += "block " + name + " " + std::to_string(b.rows()) + " " + std::to_string(b.cols()) + "\n";
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (j > 0) out += ' ';
        out += format_double(b(i, j));
      }
      out += '\n';
    }
  }
  out += "CRC32 " + crc_hex(out) + "\n";
  return out;
}

ModelArchive deserialize(std::string_view text) {
  const std::size_t header_end = text.find('\n');
  const auto header = tokens_of(trim(text.substr(0, header_end)));
  if (header.size() != 3 || header[0] != "NMFALPHA" || header[1].size() < 2 || header[1][0] != 'v') {
    throw ParseError("not a model archive");
  }
  ModelArchive archive;
  archive.format_version = static_cast<int>(parse_integer(header[1].substr(1), "archive version"));
  if (archive.format_version != kArchiveVersion) {
    throw VersionError("archive format v" + std::to_string(archive.format_version) +
                       ", this build reads v" + std::to_string(kArchiveVersion));
  }
  archive.kind = std::string(header[2]);

  // The checksum line is the last line; anything after it (or its absence)
  // means the payload is incomplete or altered.
  std::string_view body = text;
  if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  const std::size_t last_break = body.rfind('\n');
  if (last_break == std::string_view::npos) throw ChecksumError("archive has no checksum line");
  const auto crc_tokens = tokens_of(trim(body.substr(last_break + 1)));
  if (crc_tokens.size() != 2 || crc_tokens[0] != "CRC32") {
    throw ChecksumError("archive has no checksum line (truncated?)");
  }
  const std::string_view payload = text.substr(0, last_break + 1);
  if (crc_hex(payload) != crc_tokens[1]) throw ChecksumError("archive checksum mismatch");

  std::istringstream in{std::string(payload.substr(header_end + 1))};
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.substr(0, 6) == "block ") {
      const auto t = tokens_of(view);
      if (t.size() != 4) throw ParseError("bad block header '" + std::string(view) + "'");
      const std::string name(t[1]);
      const auto rows = static_cast<std::size_t>(parse_integer(t[2], "block rows"));
      const auto cols = static_cast<std::size_t>(parse_integer(t[3], "block cols"));
      // `t` views into `line`, which the row reads below overwrite.
      Dense b(rows, cols);
      for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw ParseError("block '" + name + "' is short");
        const auto values = tokens_of(trim(line));
        if (values.size() != cols) {
          throw ParseError("block '" + name + "' row " + std::to_string(i) + " has " +
                           std::to_string(values.size()) + " values, expected " +
                           std::to_string(cols));
        }
        for (std::size_t j = 0; j < cols; ++j) b(i, j) = parse_double(values[j], "block entry");
      }
      if (is_factorization_kind(archive.kind) && factor_block(name) && !all_nonnegative(b)) {
        throw DomainError("block '" + name + "' of a " + archive.kind +
                          " archive has a negative entry");
      }
      archive.blocks.emplace_back(name, std::move(b));
      continue;
    }
    const std::size_t eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("bad archive line '" + std::string(view) + "'");
    archive.meta.emplace_back(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
  }
  return archive;
}

void save_model(const std::string& path, const ModelArchive& archive) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write '" + path + "'");
  const std::string text = serialize(archive);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ParseError("write to '" + path + "' failed");
}

ModelArchive load_model(const std::string& path) {
  std::ifstream in = open_input(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

// ---------------------------------------------------------------------------
// Config

std::map<std::string, std::string> parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const std::size_t eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(where(source, line_no) + "expected key = value");
    const std::string key(trim(view.substr(0, eq)));
    if (key.empty()) throw ParseError(where(source, line_no) + "empty key");
    if (!out.emplace(key, std::string(trim(view.substr(eq + 1)))).second) {
      throw ParseError(where(source, line_no) + "duplicate key '" + key + "'");
    }
  }
  return out;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_config(in, path);
}

}  // namespace nmfa::io
