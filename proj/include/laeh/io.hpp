// Text file formats: the matrix format ("<rows> <cols>" header, one row
// per line), integer label lists, and key=value manifests. Doubles are
// written as shortest round-trip decimals so save/load is bit-exact.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "laeh/matrix.hpp"

namespace laeh {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, const std::string& path,
                           std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError(path + ":" + std::to_string(line_no) +
                  ": non-numeric token '" + tok + "'");
  if (!std::isfinite(v))
    throw IoError(path + ":" + std::to_string(line_no) +
                  ": non-finite value '" + tok + "'");
  return v;
}

inline long parse_long(const std::string& tok, const std::string& path,
                       std::size_t line_no) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError(path + ":" + std::to_string(line_no) +
                  ": non-integer token '" + tok + "'");
  return v;
}

}  // namespace detail

inline void save_matrix(const DenseMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << m.rows() << " " << m.cols() << "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << " ";
      out << detail::format_double(m(r, c));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

inline DenseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw IoError(path + ":1: missing '<rows> <cols>' header");
  std::istringstream hdr(line);
  std::string rtok, ctok, extra;
  if (!(hdr >> rtok >> ctok) || (hdr >> extra))
    throw IoError(path + ":1: malformed header '" + line + "'");
  const long rows = detail::parse_long(rtok, path, 1);
  const long cols = detail::parse_long(ctok, path, 1);
  if (rows < 0 || cols < 0)
    throw IoError(path + ":1: negative dimension in header");

  DenseMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  const std::size_t expected = m.size();
  std::size_t count = 0;
  std::size_t line_no = 1;
  std::string tok;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    while (ls >> tok) {
      if (count >= expected)
        throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(expected) + " values, found more");
      m.data()[count++] = detail::parse_double(tok, path, line_no);
    }
  }
  if (count != expected)
    throw IoError(path + ": expected " + std::to_string(expected) +
                  " values, found " + std::to_string(count));
  return m;
}

inline void save_labels(const std::vector<int>& labels,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (int l : labels) out << l << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    labels.push_back(
        static_cast<int>(detail::parse_long(line, path, line_no)));
  }
  return labels;
}

/// Ordered key=value file. '#' lines are comments; keys must be unique.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    KeyValueFile kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw IoError(path + ":" + std::to_string(line_no) +
                      ": expected key=value, got '" + line + "'");
      kv.set(line.substr(0, eq), line.substr(eq + 1));
    }
    kv.path_ = path;
    return kv;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
    if (!out) throw IoError("write failed: " + path);
  }

  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return true;
    return false;
  }

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    throw IoError("missing key '" + key + "'" +
                  (path_.empty() ? "" : " in " + path_));
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  long get_long(const std::string& key) const {
    return detail::parse_long(get(key), path_.empty() ? key : path_, 0);
  }

  double get_double(const std::string& key) const {
    return detail::parse_double(get(key), path_.empty() ? key : path_, 0);
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string path_;
};

inline std::string dirname_of(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

inline std::string join_path(const std::string& dir, const std::string& leaf) {
  if (leaf.empty() || leaf.front() == '/') return leaf;
  return dir + "/" + leaf;
}

inline std::vector<std::size_t> parse_index_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::string tok;
  std::istringstream ss(csv);
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(static_cast<std::size_t>(
        detail::parse_long(tok, "index list", 0)));
  return out;
}

inline std::string format_index_list(const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(idx[i]);
  }
  return out;
}

}  // namespace laeh
