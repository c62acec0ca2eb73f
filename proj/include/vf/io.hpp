#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vf/model.hpp"

namespace vf {

inline PoolMode pool_mode_from_string(const std::string& s) {
  if (s == "max") return PoolMode::Max;
  if (s == "mean") return PoolMode::Mean;
  throw ValidationError("unknown pooling mode '" + s + "'");
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "lrelu") return Activation::LeakyRelu;
  if (s == "relu") return Activation::Relu;
  throw ValidationError("unknown activation '" + s + "'");
}

namespace detail {

inline std::string fmt(double v, int sig_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", sig_digits, v);
  return buf;
}

// Reads a whole text file into lines (LF or CRLF tolerated on input).
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// All writers go through here: write to a sibling temp file, then rename,
// so a crash mid-write never leaves a truncated file at the target path.
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp + ": cannot open for writing");
    out << content;
    if (!out) throw IoError(tmp + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path + ": rename failed: " + ec.message());
}

struct LineParser {
  const std::string& path;
  const std::vector<std::string>& lines;
  std::size_t next = 0;

  [[noreturn]] void fail(std::size_t line_no, const std::string& what) const {
    throw IoError(path + ":" + std::to_string(line_no) + ": " + what);
  }

  const std::string& take(const std::string& what) {
    if (next >= lines.size())
      fail(lines.size() + 1, "unexpected end of file, expected " + what);
    return lines[next++];
  }

  long long take_int(const std::string& what, long long min_value) {
    const std::string& s = take(what);
    const std::size_t no = next;  // 1-based line number of the token just read
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0')
      fail(no, "expected " + what + ", got '" + s + "'");
    if (v < min_value)
      fail(no, what + " must be >= " + std::to_string(min_value));
    return v;
  }

  // Parses exactly `count` doubles from one space-separated line.
  std::vector<double> take_doubles(const std::string& what,
                                   std::size_t count) {
    const std::string& s = take(what);
    const std::size_t no = next;
    std::vector<double> out;
    out.reserve(count);
    const char* p = s.c_str();
    while (*p != '\0') {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      if (end == p || errno == ERANGE)
        fail(no, "non-numeric token in " + what);
      out.push_back(v);
      p = end;
      while (*p == ' ') ++p;
    }
    if (out.size() != count)
      fail(no, what + ": expected " + std::to_string(count) +
                   " values, got " + std::to_string(out.size()));
    return out;
  }

  void expect_end() const {
    for (std::size_t i = next; i < lines.size(); ++i)
      if (!lines[i].empty()) fail(i + 1, "trailing content");
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Fiber files: "FIB 1" / streamline count / per streamline point count and
// one "x y z" line per point at 9 significant digits.

inline void save_fib(const std::string& path, const Tractogram& t) {
  if (t.size() == 0) throw ValidationError("save_fib: empty tractogram");
  t.validate();
  std::string out = "FIB 1\n" + std::to_string(t.size()) + "\n";
  for (const auto& s : t.streamlines) {
    out += std::to_string(s.size());
    out += '\n';
    for (const auto& p : s.points) {
      out += detail::fmt(p.x, 9);
      out += ' ';
      out += detail::fmt(p.y, 9);
      out += ' ';
      out += detail::fmt(p.z, 9);
      out += '\n';
    }
  }
  detail::atomic_write(path, out);
}

inline Tractogram load_fib(const std::string& path) {
  const auto lines = detail::read_lines(path);
  detail::LineParser p{path, lines};
  if (p.take("header") != "FIB 1") p.fail(1, "bad header, expected 'FIB 1'");
  const long long count = p.take_int("streamline count", 1);
  Tractogram t;
  t.streamlines.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    const long long n = p.take_int("point count", 2);
    Streamline s;
    s.points.reserve(static_cast<std::size_t>(n));
    for (long long j = 0; j < n; ++j) {
      const auto v = p.take_doubles("point coordinates", 3);
      s.points.push_back({v[0], v[1], v[2]});
    }
    t.streamlines.push_back(std::move(s));
  }
  p.expect_end();
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------
// Label files: one token per line, "p" / "np" for plausibility labels or a
// non-negative integer class id. Loading maps p -> 1, np -> 0.

inline void save_labels(const std::string& path,
                        const std::vector<Label>& labels) {
  if (labels.empty()) throw ValidationError("save_labels: no labels");
  std::string out;
  for (Label l : labels) out += l == Label::Plausible ? "p\n" : "np\n";
  detail::atomic_write(path, out);
}

inline void save_class_ids(const std::string& path,
                           const std::vector<int>& ids) {
  if (ids.empty()) throw ValidationError("save_class_ids: no ids");
  std::string out;
  for (int id : ids) {
    if (id < 0) throw ValidationError("save_class_ids: negative class id");
    out += std::to_string(id);
    out += '\n';
  }
  detail::atomic_write(path, out);
}

// expected_count = 0 skips the companion-size check.
inline std::vector<int> load_labels(const std::string& path,
                                    int expected_count = 0) {
  const auto lines = detail::read_lines(path);
  std::vector<int> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& s = lines[i];
    if (s.empty() && i + 1 == lines.size()) break;  // trailing newline
    if (s == "p") {
      out.push_back(1);
    } else if (s == "np") {
      out.push_back(0);
    } else {
      char* end = nullptr;
      errno = 0;
      const long long v = std::strtoll(s.c_str(), &end, 10);
      if (errno != 0 || end == s.c_str() || *end != '\0' || v < 0)
        throw IoError(path + ":" + std::to_string(i + 1) +
                      ": expected 'p', 'np' or a non-negative integer, got '" +
                      s + "'");
      out.push_back(static_cast<int>(v));
    }
  }
  if (out.empty()) throw IoError(path + ":1: no labels");
  if (expected_count > 0 && static_cast<int>(out.size()) != expected_count)
    throw IoError(path + ": label count " + std::to_string(out.size()) +
                  " does not match streamline count " +
                  std::to_string(expected_count));
  return out;
}

inline std::vector<Label> to_binary_labels(const std::vector<int>& values,
                                           const std::string& origin) {
  std::vector<Label> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0 && values[i] != 1)
      throw ValidationError(origin + ":" + std::to_string(i + 1) +
                            ": expected a binary p/np label, got class id " +
                            std::to_string(values[i]));
    out.push_back(values[i] == 1 ? Label::Plausible : Label::NonPlausible);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: "VFCKPT 1", metadata, then name/shape/values per parameter at
// 17 significant digits (doubles round-trip bitwise).

inline void save_ckpt(const std::string& path, Model& model) {
  const ModelSpec& sp = model.spec();
  auto params = model.params();
  std::string out = "VFCKPT 1\n";
  out += "arch " + to_string(sp.arch) + "\n";
  out += "widths " + std::to_string(sp.descriptor_width) + "\n";
  out += "k " + std::to_string(sp.k) + "\n";
  out += "seed " + std::to_string(sp.seed) + "\n";
  out += "activation " + to_string(sp.ec_activation) + "\n";
  out += "pooling " + to_string(sp.neighbor_pool) + "\n";
  out += "classes " + std::to_string(sp.classes) + "\n";
  out += "params " + std::to_string(params.size()) + "\n";
  for (const ParameterBlock* p : params) {
    out += p->name + "\n";
    out += std::to_string(p->value.rows) + " " +
           std::to_string(p->value.cols) + "\n";
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      if (i > 0) out += ' ';
      out += detail::fmt(p->value.data[i], 17);
    }
    out += '\n';
  }
  detail::atomic_write(path, out);
}

inline Model load_ckpt(const std::string& path) {
  const auto lines = detail::read_lines(path);
  detail::LineParser p{path, lines};
  if (p.take("header") != "VFCKPT 1")
    p.fail(1, "bad header, expected 'VFCKPT 1'");
  auto take_field = [&](const std::string& key) {
    const std::string& s = p.take("metadata line '" + key + " ...'");
    const std::string prefix = key + " ";
    if (s.rfind(prefix, 0) != 0)
      p.fail(p.next, "expected metadata line '" + key + " ...', got '" + s +
                         "'");
    return s.substr(prefix.size());
  };
  ModelSpec sp;
  try {
    sp.arch = arch_from_string(take_field("arch"));
    sp.descriptor_width = std::stoi(take_field("widths"));
    sp.k = std::stoi(take_field("k"));
    sp.seed = std::stoull(take_field("seed"));
    sp.ec_activation = activation_from_string(take_field("activation"));
    sp.neighbor_pool = pool_mode_from_string(take_field("pooling"));
    sp.classes = std::stoi(take_field("classes"));
  } catch (const ValidationError& e) {
    throw IoError(path + ": " + e.what());
  } catch (const std::exception&) {
    throw IoError(path + ": malformed metadata value");
  }
  long long n_params = 0;
  try {
    n_params = std::stoll(take_field("params"));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception&) {
    throw IoError(path + ": malformed parameter count");
  }

  Model model(sp);
  auto params = model.params();
  if (static_cast<long long>(params.size()) != n_params)
    p.fail(p.next, "parameter count " + std::to_string(n_params) +
                       " does not match architecture (" +
                       std::to_string(params.size()) + " blocks)");
  for (ParameterBlock* blk : params) {
    const std::string& name = p.take("parameter name");
    if (name != blk->name)
      p.fail(p.next, "expected parameter '" + blk->name + "', got '" + name +
                         "'");
    const auto shape = p.take_doubles("shape of '" + blk->name + "'", 2);
    if (shape[0] != blk->value.rows || shape[1] != blk->value.cols)
      p.fail(p.next, "shape mismatch for '" + blk->name + "'");
    blk->value.data = p.take_doubles("values of '" + blk->name + "'",
                                     blk->value.size());
  }
  p.expect_end();
  return model;
}

// ---------------------------------------------------------------------------
// CSV reports: header row + data rows, LF endings.

inline void save_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  if (header.empty()) throw ValidationError("save_csv: empty header");
  auto join = [](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) line += ',';
      line += cells[i];
    }
    return line;
  };
  std::string out = join(header) + "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ValidationError("save_csv: row width does not match header");
    out += join(row) + "\n";
  }
  detail::atomic_write(path, out);
}

}  // namespace vf
