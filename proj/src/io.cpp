//
// Copyright 2026 The labelrand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "labelrand/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "labelrand/rng.hpp"

namespace labelrand::io {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, size_t line,
                       const std::string& message) {
  throw InputError(path.string() + ":" + std::to_string(line) + ": " + message);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  size_t start = 0;
  for (;;) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& cell : cells) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
      cell.pop_back();
    }
    size_t first = cell.find_first_not_of(' ');
    if (first != std::string::npos && first > 0) cell.erase(0, first);
  }
  return cells;
}

double parse_double(const std::filesystem::path& path, size_t line,
                    const std::string& cell) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    fail(path, line, "expected a real number, got '" + cell + "'");
  }
  return value;
}

int parse_int(const std::filesystem::path& path, size_t line,
              const std::string& cell) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    fail(path, line, "expected an integer, got '" + cell + "'");
  }
  return value;
}

// Calls row_fn(line_number, cells) for every data row, skipping an optional
// header whose first cell is literally "id".
template <typename RowFn>
void for_each_row(const std::filesystem::path& path, RowFn row_fn) {
  std::ifstream in(path);
  if (!in) {
    throw InputError(path.string() + ": cannot open file");
  }
  std::string line;
  size_t line_number = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_csv(line);
    if (first) {
      first = false;
      if (!cells.empty() && cells.front() == "id") continue;
    }
    if (cells.empty() || cells.front().empty()) {
      fail(path, line_number, "missing id cell");
    }
    row_fn(line_number, cells);
  }
}

}  // namespace

LabelsFile read_labels_csv(const std::filesystem::path& path) {
  LabelsFile out;
  std::unordered_set<std::string> seen;
  for_each_row(path, [&](size_t line, const std::vector<std::string>& cells) {
    if (cells.size() != 2) {
      fail(path, line, "expected id,label with 2 cells, got " +
                           std::to_string(cells.size()));
    }
    if (!seen.insert(cells[0]).second) {
      fail(path, line, "duplicate id '" + cells[0] + "'");
    }
    out.ids.push_back(cells[0]);
    out.labels.push_back(parse_int(path, line, cells[1]));
    out.lines.push_back(line);
  });
  if (out.ids.empty()) {
    throw InputError(path.string() + ": no data rows");
  }
  return out;
}

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
  FeatureMatrix out;
  std::unordered_set<std::string> seen;
  for_each_row(path, [&](size_t line, const std::vector<std::string>& cells) {
    if (cells.size() < 2) {
      fail(path, line, "expected id followed by at least one feature column");
    }
    if (!out.rows.empty() && cells.size() - 1 != out.dim()) {
      fail(path, line, "row has " + std::to_string(cells.size() - 1) +
                           " features, expected " + std::to_string(out.dim()));
    }
    if (!seen.insert(cells[0]).second) {
      fail(path, line, "duplicate id '" + cells[0] + "'");
    }
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    for (size_t i = 1; i < cells.size(); ++i) {
      row.push_back(parse_double(path, line, cells[i]));
    }
    out.ids.push_back(cells[0]);
    out.rows.push_back(std::move(row));
  });
  if (out.ids.empty()) {
    throw InputError(path.string() + ": no data rows");
  }
  return out;
}

PriorsFile read_priors_csv(const std::filesystem::path& path) {
  PriorsFile out;
  std::unordered_set<std::string> seen;
  for_each_row(path, [&](size_t line, const std::vector<std::string>& cells) {
    if (cells.size() < 3) {
      fail(path, line, "expected id followed by at least 2 probability columns");
    }
    if (!out.rows.empty() && cells.size() - 1 != out.rows.front().size()) {
      fail(path, line, "row has " + std::to_string(cells.size() - 1) +
                           " probability columns, expected " +
                           std::to_string(out.rows.front().size()));
    }
    if (!seen.insert(cells[0]).second) {
      fail(path, line, "duplicate id '" + cells[0] + "'");
    }
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    for (size_t i = 1; i < cells.size(); ++i) {
      row.push_back(parse_double(path, line, cells[i]));
    }
    out.ids.push_back(cells[0]);
    out.rows.push_back(std::move(row));
    out.lines.push_back(line);
  });
  if (out.ids.empty()) {
    throw InputError(path.string() + ": no data rows");
  }
  return out;
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_priors_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& ids,
                      const std::vector<Prior>& priors) {
  if (ids.size() != priors.size()) {
    throw InputError("write_priors_csv: ids and priors misaligned");
  }
  std::ostringstream out;
  out << "id";
  const int num_classes = priors.empty() ? 0 : priors.front().num_classes();
  for (int k = 0; k < num_classes; ++k) out << ",p" << k;
  out << "\n";
  for (size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (double p : priors[i].probs()) out << ',' << format_double(p);
    out << "\n";
  }
  write_text_atomic(path, out.str());
}

void write_randomized_csv(const std::filesystem::path& path,
                          const std::vector<RandomizedRow>& rows,
                          bool with_k_star) {
  std::ostringstream out;
  out << (with_k_star ? "id,label,k_star\n" : "id,label\n");
  for (const auto& row : rows) {
    out << row.id << ',' << row.label;
    if (with_k_star) out << ',' << row.k_star;
    out << "\n";
  }
  write_text_atomic(path, out.str());
}

uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError(path.string() + ": cannot open file for digest");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64(buffer.str());
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw InputError(tmp.string() + ": cannot open file for writing");
    }
    out << content;
    if (!out.good()) {
      throw InputError(tmp.string() + ": write failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace labelrand::io
