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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "labelrand/io.hpp"

namespace fs = std::filesystem;
using namespace labelrand;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("labelrand_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_file(const TempDir& dir, const std::string& name,
                    const std::string& content) {
  fs::path p = dir.path / name;
  std::ofstream out(p);
  out << content;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

}  // namespace

TEST_CASE("labels csv round trip with optional header") {
  TempDir dir;
  fs::path with_header = write_file(dir, "a.csv", "id,label\nx1,0\nx2,3\n");
  io::LabelsFile a = io::read_labels_csv(with_header);
  REQUIRE(a.ids.size() == 2);
  CHECK(a.ids[0] == "x1");
  CHECK(a.labels[1] == 3);
  CHECK(a.lines[0] == 2);

  fs::path without = write_file(dir, "b.csv", "x1,0\nx2,3\n");
  io::LabelsFile b = io::read_labels_csv(without);
  CHECK(b.ids == a.ids);
  CHECK(b.labels == a.labels);
}

TEST_CASE("labels csv errors carry file and line") {
  TempDir dir;
  fs::path dup = write_file(dir, "dup.csv", "id,label\na,0\na,1\n");
  try {
    io::read_labels_csv(dup);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    std::string message = e.what();
    CHECK(message.find("dup.csv:3") != std::string::npos);
    CHECK(message.find("duplicate id") != std::string::npos);
  }

  fs::path bad = write_file(dir, "bad.csv", "a,zero\n");
  try {
    io::read_labels_csv(bad);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("bad.csv:1") != std::string::npos);
  }

  fs::path wide = write_file(dir, "wide.csv", "a,1,2\n");
  CHECK_THROWS_AS(io::read_labels_csv(wide), InputError);
  fs::path empty = write_file(dir, "empty.csv", "id,label\n");
  CHECK_THROWS_AS(io::read_labels_csv(empty), InputError);
  CHECK_THROWS_AS(io::read_labels_csv(dir.path / "missing.csv"), InputError);
}

TEST_CASE("features csv enforces a rectangular matrix") {
  TempDir dir;
  fs::path good = write_file(dir, "f.csv", "id,f0,f1\nA,1.5,-2\nB,0,3.25\n");
  FeatureMatrix m = io::read_features_csv(good);
  CHECK(m.dim() == 2);
  CHECK(m.rows[1][1] == 3.25);

  fs::path ragged = write_file(dir, "ragged.csv", "A,1,2\nB,1\n");
  try {
    io::read_features_csv(ragged);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("ragged.csv:2") != std::string::npos);
  }
}

TEST_CASE("priors csv requires at least two probability columns") {
  TempDir dir;
  fs::path good = write_file(dir, "p.csv", "id,p0,p1,p2\nA,0.5,0.3,0.2\n");
  io::PriorsFile p = io::read_priors_csv(good);
  CHECK(p.num_classes() == 3);
  CHECK(p.rows[0][0] == 0.5);

  fs::path narrow = write_file(dir, "narrow.csv", "A,1.0\n");
  CHECK_THROWS_AS(io::read_priors_csv(narrow), InputError);
}

TEST_CASE("priors csv writer round-trips exactly") {
  TempDir dir;
  std::vector<std::string> ids{"a", "b"};
  std::vector<Prior> priors{Prior({0.5, 0.25, 0.25}),
                            Prior({1.0 / 3, 1.0 / 3, 1.0 / 3})};
  fs::path out = dir.path / "out.csv";
  io::write_priors_csv(out, ids, priors);
  io::PriorsFile back = io::read_priors_csv(out);
  REQUIRE(back.ids == ids);
  for (size_t i = 0; i < priors.size(); ++i) {
    CHECK(back.rows[i] == priors[i].probs());
  }
}

TEST_CASE("randomized csv writer emits the optional k_star column") {
  TempDir dir;
  std::vector<io::RandomizedRow> rows{{"a", 2, 3}, {"b", 0, 1}};
  fs::path with = dir.path / "with.csv";
  io::write_randomized_csv(with, rows, true);
  CHECK(slurp(with) == "id,label,k_star\na,2,3\nb,0,1\n");

  fs::path without = dir.path / "without.csv";
  io::write_randomized_csv(without, rows, false);
  CHECK(slurp(without) == "id,label\na,2\nb,0\n");
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -0.0625}) {
    CHECK(std::stod(io::format_double(v)) == v);
  }
}

TEST_CASE("file digest distinguishes contents") {
  TempDir dir;
  fs::path a = write_file(dir, "a.txt", "hello");
  fs::path b = write_file(dir, "b.txt", "hello");
  fs::path c = write_file(dir, "c.txt", "hellp");
  CHECK(io::file_digest(a) == io::file_digest(b));
  CHECK(io::file_digest(a) != io::file_digest(c));
}

TEST_CASE("atomic writer leaves no temp file behind") {
  TempDir dir;
  fs::path target = dir.path / "atomic.txt";
  io::write_text_atomic(target, "payload");
  CHECK(slurp(target) == "payload");
  CHECK(!fs::exists(dir.path / "atomic.txt.tmp"));
}
