#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "laeh/dataset.hpp"
#include "laeh/io.hpp"
#include "laeh/split.hpp"

using laeh::DenseMatrix;
using laeh::SeededRng;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("laeh_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& leaf) const {
    return (path / leaf).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("matrix text format parses the documented layout", "[data]") {
  TempDir dir;
  write_text(dir.file("id.mat"), "2 2\n1 0\n0 1\n");
  DenseMatrix m = laeh::load_matrix(dir.file("id.mat"));
  CHECK(m == DenseMatrix::identity(2));
}

TEST_CASE("matrix save/load round-trips bit-exactly", "[data]") {
  TempDir dir;
  SeededRng rng(3);
  DenseMatrix m = rng.gaussian_matrix(17, 9);
  m(0, 0) = 0.1;  // not exactly representable; shortest-round-trip must hold
  m(1, 1) = 1e-300;
  m(2, 2) = -12345678.987654321;
  laeh::save_matrix(m, dir.file("r.mat"));
  DenseMatrix back = laeh::load_matrix(dir.file("r.mat"));
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  for (std::size_t i = 0; i < m.size(); ++i)
    REQUIRE(back.data()[i] == m.data()[i]);

  // Saving the loaded copy reproduces the file byte-for-byte.
  laeh::save_matrix(back, dir.file("r2.mat"));
  CHECK(read_text(dir.file("r.mat")) == read_text(dir.file("r2.mat")));
}

TEST_CASE("matrix load reports malformed input with counts", "[data]") {
  TempDir dir;
  write_text(dir.file("short.mat"), "2 2\n1 0\n");
  CHECK_THROWS_WITH(laeh::load_matrix(dir.file("short.mat")),
                    Catch::Matchers::ContainsSubstring(
                        "expected 4 values, found 2"));

  write_text(dir.file("bad.mat"), "2 2\n1 0\n0 x\n");
  CHECK_THROWS_WITH(laeh::load_matrix(dir.file("bad.mat")),
                    Catch::Matchers::ContainsSubstring(":3") &&
                        Catch::Matchers::ContainsSubstring("'x'"));

  write_text(dir.file("hdr.mat"), "2\n1 0\n");
  CHECK_THROWS(laeh::load_matrix(dir.file("hdr.mat")));

  write_text(dir.file("extra.mat"), "1 1\n1 2\n");
  CHECK_THROWS_WITH(laeh::load_matrix(dir.file("extra.mat")),
                    Catch::Matchers::ContainsSubstring("found more"));
}

TEST_CASE("build_similarity analytic cases and double-loop oracle", "[data]") {
  auto sim = laeh::build_similarity({0, 0, 1});
  DenseMatrix want(3, 3);
  want(0, 0) = want(0, 1) = want(1, 0) = want(1, 1) = want(2, 2) = 1.0;
  CHECK(sim.s == want);

  auto all_same = laeh::build_similarity({4, 4, 4, 4});
  for (std::size_t i = 0; i < all_same.s.size(); ++i)
    CHECK(all_same.s.data()[i] == 1.0);

  auto all_diff = laeh::build_similarity({0, 1, 2});
  CHECK(all_diff.s == DenseMatrix::identity(3));

  CHECK_THROWS(laeh::build_similarity({}));

  SeededRng rng(5);
  std::vector<int> labels(12);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_index(4));
  auto got = laeh::build_similarity(labels);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j)
      CHECK(got.s(i, j) == (labels[i] == labels[j] ? 1.0 : 0.0));
}

TEST_CASE("synth_dataset shape, balance, and zero-noise determinism",
          "[data]") {
  SeededRng rng(8);
  auto ds = laeh::synth_dataset(12, 60, 10, 8, 6, 0.0, rng);
  CHECK(ds.n_instances() == 720);
  CHECK(ds.n_classes() == 12);
  CHECK(ds.x1.rows() == 10);
  CHECK(ds.x2.rows() == 8);
  CHECK(ds.semantic_vectors.rows() == 6);

  std::vector<int> counts(12, 0);
  for (int l : ds.labels) counts[static_cast<std::size_t>(l)]++;
  for (int c : counts) CHECK(c == 60);

  // Zero noise: all instances of one class share identical features.
  for (std::size_t i = 1; i < ds.n_instances(); ++i) {
    if (ds.labels[i] != ds.labels[0]) continue;
    for (std::size_t r = 0; r < ds.x1.rows(); ++r)
      CHECK(ds.x1(r, i) == ds.x1(r, 0));
    for (std::size_t r = 0; r < ds.x2.rows(); ++r)
      CHECK(ds.x2(r, i) == ds.x2(r, 0));
  }
}

TEST_CASE("synth_dataset class structure separates under mild noise",
          "[data]") {
  SeededRng rng(9);
  auto ds = laeh::synth_dataset(6, 30, 16, 12, 8, 0.1, rng);

  // No all-zero semantic column.
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    double norm = 0.0;
    for (std::size_t r = 0; r < ds.semantic_vectors.rows(); ++r)
      norm += std::abs(ds.semantic_vectors(r, c));
    CHECK(norm > 0.0);
  }

  // Within-class mean feature cosine above cross-class mean.
  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t i = 0; i < ds.n_instances(); i += 3)
    for (std::size_t j = i + 1; j < ds.n_instances(); j += 3) {
      const double c = laeh::cosine(ds.x1.col(i), ds.x1.col(j));
      if (ds.labels[i] == ds.labels[j]) {
        within += c;
        ++nw;
      } else {
        cross += c;
        ++nc;
      }
    }
  REQUIRE(nw > 0);
  REQUIRE(nc > 0);
  CHECK(within / nw > cross / nc);
}

TEST_CASE("dataset manifest save/load round trip", "[data]") {
  TempDir dir;
  SeededRng rng(10);
  auto ds = laeh::synth_dataset(4, 5, 6, 7, 3, 0.2, rng);
  ds.class_names = {"a", "b", "c", "d"};
  const std::string manifest = laeh::save_dataset(ds, dir.path.string());
  auto back = laeh::load_dataset(manifest);
  CHECK(back.x1 == ds.x1);
  CHECK(back.x2 == ds.x2);
  CHECK(back.labels == ds.labels);
  CHECK(back.semantic_vectors == ds.semantic_vectors);
  CHECK(back.class_names == ds.class_names);
}

TEST_CASE("make_split honors counts and seen/unseen disjointness", "[data]") {
  SeededRng data_rng(20);
  auto ds30 = laeh::synth_dataset(30, 8, 4, 4, 3, 0.1, data_rng);
  SeededRng rng(21);
  auto split = laeh::make_split(ds30, 10, 2, rng);
  CHECK(split.seen_classes.size() == 20);
  CHECK(split.unseen_classes.size() == 10);
  for (int c : split.seen_classes) CHECK(split.unseen_classes.count(c) == 0);

  // Every train instance is seen-class; train and query disjoint.
  std::set<std::size_t> queries(split.query_idx.begin(),
                                split.query_idx.end());
  for (std::size_t i : split.train_idx) {
    CHECK(split.unseen_classes.count(ds30.labels[i]) == 0);
    CHECK(queries.count(i) == 0);
  }

  // Retrieval pool = train + unseen-class non-query instances.
  CHECK(split.retrieval_idx.size() ==
        split.train_idx.size() + 10 * (8 - 2));

  SeededRng data_rng2(22);
  auto ds50 = laeh::synth_dataset(50, 4, 4, 4, 3, 0.1, data_rng2);
  SeededRng rng2(23);
  auto split50 = laeh::make_split(ds50, 10, 1, rng2);
  CHECK(split50.seen_classes.size() == 40);
}

TEST_CASE("make_split precondition errors", "[data]") {
  SeededRng data_rng(24);
  auto ds = laeh::synth_dataset(5, 4, 4, 4, 3, 0.1, data_rng);
  SeededRng rng(25);
  CHECK_THROWS(laeh::make_split(ds, 0, 1, rng));
  CHECK_THROWS(laeh::make_split(ds, 5, 1, rng));
  CHECK_THROWS(laeh::make_split(ds, 7, 1, rng));
  // per-class pool too small for query count: class named in message
  CHECK_THROWS_WITH(laeh::make_split(ds, 2, 4, rng),
                    Catch::Matchers::ContainsSubstring("class 0"));
}

TEST_CASE("make_split deterministic per seed, varying across seeds",
          "[data]") {
  SeededRng data_rng(26);
  auto ds = laeh::synth_dataset(30, 6, 4, 4, 3, 0.1, data_rng);

  SeededRng r1(31), r2(31);
  auto s1 = laeh::make_split(ds, 10, 2, r1);
  auto s2 = laeh::make_split(ds, 10, 2, r2);
  CHECK(s1.unseen_classes == s2.unseen_classes);
  CHECK(s1.train_idx == s2.train_idx);
  CHECK(s1.query_idx == s2.query_idx);

  std::set<std::set<int>> unseen_sets;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    SeededRng r(seed);
    unseen_sets.insert(laeh::make_split(ds, 10, 2, r).unseen_classes);
  }
  CHECK(unseen_sets.size() >= 11);  // collisions astronomically unlikely
}

TEST_CASE("split file round trip", "[data]") {
  TempDir dir;
  SeededRng data_rng(40);
  auto ds = laeh::synth_dataset(8, 5, 4, 4, 3, 0.1, data_rng);
  SeededRng rng(41);
  auto split = laeh::make_split(ds, 3, 1, rng);
  laeh::save_split(split, dir.file("split.txt"));
  auto back = laeh::load_split(dir.file("split.txt"));
  CHECK(back.seen_classes == split.seen_classes);
  CHECK(back.unseen_classes == split.unseen_classes);
  CHECK(back.train_idx == split.train_idx);
  CHECK(back.retrieval_idx == split.retrieval_idx);
  CHECK(back.query_idx == split.query_idx);
}

TEST_CASE("semantics_for gathers per-instance columns by label", "[data]") {
  SeededRng rng(50);
  auto ds = laeh::synth_dataset(3, 2, 4, 4, 5, 0.1, rng);
  DenseMatrix v = ds.semantics_for({0, 2, 4});
  CHECK(v.rows() == 5);
  CHECK(v.cols() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    const std::size_t cls = static_cast<std::size_t>(ds.labels[2 * j]);
    for (std::size_t r = 0; r < 5; ++r)
      CHECK(v(r, j) == ds.semantic_vectors(r, cls));
  }
}
