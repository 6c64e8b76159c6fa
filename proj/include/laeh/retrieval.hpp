// Hamming-space retrieval: bit-packed codes, popcount distances,
// deterministic ranking, average precision, and the cross-modal MAP
// evaluation over all/seen/unseen query partitions.
#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "laeh/dataset.hpp"
#include "laeh/io.hpp"
#include "laeh/matrix.hpp"
#include "laeh/model.hpp"
#include "laeh/split.hpp"

namespace laeh {

/// Binary codes packed 64 per word (+1 -> bit set, -1 -> bit clear), one
/// row of words per instance.
class CodeSet {
 public:
  CodeSet() = default;

  /// Packs a {-1,+1} code matrix (c x n, one instance per column).
  CodeSet(const DenseMatrix& codes, std::vector<int> labels,
          std::string modality)
      : bits_(codes.rows()),
        words_per_code_((codes.rows() + 63) / 64),
        labels_(std::move(labels)),
        modality_(std::move(modality)) {
    if (labels_.size() != codes.cols())
      throw std::invalid_argument("CodeSet: label count " +
                                  std::to_string(labels_.size()) +
                                  " != instance count " +
                                  std::to_string(codes.cols()));
    words_.assign(codes.cols() * words_per_code_, 0);
    for (std::size_t j = 0; j < codes.cols(); ++j)
      for (std::size_t r = 0; r < codes.rows(); ++r)
        if (codes(r, j) > 0.0)
          words_[j * words_per_code_ + r / 64] |= std::uint64_t{1} << (r % 64);
  }

  std::size_t bits() const { return bits_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<int>& labels() const { return labels_; }
  const std::string& modality() const { return modality_; }

  const std::uint64_t* code(std::size_t i) const {
    return words_.data() + i * words_per_code_;
  }

  /// Inverse of packing: back to a {-1,+1} matrix, bit-exact.
  DenseMatrix unpack() const {
    DenseMatrix out(bits_, size());
    for (std::size_t j = 0; j < size(); ++j)
      for (std::size_t r = 0; r < bits_; ++r)
        out(r, j) = (code(j)[r / 64] >> (r % 64)) & 1 ? 1.0 : -1.0;
    return out;
  }

  std::size_t hamming(std::size_t i, const CodeSet& other,
                      std::size_t j) const {
    if (bits_ != other.bits_)
      throw std::invalid_argument("hamming: code width mismatch " +
                                  std::to_string(bits_) + " vs " +
                                  std::to_string(other.bits_));
    std::size_t dist = 0;
    const std::uint64_t* a = code(i);
    const std::uint64_t* b = other.code(j);
    for (std::size_t w = 0; w < words_per_code_; ++w)
      dist += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
    return dist;
  }

 private:
  std::size_t bits_ = 0;
  std::size_t words_per_code_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<int> labels_;
  std::string modality_;
};

/// Database indices per query, ascending Hamming distance, ties broken by
/// ascending database index (bucketed counting sort, so both orders are
/// structural rather than sort-dependent).
inline std::vector<std::vector<std::size_t>> rank_queries(
    const CodeSet& queries, const CodeSet& database) {
  if (database.size() == 0)
    throw std::invalid_argument("rank_queries: empty database");
  std::vector<std::vector<std::size_t>> ranked(queries.size());
  std::vector<std::vector<std::size_t>> buckets(queries.bits() + 1);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (auto& b : buckets) b.clear();
    for (std::size_t i = 0; i < database.size(); ++i)
      buckets[queries.hamming(q, database, i)].push_back(i);
    ranked[q].reserve(database.size());
    for (const auto& b : buckets)
      ranked[q].insert(ranked[q].end(), b.begin(), b.end());
  }
  return ranked;
}

/// AP = (1/m) sum over relevant ranks j of (j / position_of_jth_relevant).
/// m must equal the number of true flags.
inline double average_precision(const std::vector<bool>& relevance,
                                std::size_t m) {
  std::size_t seen = 0;
  double ap = 0.0;
  for (std::size_t pos = 0; pos < relevance.size(); ++pos) {
    if (relevance[pos]) {
      ++seen;
      ap += static_cast<double>(seen) / static_cast<double>(pos + 1);
    }
  }
  if (seen != m)
    throw std::invalid_argument("average_precision: m " + std::to_string(m) +
                                " != relevant count " + std::to_string(seen));
  if (m == 0)
    throw std::invalid_argument("average_precision: no relevant items");
  return ap / static_cast<double>(m);
}

struct RetrievalReport {
  std::string direction;  // "i2t" | "t2i"
  std::string partition;  // "all" | "seen" | "unseen"
  std::size_t code_bits = 0;
  double map = 0.0;
  std::vector<std::pair<std::size_t, double>> precision_at;  // (k, value)
  std::size_t n_queries = 0;   // queries with >= 1 relevant item
  std::size_t n_skipped = 0;   // queries excluded (no relevant items)
};

inline const std::vector<std::size_t>& default_precision_ks() {
  static const std::vector<std::size_t> ks = {1, 10, 50, 100};
  return ks;
}

/// MAP and precision@k of one query set against one database; relevance is
/// label equality. Queries without relevant items are excluded from the
/// means and counted in n_skipped.
inline RetrievalReport score_ranking(const CodeSet& queries,
                                     const CodeSet& database,
                                     const std::string& direction,
                                     const std::string& partition) {
  RetrievalReport report;
  report.direction = direction;
  report.partition = partition;
  report.code_bits = queries.bits();

  const auto ranked = rank_queries(queries, database);
  double map_sum = 0.0;
  std::vector<double> prec_sum(default_precision_ks().size(), 0.0);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const int label = queries.labels()[q];
    std::vector<bool> relevance(ranked[q].size());
    std::size_t m = 0;
    for (std::size_t pos = 0; pos < ranked[q].size(); ++pos) {
      relevance[pos] = database.labels()[ranked[q][pos]] == label;
      if (relevance[pos]) ++m;
    }
    if (m == 0) {
      ++report.n_skipped;
      continue;
    }
    map_sum += average_precision(relevance, m);
    ++report.n_queries;
    for (std::size_t ki = 0; ki < default_precision_ks().size(); ++ki) {
      const std::size_t k =
          std::min(default_precision_ks()[ki], relevance.size());
      std::size_t hits = 0;
      for (std::size_t pos = 0; pos < k; ++pos)
        if (relevance[pos]) ++hits;
      prec_sum[ki] += static_cast<double>(hits) / static_cast<double>(k);
    }
  }
  if (report.n_queries > 0) {
    report.map = map_sum / static_cast<double>(report.n_queries);
    for (std::size_t ki = 0; ki < default_precision_ks().size(); ++ki)
      report.precision_at.emplace_back(
          default_precision_ks()[ki],
          prec_sum[ki] / static_cast<double>(report.n_queries));
  } else {
    for (std::size_t k : default_precision_ks())
      report.precision_at.emplace_back(k, 0.0);
  }
  return report;
}

/// Full cross-modal evaluation: encodes the query modality and the
/// opposite database modality with their hash functions, then scores each
/// requested direction x partition pair.
inline std::vector<RetrievalReport> evaluate(
    const LaehModel& model, const PairedDataset& dataset,
    const ZeroShotSplit& split,
    const std::vector<std::string>& directions = {"i2t", "t2i"},
    const std::vector<std::string>& partitions = {"all", "seen", "unseen"}) {
  const std::vector<int> db_labels = dataset.labels_for(split.retrieval_idx);
  const CodeSet db_image(
      encode(model, dataset.x1.gather_cols(split.retrieval_idx), 1),
      db_labels, "image");
  const CodeSet db_text(
      encode(model, dataset.x2.gather_cols(split.retrieval_idx), 2),
      db_labels, "text");

  std::vector<RetrievalReport> reports;
  for (const std::string& direction : directions) {
    if (direction != "i2t" && direction != "t2i")
      throw std::invalid_argument("evaluate: unknown direction '" + direction +
                                  "'");
    for (const std::string& partition : partitions) {
      const std::vector<std::size_t> q_idx =
          split.query_partition(dataset.labels, partition);
      const std::vector<int> q_labels = dataset.labels_for(q_idx);
      RetrievalReport report;
      if (direction == "i2t") {
        const CodeSet queries(encode(model, dataset.x1.gather_cols(q_idx), 1),
                              q_labels, "image");
        report = score_ranking(queries, db_text, direction, partition);
      } else {
        const CodeSet queries(encode(model, dataset.x2.gather_cols(q_idx), 2),
                              q_labels, "text");
        report = score_ranking(queries, db_image, direction, partition);
      }
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

/// CSV lines: direction, partition, code_bits, map, p@1, p@10, p@50,
/// p@100, n_queries.
inline std::string reports_to_csv(const std::vector<RetrievalReport>& reports) {
  std::string out = "direction,partition,code_bits,map,p@1,p@10,p@50,p@100,n_queries\n";
  for (const RetrievalReport& r : reports) {
    out += r.direction + "," + r.partition + "," +
           std::to_string(r.code_bits) + "," + detail::format_double(r.map);
    for (const auto& [k, p] : r.precision_at)
      out += "," + detail::format_double(p);
    out += "," + std::to_string(r.n_queries) + "\n";
  }
  return out;
}

}  // namespace laeh
