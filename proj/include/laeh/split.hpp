// Zero-shot class split: a disjoint seen/unseen class partition plus
// train/query/retrieval instance pools. Queries are sampled per class from
// every class; seen-class remainders train, unseen-class remainders only
// populate the retrieval pool.
#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "laeh/dataset.hpp"
#include "laeh/io.hpp"
#include "laeh/matrix.hpp"

namespace laeh {

struct ZeroShotSplit {
  std::set<int> seen_classes;
  std::set<int> unseen_classes;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> retrieval_idx;
  std::vector<std::size_t> query_idx;

  bool is_unseen(int label) const { return unseen_classes.count(label) != 0; }

  /// Query subset for one of the three evaluation partitions.
  std::vector<std::size_t> query_partition(const std::vector<int>& labels,
                                           const std::string& partition) const {
    std::vector<std::size_t> out;
    for (std::size_t q : query_idx) {
      const bool unseen = is_unseen(labels[q]);
      if (partition == "all" || (partition == "unseen" && unseen) ||
          (partition == "seen" && !unseen))
        out.push_back(q);
    }
    if (partition != "all" && partition != "seen" && partition != "unseen")
      throw std::invalid_argument("unknown query partition '" + partition +
                                  "'");
    return out;
  }

  void validate(const std::vector<int>& labels) const {
    for (int c : seen_classes)
      if (unseen_classes.count(c))
        throw std::invalid_argument("split: class " + std::to_string(c) +
                                    " is both seen and unseen");
    for (std::size_t i : train_idx)
      if (unseen_classes.count(labels[i]))
        throw std::invalid_argument(
            "split: train instance " + std::to_string(i) +
            " carries unseen class " + std::to_string(labels[i]));
    std::set<std::size_t> queries(query_idx.begin(), query_idx.end());
    for (std::size_t i : train_idx)
      if (queries.count(i))
        throw std::invalid_argument("split: instance " + std::to_string(i) +
                                    " is in both train and query pools");
  }
};

/// Draws n_unseen classes uniformly, samples query_per_class queries from
/// every class, trains on the seen-class remainder, and exposes
/// train + unseen remainders as the retrieval pool.
inline ZeroShotSplit make_split(const PairedDataset& ds, std::size_t n_unseen,
                                std::size_t query_per_class, SeededRng& rng) {
  const std::size_t k = ds.n_classes();
  if (n_unseen == 0)
    throw std::invalid_argument("make_split: n_unseen must be positive");
  if (n_unseen >= k)
    throw std::invalid_argument("make_split: n_unseen " +
                                std::to_string(n_unseen) +
                                " must be smaller than the class count " +
                                std::to_string(k));

  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < ds.n_instances(); ++i)
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  for (std::size_t c = 0; c < k; ++c)
    if (by_class[c].size() < query_per_class + 1)
      throw std::invalid_argument(
          "make_split: class " + std::to_string(c) + " has only " +
          std::to_string(by_class[c].size()) + " instances, needs at least " +
          std::to_string(query_per_class + 1));

  std::vector<int> class_ids(k);
  for (std::size_t c = 0; c < k; ++c) class_ids[c] = static_cast<int>(c);
  rng.shuffle(class_ids);

  ZeroShotSplit split;
  for (std::size_t c = 0; c < k; ++c) {
    if (c < n_unseen)
      split.unseen_classes.insert(class_ids[c]);
    else
      split.seen_classes.insert(class_ids[c]);
  }

  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> pool = by_class[c];
    rng.shuffle(pool);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i < query_per_class) {
        split.query_idx.push_back(pool[i]);
      } else if (split.unseen_classes.count(static_cast<int>(c))) {
        split.retrieval_idx.push_back(pool[i]);
      } else {
        split.train_idx.push_back(pool[i]);
        split.retrieval_idx.push_back(pool[i]);
      }
    }
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.retrieval_idx.begin(), split.retrieval_idx.end());
  std::sort(split.query_idx.begin(), split.query_idx.end());
  split.validate(ds.labels);
  return split;
}

inline void save_split(const ZeroShotSplit& split, const std::string& path) {
  KeyValueFile kv;
  std::string seen, unseen;
  for (int c : split.seen_classes) {
    if (!seen.empty()) seen += ",";
    seen += std::to_string(c);
  }
  for (int c : split.unseen_classes) {
    if (!unseen.empty()) unseen += ",";
    unseen += std::to_string(c);
  }
  kv.set("seen_classes", seen);
  kv.set("unseen_classes", unseen);
  kv.set("train_idx", format_index_list(split.train_idx));
  kv.set("retrieval_idx", format_index_list(split.retrieval_idx));
  kv.set("query_idx", format_index_list(split.query_idx));
  kv.save(path);
}

inline ZeroShotSplit load_split(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  ZeroShotSplit split;
  for (std::size_t c : parse_index_list(kv.get("seen_classes")))
    split.seen_classes.insert(static_cast<int>(c));
  for (std::size_t c : parse_index_list(kv.get("unseen_classes")))
    split.unseen_classes.insert(static_cast<int>(c));
  split.train_idx = parse_index_list(kv.get("train_idx"));
  split.retrieval_idx = parse_index_list(kv.get("retrieval_idx"));
  split.query_idx = parse_index_list(kv.get("query_idx"));
  return split;
}

}  // namespace laeh
