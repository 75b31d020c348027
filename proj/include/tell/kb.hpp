#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tell {

/// Target-KB record. Only names and descriptions are assumed to exist;
/// alias mining (article titles, redirects, hyperlinks) happens upstream
/// and arrives through the aliases field.
struct Entity {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::string> aliases;
};

/// Entities sorted by id; doc index == rank in id order.
class KbStore {
 public:
  KbStore() = default;
  explicit KbStore(std::vector<Entity> entities);

  static KbStore load(const std::string& path);

  std::size_t size() const { return entities_.size(); }
  bool empty() const { return entities_.empty(); }
  const Entity& at(std::size_t doc) const { return entities_[doc]; }
  const std::vector<Entity>& entities() const { return entities_; }

  /// nullptr when absent.
  const Entity* find(const std::string& id) const;

 private:
  std::vector<Entity> entities_;           // sorted by id
  std::map<std::string, std::size_t> by_id_;
};

/// Normalized surface form -> entity ids. One form may name several entities.
struct Gazetteer {
  std::map<std::string, std::set<std::string>> surface_to_ids;

  std::set<std::string> lookup(const std::string& surface) const;
};

Gazetteer build_gazetteer(const KbStore& kb);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Bm25Hit {
  std::string id;
  double score = 0.0;
};

/// Okapi BM25 over the token bag of entity name + aliases.
/// idf(t) = ln(1 + (D - df + 0.5)/(df + 0.5)), non-negative for every term.
class Bm25Index {
 public:
  Bm25Index() = default;

  static Bm25Index build(const KbStore& kb, Bm25Params params = {});

  /// Top-k by score descending, ties by ascending entity id;
  /// zero-score documents excluded.
  std::vector<Bm25Hit> search(const std::string& query, int k) const;

  double idf(const std::string& term) const;
  double avg_doc_len() const { return avg_doc_len_; }
  std::size_t doc_count() const { return doc_len_.size(); }
  const Bm25Params& params() const { return params_; }

 private:
  friend struct IndexSnapshotAccess;

  struct Posting {
    std::uint32_t doc = 0;  // ascending == entity-id order
    double tf = 0.0;
  };

  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<double> doc_len_;
  std::vector<std::string> doc_ids_;
  double avg_doc_len_ = 0.0;
  Bm25Params params_;
};

/// Versioned JSON snapshot of both retrieval indexes.
void save_index_snapshot(const std::string& path, const Gazetteer& gaz, const Bm25Index& index);
void load_index_snapshot(const std::string& path, Gazetteer& gaz, Bm25Index& index);

}  // namespace tell
