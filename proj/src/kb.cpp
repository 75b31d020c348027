#include "tell/kb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "tell/common.hpp"
#include "tell/text.hpp"

namespace tell {

using nlohmann::json;

KbStore::KbStore(std::vector<Entity> entities) : entities_(std::move(entities)) {
  std::sort(entities_.begin(), entities_.end(),
            [](const Entity& a, const Entity& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    const Entity& e = entities_[i];
    if (e.id.empty()) throw DataError("kb: entity with empty id");
    if (e.name.empty()) throw DataError("kb: entity " + e.id + " has empty name");
    if (!by_id_.emplace(e.id, i).second) {
      throw DataError("kb: duplicate entity id " + e.id);
    }
  }
}

KbStore KbStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("kb: cannot open " + path);
  std::vector<Entity> entities;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("kb: " + path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Entity entity;
    entity.id = j.value("id", "");
    entity.name = j.value("name", "");
    entity.description = j.value("description", "");
    if (j.contains("aliases")) {
      for (const auto& a : j.at("aliases")) {
        entity.aliases.push_back(a.get<std::string>());
      }
    }
    entities.push_back(std::move(entity));
  }
  return KbStore(std::move(entities));
}

const Entity* KbStore::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &entities_[it->second];
}

std::set<std::string> Gazetteer::lookup(const std::string& surface) const {
  const auto it = surface_to_ids.find(normalize_surface(surface));
  return it == surface_to_ids.end() ? std::set<std::string>{} : it->second;
}

Gazetteer build_gazetteer(const KbStore& kb) {
  Gazetteer gaz;
  for (const Entity& e : kb.entities()) {
    const std::string name_key = normalize_surface(e.name);
    if (!name_key.empty()) gaz.surface_to_ids[name_key].insert(e.id);
    for (const std::string& alias : e.aliases) {
      const std::string key = normalize_surface(alias);
      if (!key.empty()) gaz.surface_to_ids[key].insert(e.id);
    }
  }
  return gaz;
}

Bm25Index Bm25Index::build(const KbStore& kb, Bm25Params params) {
  Bm25Index index;
  index.params_ = params;
  index.doc_len_.reserve(kb.size());
  index.doc_ids_.reserve(kb.size());
  double total_len = 0.0;
  for (std::size_t doc = 0; doc < kb.size(); ++doc) {
    const Entity& e = kb.at(doc);
    std::unordered_map<std::string, double> tf;
    double len = 0.0;
    auto add_tokens = [&](const std::string& text) {
      for (std::string& t : tokenize(text)) {
        tf[std::move(t)] += 1.0;
        len += 1.0;
      }
    };
    add_tokens(e.name);
    for (const std::string& alias : e.aliases) add_tokens(alias);
    for (const auto& [term, freq] : tf) {
      index.postings_[term].push_back(Posting{static_cast<std::uint32_t>(doc), freq});
    }
    index.doc_len_.push_back(len);
    index.doc_ids_.push_back(e.id);
    total_len += len;
  }
  index.avg_doc_len_ = kb.empty() ? 0.0 : total_len / static_cast<double>(kb.size());
  // Postings come out sorted by doc because docs are visited in id order.
  return index;
}

double Bm25Index::idf(const std::string& term) const {
  const auto it = postings_.find(term);
  if (it == postings_.end()) return 0.0;
  const double df = static_cast<double>(it->second.size());
  const double d = static_cast<double>(doc_len_.size());
  return std::log(1.0 + (d - df + 0.5) / (df + 0.5));
}

std::vector<Bm25Hit> Bm25Index::search(const std::string& query, int k) const {
  if (k < 1) throw UsageError("bm25: k must be >= 1");
  std::unordered_map<std::uint32_t, double> scores;
  for (const std::string& term : tokenize(clean_text(query))) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double term_idf = idf(term);
    for (const Posting& p : it->second) {
      const double norm_len = avg_doc_len_ > 0.0 ? doc_len_[p.doc] / avg_doc_len_ : 1.0;
      const double denom = p.tf + params_.k1 * (1.0 - params_.b + params_.b * norm_len);
      scores[p.doc] += term_idf * p.tf * (params_.k1 + 1.0) / denom;
    }
  }
  std::vector<Bm25Hit> hits;
  hits.reserve(scores.size());
  for (const auto& [doc, score] : scores) {
    if (score > 0.0) hits.push_back(Bm25Hit{doc_ids_[doc], score});
  }
  std::sort(hits.begin(), hits.end(), [](const Bm25Hit& a, const Bm25Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
  return hits;
}

struct IndexSnapshotAccess {
  static json to_json(const Bm25Index& index) {
    json postings = json::object();
    for (const auto& [term, plist] : index.postings_) {
      json arr = json::array();
      for (const auto& p : plist) arr.push_back(json::array({p.doc, p.tf}));
      postings[term] = std::move(arr);
    }
    return json{{"postings", std::move(postings)},
                {"doc_len", index.doc_len_},
                {"doc_ids", index.doc_ids_},
                {"avg_doc_len", index.avg_doc_len_},
                {"k1", index.params_.k1},
                {"b", index.params_.b}};
  }

  static Bm25Index from_json(const json& j) {
    Bm25Index index;
    for (const auto& [term, arr] : j.at("postings").items()) {
      std::vector<Bm25Index::Posting> plist;
      for (const auto& p : arr) {
        plist.push_back(Bm25Index::Posting{p.at(0).get<std::uint32_t>(), p.at(1).get<double>()});
      }
      index.postings_[term] = std::move(plist);
    }
    index.doc_len_ = j.at("doc_len").get<std::vector<double>>();
    index.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
    index.avg_doc_len_ = j.at("avg_doc_len").get<double>();
    index.params_.k1 = j.at("k1").get<double>();
    index.params_.b = j.at("b").get<double>();
    return index;
  }
};

void save_index_snapshot(const std::string& path, const Gazetteer& gaz, const Bm25Index& index) {
  json gaz_json = json::object();
  for (const auto& [surface, ids] : gaz.surface_to_ids) {
    gaz_json[surface] = ids;
  }
  const json snapshot{{"format", "tell-kb-index"},
                      {"version", 1},
                      {"gazetteer", std::move(gaz_json)},
                      {"bm25", IndexSnapshotAccess::to_json(index)}};
  std::ofstream out(path);
  if (!out) throw DataError("index snapshot: cannot write " + path);
  out << snapshot.dump() << "\n";
}

void load_index_snapshot(const std::string& path, Gazetteer& gaz, Bm25Index& index) {
  std::ifstream in(path);
  if (!in) throw DataError("index snapshot: cannot open " + path);
  json snapshot;
  try {
    in >> snapshot;
  } catch (const json::exception& e) {
    throw DataError("index snapshot: " + path + ": " + std::string(e.what()));
  }
  if (snapshot.value("format", "") != "tell-kb-index" || snapshot.value("version", 0) != 1) {
    throw DataError("index snapshot: " + path + ": unsupported format/version");
  }
  gaz = Gazetteer{};
  for (const auto& [surface, ids] : snapshot.at("gazetteer").items()) {
    gaz.surface_to_ids[surface] = ids.get<std::set<std::string>>();
  }
  index = IndexSnapshotAccess::from_json(snapshot.at("bm25"));
}

}  // namespace tell
