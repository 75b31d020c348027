#include "tell/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tell/common.hpp"

namespace tell {

using nlohmann::json;

namespace {

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<json> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      lines.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lines;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

CellRef parse_cell_ref(const std::string& key) {
  const std::size_t comma = key.find(',');
  if (comma == std::string::npos) throw DataError("bad link key '" + key + "'");
  try {
    return CellRef{std::stoi(key.substr(0, comma)), std::stoi(key.substr(comma + 1))};
  } catch (const std::exception&) {
    throw DataError("bad link key '" + key + "'");
  }
}

std::string cell_ref_key(const CellRef& ref) {
  return std::to_string(ref.first) + "," + std::to_string(ref.second);
}

void parse_table_common(const json& j, std::string& id, std::string& page_title,
                        std::string& caption, std::vector<std::string>& headers,
                        std::vector<std::vector<std::string>>& cells) {
  id = j.value("id", "");
  page_title = j.value("page_title", "");
  caption = j.value("caption", "");
  if (j.contains("headers")) headers = j.at("headers").get<std::vector<std::string>>();
  if (j.contains("rows")) cells = j.at("rows").get<std::vector<std::vector<std::string>>>();
}

}  // namespace

std::vector<RawTable> read_raw_tables(const std::string& path) {
  std::vector<RawTable> tables;
  for (const json& j : read_jsonl(path)) {
    RawTable t;
    parse_table_common(j, t.id, t.page_title, t.caption, t.headers, t.cells);
    if (j.contains("links")) {
      for (const auto& [key, value] : j.at("links").items()) {
        const CellRef ref = parse_cell_ref(key);
        std::vector<std::string> ids;
        if (value.is_string()) {
          ids.push_back(value.get<std::string>());
        } else if (value.is_array()) {
          for (const auto& v : value) ids.push_back(v.get<std::string>());
        } else if (!value.is_null()) {
          throw DataError("table " + t.id + ": link value for " + key +
                          " must be string, array or null");
        }
        if (!ids.empty()) t.links[ref] = std::move(ids);
      }
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

std::vector<Table> read_tables(const std::string& path) {
  std::vector<Table> tables;
  for (const json& j : read_jsonl(path)) {
    Table t;
    parse_table_common(j, t.id, t.page_title, t.caption, t.headers, t.cells);
    if (j.contains("links")) {
      for (const auto& [key, value] : j.at("links").items()) {
        if (value.is_null()) continue;
        t.gold_links[parse_cell_ref(key)] = value.get<std::string>();
      }
    }
    t.validate();
    tables.push_back(std::move(t));
  }
  return tables;
}

void write_tables(const std::string& path, const std::vector<Table>& tables) {
  auto out = open_out(path);
  for (const Table& t : tables) {
    json links = json::object();
    for (const auto& [ref, entity] : t.gold_links) links[cell_ref_key(ref)] = entity;
    const json j{{"id", t.id},           {"page_title", t.page_title}, {"caption", t.caption},
                 {"headers", t.headers}, {"rows", t.cells},            {"links", std::move(links)}};
    out << j.dump() << "\n";
  }
}

void write_kb(const std::string& path, const std::vector<Entity>& entities) {
  auto out = open_out(path);
  for (const Entity& e : entities) {
    const json j{{"id", e.id},
                 {"name", e.name},
                 {"description", e.description},
                 {"aliases", e.aliases}};
    out << j.dump() << "\n";
  }
}

void write_candidates(const std::string& path, const CandidateMap& candidates) {
  auto out = open_out(path);
  for (const auto& [key, set] : candidates) {
    json arr = json::array();
    for (const Candidate& c : set.candidates) {
      json entry{{"id", c.id}, {"source", to_string(c.source)}};
      entry["score"] = c.score ? json(*c.score) : json(nullptr);
      arr.push_back(std::move(entry));
    }
    const json j{{"table_id", set.table_id},
                 {"row", set.row},
                 {"col", set.col},
                 {"candidates", std::move(arr)}};
    out << j.dump() << "\n";
  }
}

CandidateMap read_candidates(const std::string& path) {
  CandidateMap out;
  for (const json& j : read_jsonl(path)) {
    CandidateSet set;
    set.table_id = j.at("table_id").get<std::string>();
    set.row = j.at("row").get<int>();
    set.col = j.at("col").get<int>();
    for (const auto& entry : j.at("candidates")) {
      Candidate c;
      c.id = entry.at("id").get<std::string>();
      c.source = candidate_source_from_string(entry.at("source").get<std::string>());
      if (entry.contains("score") && !entry.at("score").is_null()) {
        c.score = entry.at("score").get<double>();
      }
      set.candidates.push_back(std::move(c));
    }
    out.emplace(mention_key(set), std::move(set));
  }
  return out;
}

void write_predictions(const std::string& path, const std::vector<Prediction>& predictions) {
  auto out = open_out(path);
  for (const Prediction& p : predictions) {
    const json j{{"table_id", p.table_id},
                 {"row", p.row},
                 {"col", p.col},
                 {"entity_id", p.entity ? json(*p.entity) : json(nullptr)},
                 {"prob", p.prob}};
    out << j.dump() << "\n";
  }
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::vector<Prediction> out;
  for (const json& j : read_jsonl(path)) {
    Prediction p;
    p.table_id = j.at("table_id").get<std::string>();
    p.row = j.at("row").get<int>();
    p.col = j.at("col").get<int>();
    if (j.contains("entity_id") && !j.at("entity_id").is_null()) {
      p.entity = j.at("entity_id").get<std::string>();
    }
    p.prob = j.at("prob").get<double>();
    out.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, std::string> load_id_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::map<std::string, std::string> mapping;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected two tab-separated columns");
    }
    mapping[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return mapping;
}

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

}  // namespace tell
