#include <algorithm>
#include <set>

#include "tell/common.hpp"
#include "tell/eval.hpp"

namespace tell {

namespace {

const std::vector<std::string> kSyllables = {"ba", "de", "ki", "lo", "mu", "na",
                                             "po", "ri", "su", "ta", "ve", "zo"};
const std::vector<std::string> kTopicWords = {"naval",   "cinema", "botany",  "sport",
                                              "music",   "astro",  "mineral", "pottery"};

std::string syll_word(const std::string& prefix, int i) {
  const int base = static_cast<int>(kSyllables.size());
  std::string w = prefix;
  w += kSyllables[static_cast<std::size_t>(i % base)];
  w += kSyllables[static_cast<std::size_t>((i / base) % base)];
  const int rest = i / (base * base);
  if (rest > 0) w += kSyllables[static_cast<std::size_t>((rest - 1) % base)];
  return w;
}

std::string num_id(const std::string& prefix, int i) {
  std::string digits = std::to_string(i);
  return prefix + std::string(4 - std::min<std::size_t>(4, digits.size()), '0') + digits;
}

struct Pools {
  int n_topics = 0;
  int n_unambig = 0;
  int n_pairs = 0;

  std::string unambig_id(int j) const { return num_id("e", j); }
  std::string first_token(int j) const { return syll_word("na", j); }
  std::string second_token(int j) const { return syll_word("ko", j); }
  std::string unambig_name(int j) const { return first_token(j) + " " + second_token(j); }
  std::string topic(int t) const { return kTopicWords[static_cast<std::size_t>(t)]; }

  std::string pair_surface(int p) const { return syll_word("am", p); }
  int pair_topic_a(int p) const { return p % n_topics; }
  int pair_topic_b(int p) const { return (p + 1) % n_topics; }
  std::string pair_id_a(int p) const { return num_id("pa", p); }
  std::string pair_id_b(int p) const { return num_id("pb", p); }
};

}  // namespace

SynthCorpus make_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.tables < 0 || spec.eval_tables < 0 || spec.rows <= 0 || spec.cols <= 0) {
    throw UsageError("synth: table counts and grid dimensions must be positive");
  }
  if (spec.ambiguous_frac + spec.misspelled_frac + spec.nil_frac > 1.0 + 1e-12) {
    throw UsageError("synth: category fractions exceed 1");
  }

  Pools pools;
  pools.n_topics = std::clamp(spec.topics, 2, static_cast<int>(kTopicWords.size()));
  pools.n_unambig = std::max(60, 3 * spec.rows * spec.cols);
  pools.n_pairs = 2 * pools.n_topics;
  if (pools.n_unambig > 1700) {
    throw UsageError("synth: grid too large for the word pool");
  }

  SynthCorpus corpus;
  for (int j = 0; j < pools.n_unambig; ++j) {
    Entity e;
    e.id = pools.unambig_id(j);
    e.name = pools.unambig_name(j);
    e.description = pools.topic(j % pools.n_topics) + " register entry";
    if (j % 5 == 0) e.aliases.push_back("the " + e.name);
    corpus.kb.push_back(std::move(e));
  }
  for (int p = 0; p < pools.n_pairs; ++p) {
    Entity a;
    a.id = pools.pair_id_a(p);
    a.name = pools.pair_surface(p);
    a.description = pools.topic(pools.pair_topic_a(p)) + " register entry";
    corpus.kb.push_back(std::move(a));
    Entity b;
    b.id = pools.pair_id_b(p);
    b.name = pools.pair_surface(p);
    b.description = pools.topic(pools.pair_topic_b(p)) + " register entry";
    corpus.kb.push_back(std::move(b));
  }

  Rng rng(seed);
  int junk_counter = 0;
  int nil_counter = 0;

  auto build_table = [&](int ti, const std::string& id) {
    Table t;
    t.id = id;
    t.caption = "catalog of records";
    t.page_title = "public archive";
    std::vector<int> column_topics;
    for (int j = 0; j < spec.cols; ++j) {
      const int topic = (ti + j) % pools.n_topics;
      column_topics.push_back(topic);
      t.headers.push_back(pools.topic(topic));
    }

    std::set<std::string> used;
    auto pick_clean = [&]() -> std::pair<std::string, std::string> {
      for (int tries = 0; tries < 16; ++tries) {
        const int j = static_cast<int>(rng.index(static_cast<std::size_t>(pools.n_unambig)));
        const std::string name = pools.unambig_name(j);
        if (used.count(name) == 0) return {name, pools.unambig_id(j)};
      }
      return {"", ""};
    };

    t.cells.assign(static_cast<std::size_t>(spec.rows),
                   std::vector<std::string>(static_cast<std::size_t>(spec.cols)));
    for (int i = 0; i < spec.rows; ++i) {
      for (int j = 0; j < spec.cols; ++j) {
        const double u = rng.uniform();
        std::string value;
        std::string gold;

        if (u < spec.ambiguous_frac) {
          // Pair whose A-or-B topic matches this column; the header decides
          // which member is gold.
          const int topic = column_topics[static_cast<std::size_t>(j)];
          const bool as_a = rng.index(2) == 0;
          const int slot = static_cast<int>(rng.index(2));
          const int p = as_a ? topic + pools.n_topics * slot
                             : (topic - 1 + pools.n_topics) % pools.n_topics +
                                   pools.n_topics * slot;
          const std::string surface = pools.pair_surface(p);
          if (used.count(surface) == 0) {
            value = surface;
            gold = as_a ? pools.pair_id_a(p) : pools.pair_id_b(p);
          }
        } else if (u < spec.ambiguous_frac + spec.misspelled_frac) {
          for (int tries = 0; tries < 16 && value.empty(); ++tries) {
            const int e = static_cast<int>(rng.index(static_cast<std::size_t>(pools.n_unambig)));
            const std::string token = pools.first_token(e);
            if (used.count(token) == 0) {
              value = token;
              gold = pools.unambig_id(e);
            }
          }
        } else if (u < spec.ambiguous_frac + spec.misspelled_frac + spec.nil_frac) {
          const std::string junk = "zz" + syll_word("", junk_counter++);
          // Every eighth NIL cell borrows a KB token so its candidate set is
          // non-empty and NIL must win on scores, not by default.
          if (nil_counter++ % 8 == 7) {
            const int e = static_cast<int>(rng.index(static_cast<std::size_t>(pools.n_unambig)));
            value = pools.first_token(e) + " " + junk;
          } else {
            value = junk;
          }
        }

        if (value.empty() && gold.empty()) {
          const auto [name, id] = pick_clean();
          value = name;
          gold = id;
        }
        if (value.empty()) {
          value = "zz" + syll_word("", junk_counter++);  // clean pool collision fallback
        }
        used.insert(value);
        t.cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = value;
        if (!gold.empty()) t.gold_links[CellRef{i, j}] = gold;
      }
    }

    if (t.gold_links.empty()) {
      const auto [name, id] = pick_clean();
      if (!name.empty()) {
        t.cells[0][0] = name;
        t.gold_links[CellRef{0, 0}] = id;
      }
    }
    t.validate();
    return t;
  };

  for (int ti = 0; ti < spec.tables; ++ti) {
    corpus.tables.push_back(build_table(ti, num_id("synth-train-", ti)));
  }
  for (int ti = 0; ti < spec.eval_tables; ++ti) {
    corpus.eval_tables.push_back(build_table(spec.tables + ti, num_id("synth-eval-", ti)));
  }
  return corpus;
}

}  // namespace tell
