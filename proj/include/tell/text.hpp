#pragma once

#include <string>
#include <vector>

namespace tell {

/// Remove <...> spans. A '<' with no matching '>' is kept literally
/// (it is dropped later as a special character anyway).
std::string strip_html(const std::string& s);

/// Canonical text cleaning shared by corpus ingestion, gazetteer keys and
/// BM25 queries: strip HTML, lower-case, drop everything outside
/// [a-z0-9 '-.,], collapse whitespace runs, trim. ASCII pipeline: bytes
/// >= 0x80 count as special characters and are dropped. Idempotent.
std::string clean_text(const std::string& s);

/// Gazetteer key form of a surface string.
inline std::string normalize_surface(const std::string& s) { return clean_text(s); }

/// Lower-cased maximal [a-z0-9] runs; punctuation and whitespace both split.
std::vector<std::string> tokenize(const std::string& s);

}  // namespace tell
