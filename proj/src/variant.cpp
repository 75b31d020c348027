#include "tell/variant.hpp"

#include <algorithm>
#include <cctype>

#include "tell/common.hpp"

namespace tell {

namespace {

std::string fold(const std::string& s) {
  std::string out;
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out += static_cast<char>(std::tolower(u));
  }
  return out;
}

}  // namespace

Variant parse_variant(const std::string& name) {
  const std::string key = fold(name);
  if (key == "singleattenc" || key == "single" || key == "baseline") return Variant::Single;
  if (key == "singleattencmeta" || key == "tell") return Variant::Tell;
  if (key == "allattenc" || key == "allatt") return Variant::AllAtt;
  if (key == "allattencmeta" || key == "allattmeta") return Variant::AllAttMeta;
  if (key == "maskattencmeta" || key == "maskattenc" || key == "maskattmeta" || key == "turl") {
    return Variant::MaskAttMeta;
  }
  if (key == "singlelinearencmeta" || key == "linearmeta") return Variant::LinearMeta;
  if (key == "singlelstmencmeta" || key == "lstmmeta") return Variant::LstmMeta;
  throw UsageError("unknown encoder variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Single: return "SingleAttEnc";
    case Variant::Tell: return "SingleAttEnc+meta";
    case Variant::AllAtt: return "AllAttEnc";
    case Variant::AllAttMeta: return "AllAttEnc+meta";
    case Variant::MaskAttMeta: return "MaskAttEnc+meta";
    case Variant::LinearMeta: return "SingleLinearEnc+meta";
    case Variant::LstmMeta: return "SingleLSTMEnc+meta";
  }
  throw InternalError("variant_name: bad enum value");
}

}  // namespace tell
