#include "imploss/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "imploss/errors.hpp"
#include "imploss/rng.hpp"

namespace imploss {

using json = nlohmann::json;

void Dataset::validate() const {
  if (examples.empty()) throw ValidationError("empty dataset");
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
  if (feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    if (ex.label < 0 || ex.label >= num_classes)
      throw ValidationError("example " + std::to_string(i) + ": label " +
                            std::to_string(ex.label) + " out of range for C=" +
                            std::to_string(num_classes));
    for (const auto& [idx, val] : ex.features) {
      if (idx >= static_cast<std::uint32_t>(feature_dim))
        throw ValidationError("example " + std::to_string(i) +
                              ": feature index " + std::to_string(idx) +
                              " >= d=" + std::to_string(feature_dim));
      if (!std::isfinite(val))
        throw ValidationError("example " + std::to_string(i) +
                              ": non-finite feature value");
    }
  }
}

std::uint32_t hash_token(const std::string& token, std::uint32_t dim) {
  std::uint64_t h = kFeatureHashSeed;
  for (unsigned char c : token) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001B3ULL;
  }
  return static_cast<std::uint32_t>(h % dim);
}

SparseVec featurize(const std::string& text, std::uint32_t dim) {
  if (dim < 2) throw ValidationError("featurize: dim must be >= 2");
  std::map<std::uint32_t, double> counts;
  std::string token;
  auto flush = [&]() {
    if (!token.empty()) {
      counts[hash_token(token, dim)] += 1.0;
      token.clear();
    }
  };
  for (unsigned char c : text) {
    if (c >= 0x80 || std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();

  double norm_sq = 0.0;
  for (const auto& [idx, v] : counts) norm_sq += v * v;
  SparseVec out;
  out.reserve(counts.size());
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (const auto& [idx, v] : counts) out.emplace_back(idx, v * inv);
  }
  return out;
}

namespace {

const char* tag_name(SourceTag t) {
  switch (t) {
    case SourceTag::swapped: return "swapped";
    case SourceTag::duplicated: return "duplicated";
    default: return "original";
  }
}

SourceTag tag_from_name(const std::string& s, int line) {
  if (s == "original") return SourceTag::original;
  if (s == "swapped") return SourceTag::swapped;
  if (s == "duplicated") return SourceTag::duplicated;
  throw ParseError("line " + std::to_string(line) + ": unknown source tag '" + s + "'");
}

Example parse_jsonl_record(const std::string& line, int line_no,
                           const LoadOptions& opts, std::uint32_t* max_index,
                           bool* explicit_features) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!rec.is_object() || !rec.contains("label") ||
      !rec["label"].is_number_integer())
    throw ParseError("line " + std::to_string(line_no) +
                     ": record needs an integer 'label' field");
  Example ex;
  ex.label = rec["label"].get<int>();
  if (rec.contains("tag")) ex.tag = tag_from_name(rec["tag"].get<std::string>(), line_no);

  if (rec.contains("features")) {
    *explicit_features = true;
    for (const auto& [key, val] : rec["features"].items()) {
      std::uint32_t idx;
      try {
        idx = static_cast<std::uint32_t>(std::stoul(key));
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": bad feature index '" + key + "'");
      }
      if (!val.is_number())
        throw ParseError("line " + std::to_string(line_no) +
                         ": feature value must be numeric");
      ex.features.emplace_back(idx, val.get<double>());
      *max_index = std::max(*max_index, idx);
    }
    std::sort(ex.features.begin(), ex.features.end());
  } else if (rec.contains("text")) {
    ex.features = featurize(rec["text"].get<std::string>(), opts.feature_dim);
  } else {
    throw ParseError("line " + std::to_string(line_no) +
                     ": record needs 'features' or 'text'");
  }
  return ex;
}

Example parse_tsv_record(const std::string& line, int line_no,
                         const LoadOptions& opts) {
  auto tab = line.find('\t');
  if (tab == std::string::npos)
    throw ParseError("line " + std::to_string(line_no) + ": expected label<TAB>text");
  Example ex;
  try {
    ex.label = std::stoi(line.substr(0, tab));
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad label '" +
                     line.substr(0, tab) + "'");
  }
  ex.features = featurize(line.substr(tab + 1), opts.feature_dim);
  return ex;
}

}  // namespace

Dataset load_dataset(const std::string& path, FileFormat format,
                     const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  Dataset ds;
  std::uint32_t max_index = 0;
  bool saw_explicit_features = false;
  std::string line;
  int line_no = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Example ex;
    if (format == FileFormat::jsonl) {
      ex = parse_jsonl_record(line, line_no, opts, &max_index, &saw_explicit_features);
    } else {
      ex = parse_tsv_record(line, line_no, opts);
    }
    if (ex.label < 0)
      throw ValidationError("line " + std::to_string(line_no) + ": negative label");
    if (opts.num_classes && ex.label >= *opts.num_classes)
      throw ValidationError("line " + std::to_string(line_no) + ": label " +
                            std::to_string(ex.label) + " >= declared C=" +
                            std::to_string(*opts.num_classes));
    max_label = std::max(max_label, ex.label);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw ValidationError("empty dataset");

  ds.num_classes = opts.num_classes ? *opts.num_classes : max_label + 1;
  ds.feature_dim = static_cast<int>(opts.feature_dim);
  if (saw_explicit_features)
    ds.feature_dim = std::max(ds.feature_dim, static_cast<int>(max_index) + 1);
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  for (const Example& ex : ds.examples) {
    json rec;
    rec["label"] = ex.label;
    json feats = json::object();
    for (const auto& [idx, val] : ex.features) feats[std::to_string(idx)] = val;
    rec["features"] = feats;
    if (ex.tag != SourceTag::original) rec["tag"] = tag_name(ex.tag);
    out << rec.dump() << '\n';
  }
}

std::vector<Dataset> split(const Dataset& ds, const std::vector<double>& fractions,
                           std::uint64_t seed) {
  if (fractions.empty()) throw ValidationError("split: no fractions given");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0))
      throw ValidationError("split: each fraction must lie in (0,1)");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("split: fractions sum to " + std::to_string(sum) +
                          ", expected 1");

  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Dataset> parts;
  parts.reserve(fractions.size());
  double cum = 0.0;
  std::size_t start = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    cum += fractions[k];
    std::size_t end = (k + 1 == fractions.size())
                          ? n
                          : static_cast<std::size_t>(std::llround(cum * n));
    end = std::min(end, n);
    Dataset part;
    part.num_classes = ds.num_classes;
    part.feature_dim = ds.feature_dim;
    for (std::size_t i = start; i < end; ++i)
      part.examples.push_back(ds.examples[order[i]]);
    parts.push_back(std::move(part));
    start = end;
  }
  return parts;
}

}  // namespace imploss
