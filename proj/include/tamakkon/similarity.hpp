#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamakkon/core.hpp"
#include "tamakkon/statkit.hpp"

namespace tamakkon::similarity {

enum class Mark { Same, Different };
enum class Tag { Similar, PartlySimilar, NotSimilar };

inline const char* to_string(Mark m) { return m == Mark::Same ? "SAME" : "DIFFERENT"; }

inline const char* to_string(Tag t) {
  switch (t) {
    case Tag::Similar: return "SIMILAR";
    case Tag::PartlySimilar: return "PARTLY_SIMILAR";
    case Tag::NotSimilar: return "NOT_SIMILAR";
  }
  return "?";
}

struct FeatureComparison {
  std::string feature;
  double d = 0.0;
  double p = 1.0;
  Mark mark = Mark::Same;
};

// A feature counts as SAME when the KS test cannot reject similarity
// (p > 0.05) or the distribution distance stays below 0.5.
inline Mark mark_of(double d, double p) {
  return (p > 0.05 || d < 0.5) ? Mark::Same : Mark::Different;
}

inline FeatureComparison compare_feature(const std::string& name, const std::vector<double>& a,
                                         const std::vector<double>& b) {
  auto ks = statkit::ks_two_sample(a, b);
  return FeatureComparison{name, ks.d, ks.p, mark_of(ks.d, ks.p)};
}

struct SimilarityReport {
  std::string source_id;
  std::string target_id;
  std::vector<FeatureComparison> comparisons;
  std::size_t arch_same_count = 0;
  std::size_t arch_total = 0;
  std::size_t dep_same_count = 0;
  std::size_t dep_total = 0;
  Tag tag = Tag::NotSimilar;
  bool feature_difference = false;

  std::size_t same_count() const { return arch_same_count + dep_same_count; }

  double mean_d() const {
    if (comparisons.empty()) return 0.0;
    double s = 0.0;
    for (const auto& c : comparisons) s += c.d;
    return s / static_cast<double>(comparisons.size());
  }

  bool domain_differs() const { return tag == Tag::NotSimilar; }
};

// Only the application-architecture group decides the tag: all SAME means
// SIMILAR, a strict majority means PARTLY_SIMILAR, anything else NOT_SIMILAR.
inline Tag tag_of(std::size_t arch_same, std::size_t arch_total) {
  if (arch_total > 0 && arch_same == arch_total) return Tag::Similar;
  if (2 * arch_same > arch_total) return Tag::PartlySimilar;
  return Tag::NotSimilar;
}

inline void aggregate(SimilarityReport& rep, const FeatureSchema& schema) {
  rep.arch_same_count = rep.arch_total = rep.dep_same_count = rep.dep_total = 0;
  rep.feature_difference = false;
  for (const auto& c : rep.comparisons) {
    const auto* d = schema.find(c.feature);
    const bool arch = d && d->category == FeatureCategory::ApplicationArchitecture;
    if (arch) {
      ++rep.arch_total;
      if (c.mark == Mark::Same) ++rep.arch_same_count;
    } else {
      ++rep.dep_total;
      if (c.mark == Mark::Same) ++rep.dep_same_count;
    }
    if (c.mark == Mark::Different) rep.feature_difference = true;
  }
  rep.tag = tag_of(rep.arch_same_count, rep.arch_total);
}

inline SimilarityReport compare_domains(const ProfileDataset& aux, const ProfileDataset& kb,
                                        const std::optional<FeatureMapping>& mapping = {}) {
  const ProfileDataset* source = &kb;
  ProfileDataset mapped;
  if (mapping) {
    mapped = apply_mapping(kb, *mapping).dataset;
    source = &mapped;
  }

  SimilarityReport rep;
  rep.source_id = kb.app_id.empty() ? kb.provider_id : kb.app_id + "@" + kb.provider_id;
  rep.target_id = aux.app_id.empty() ? aux.provider_id : aux.app_id + "@" + aux.provider_id;

  std::set<std::string> all_names;
  for (const auto& d : aux.schema.descriptors) all_names.insert(d.name);
  for (const auto& d : source->schema.descriptors) all_names.insert(d.name);

  bool shared_arch = false;
  for (const auto& name : all_names) {
    const bool in_aux = aux.schema.find(name) != nullptr;
    const bool in_src = source->schema.find(name) != nullptr;
    if (in_aux && in_src) {
      rep.comparisons.push_back(compare_feature(name, source->column(name), aux.column(name)));
      const auto* d = aux.schema.find(name);
      if (d->category == FeatureCategory::ApplicationArchitecture) shared_arch = true;
    } else {
      // A feature present in only one schema is itself evidence of dissimilarity.
      rep.comparisons.push_back(FeatureComparison{name, 1.0, 0.0, Mark::Different});
    }
  }
  if (!shared_arch) {
    throw Error(ErrorCode::NoSharedArchitectureFeatures,
                "compare_domains: no shared architecture features");
  }

  // Aggregate against the target schema; features the target lacks fall into
  // the deployment/cloud bucket and never affect the tag.
  aggregate(rep, aux.schema);
  return rep;
}

struct RankedSource {
  std::string entry_id;
  SimilarityReport report;
};

inline int tag_precedence(Tag t) {
  switch (t) {
    case Tag::Similar: return 0;
    case Tag::PartlySimilar: return 1;
    case Tag::NotSimilar: return 2;
  }
  return 3;
}

template <typename Entry>
std::vector<RankedSource> rank_sources(const ProfileDataset& aux,
                                       const std::vector<Entry>& kb_entries) {
  if (kb_entries.empty()) {
    throw Error(ErrorCode::EmptyKnowledgebase, "rank_sources: no knowledgebase entries");
  }
  std::vector<RankedSource> out;
  for (const auto& e : kb_entries) {
    out.push_back(RankedSource{e.entry_id, compare_domains(aux, e.dataset, e.mapping)});
  }
  std::sort(out.begin(), out.end(), [](const RankedSource& a, const RankedSource& b) {
    const int pa = tag_precedence(a.report.tag), pb = tag_precedence(b.report.tag);
    if (pa != pb) return pa < pb;
    if (a.report.same_count() != b.report.same_count()) {
      return a.report.same_count() > b.report.same_count();
    }
    if (a.report.mean_d() != b.report.mean_d()) return a.report.mean_d() < b.report.mean_d();
    return a.entry_id < b.entry_id;
  });
  return out;
}

inline nlohmann::json report_to_json(const SimilarityReport& rep) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : rep.comparisons) {
    comps.push_back({{"feature", c.feature},
                     {"d", c.d},
                     {"p", c.p},
                     {"mark", to_string(c.mark)}});
  }
  return nlohmann::json{{"source_id", rep.source_id},
                        {"target_id", rep.target_id},
                        {"comparisons", comps},
                        {"arch_same_count", rep.arch_same_count},
                        {"arch_total", rep.arch_total},
                        {"dep_same_count", rep.dep_same_count},
                        {"dep_total", rep.dep_total},
                        {"tag", to_string(rep.tag)},
                        {"feature_difference", rep.feature_difference}};
}

}  // namespace tamakkon::similarity
