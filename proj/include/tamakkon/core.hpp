#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamakkon/error.hpp"

namespace tamakkon {

enum class FeatureCategory { ApplicationArchitecture, Deployment, Cloud };
enum class FeatureKind { Numeric, Boolean, Categorical };

inline const char* to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::ApplicationArchitecture: return "APPLICATION_ARCHITECTURE";
    case FeatureCategory::Deployment: return "DEPLOYMENT";
    case FeatureCategory::Cloud: return "CLOUD";
  }
  return "?";
}

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Numeric: return "NUMERIC";
    case FeatureKind::Boolean: return "BOOLEAN";
    case FeatureKind::Categorical: return "CATEGORICAL";
  }
  return "?";
}

inline FeatureCategory feature_category_from_string(const std::string& s) {
  if (s == "APPLICATION_ARCHITECTURE") return FeatureCategory::ApplicationArchitecture;
  if (s == "DEPLOYMENT") return FeatureCategory::Deployment;
  if (s == "CLOUD") return FeatureCategory::Cloud;
  throw Error(ErrorCode::InvalidArgument, "unknown feature category: " + s);
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "NUMERIC") return FeatureKind::Numeric;
  if (s == "BOOLEAN") return FeatureKind::Boolean;
  if (s == "CATEGORICAL") return FeatureKind::Categorical;
  throw Error(ErrorCode::UnknownCategoryKind, "unknown feature kind: " + s);
}

struct FeatureDescriptor {
  std::string name;
  FeatureCategory category = FeatureCategory::Deployment;
  FeatureKind kind = FeatureKind::Numeric;
  std::optional<std::string> unit;

  friend bool operator==(const FeatureDescriptor&, const FeatureDescriptor&) = default;
};

struct FeatureSchema {
  std::vector<FeatureDescriptor> descriptors;
  std::string response;  // execution time column, seconds

  const FeatureDescriptor* find(const std::string& name) const {
    for (const auto& d : descriptors) {
      if (d.name == name) return &d;
    }
    return nullptr;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    out.reserve(descriptors.size());
    for (const auto& d : descriptors) out.push_back(d.name);
    return out;
  }

  void check() const {
    std::set<std::string> seen;
    bool has_arch = false, has_dep = false;
    for (const auto& d : descriptors) {
      if (!seen.insert(d.name).second) {
        throw Error(ErrorCode::InvalidArgument, "duplicate descriptor name: " + d.name);
      }
      if (d.name == response) {
        throw Error(ErrorCode::InvalidArgument, "response listed among predictors: " + d.name);
      }
      if (d.category == FeatureCategory::ApplicationArchitecture) has_arch = true;
      else has_dep = true;
    }
    if (!has_arch || !has_dep) {
      throw Error(ErrorCode::InvalidArgument,
                  "schema needs at least one architecture and one deployment feature");
    }
  }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

struct ProfileRecord {
  std::map<std::string, double> values;
  double response = 0.0;  // seconds, > 0

  friend bool operator==(const ProfileRecord&, const ProfileRecord&) = default;
};

struct ProfileDataset {
  FeatureSchema schema;
  std::string app_id;
  std::string provider_id;
  std::vector<ProfileRecord> records;
  // Categorical level tables from ingestion: feature -> levels in code order.
  std::map<std::string, std::vector<std::string>> category_levels;

  std::size_t size() const { return records.size(); }

  std::vector<double> column(const std::string& feature) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
      auto it = r.values.find(feature);
      if (it == r.values.end()) {
        throw Error(ErrorCode::MissingFeature, "no such feature: " + feature);
      }
      out.push_back(it->second);
    }
    return out;
  }

  std::vector<double> responses() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.response);
    return out;
  }

  friend bool operator==(const ProfileDataset&, const ProfileDataset&) = default;
};

struct BillingRule {
  std::uint32_t granularity_seconds = 3600;
  std::uint32_t minimum_seconds = 3600;

  void check() const {
    if (granularity_seconds == 0) {
      throw Error(ErrorCode::InvalidArgument, "billing granularity must be positive");
    }
    if (minimum_seconds != 0 && minimum_seconds % granularity_seconds != 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "billing minimum must be a multiple of the granularity");
    }
  }

  friend bool operator==(const BillingRule&, const BillingRule&) = default;
};

enum class ComputeUnitKind { Ecu, Gceu, Generic };

inline const char* to_string(ComputeUnitKind k) {
  switch (k) {
    case ComputeUnitKind::Ecu: return "ECU";
    case ComputeUnitKind::Gceu: return "GCEU";
    case ComputeUnitKind::Generic: return "GENERIC";
  }
  return "?";
}

inline ComputeUnitKind compute_unit_kind_from_string(const std::string& s) {
  if (s == "ECU") return ComputeUnitKind::Ecu;
  if (s == "GCEU") return ComputeUnitKind::Gceu;
  if (s == "GENERIC") return ComputeUnitKind::Generic;
  throw Error(ErrorCode::InvalidArgument, "unknown compute unit kind: " + s);
}

struct InstanceType {
  std::string provider_id;
  std::string name;
  std::uint32_t vcpu = 1;
  double compute_units = 1.0;
  ComputeUnitKind compute_unit_kind = ComputeUnitKind::Generic;
  double ram_gib = 1.0;
  double storage_gb = 0.0;
  std::string storage_note;  // free text, e.g. "SSD"
  double price_per_hour_usd = 0.0;
  BillingRule billing;

  void check() const {
    if (vcpu < 1) throw Error(ErrorCode::InvalidArgument, name + ": vcpu must be >= 1");
    if (!(ram_gib > 0)) throw Error(ErrorCode::InvalidArgument, name + ": ram must be > 0");
    if (price_per_hour_usd < 0) throw Error(ErrorCode::InvalidArgument, name + ": negative price");
    billing.check();
  }

  friend bool operator==(const InstanceType&, const InstanceType&) = default;
};

struct InstanceCatalog {
  std::string provider_id;
  std::vector<InstanceType> instances;

  const InstanceType* find(const std::string& name) const {
    for (const auto& i : instances) {
      if (i.name == name) return &i;
    }
    return nullptr;
  }

  friend bool operator==(const InstanceCatalog&, const InstanceCatalog&) = default;
};

struct FeatureMapping {
  std::vector<std::pair<std::string, std::string>> pairs;  // source -> target
  std::vector<std::pair<std::string, double>> unit_conversions;  // source feature, multiplier

  void check() const {
    std::set<std::string> sources, targets;
    for (const auto& [s, t] : pairs) {
      if (!sources.insert(s).second || !targets.insert(t).second) {
        throw Error(ErrorCode::NonInjectiveMapping, "feature mapping is not injective");
      }
    }
    for (const auto& [f, m] : unit_conversions) {
      if (!(m > 0)) {
        throw Error(ErrorCode::InvalidArgument, "unit conversion multiplier must be > 0: " + f);
      }
    }
  }
};

// ---- Schema manifest (JSON) ----

inline FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema s;
  s.response = j.at("response").get<std::string>();
  for (const auto& f : j.at("features")) {
    FeatureDescriptor d;
    d.name = f.at("name").get<std::string>();
    d.category = feature_category_from_string(f.at("category").get<std::string>());
    d.kind = feature_kind_from_string(f.at("kind").get<std::string>());
    if (f.contains("unit")) d.unit = f.at("unit").get<std::string>();
    s.descriptors.push_back(std::move(d));
  }
  s.check();
  return s;
}

inline nlohmann::json schema_to_json(const FeatureSchema& s) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& d : s.descriptors) {
    nlohmann::json f{{"name", d.name},
                     {"category", to_string(d.category)},
                     {"kind", to_string(d.kind)}};
    if (d.unit) f["unit"] = *d.unit;
    features.push_back(std::move(f));
  }
  return nlohmann::json{{"response", s.response}, {"features", features}};
}

inline FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open schema manifest: " + path);
  nlohmann::json j;
  in >> j;
  return schema_from_json(j);
}

// ---- CSV ingestion ----

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Parses a profile CSV against a schema manifest. Categorical columns are
// encoded to integer codes in lexicographic order of the distinct raw values.
inline ProfileDataset load_profiles_csv(std::istream& in, const FeatureSchema& schema,
                                        const std::string& app_id = "",
                                        const std::string& provider_id = "") {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::EmptyDataset, "profile CSV has no header row");
  }
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col_of;
  for (std::size_t i = 0; i < header.size(); ++i) col_of[detail::trim(header[i])] = i;

  for (const auto& d : schema.descriptors) {
    if (!col_of.count(d.name)) {
      throw Error(ErrorCode::MissingColumn, "MissingColumn(" + d.name + ")");
    }
  }
  if (!col_of.count(schema.response)) {
    throw Error(ErrorCode::MissingColumn, "MissingColumn(" + schema.response + ")");
  }

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() < header.size()) {
      throw Error(ErrorCode::IoError,
                  "row " + std::to_string(rows.size() + 1) + " has too few cells");
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "profile CSV has no data rows");

  ProfileDataset ds;
  ds.schema = schema;
  ds.app_id = app_id;
  ds.provider_id = provider_id;

  // First pass: collect categorical levels, sorted lexicographically.
  for (const auto& d : schema.descriptors) {
    if (d.kind != FeatureKind::Categorical) continue;
    std::set<std::string> levels;
    for (const auto& row : rows) levels.insert(detail::trim(row[col_of[d.name]]));
    ds.category_levels[d.name] = {levels.begin(), levels.end()};
  }

  auto encode = [&](const FeatureDescriptor& d, const std::string& raw,
                    std::size_t row_idx) -> double {
    const std::string v = detail::trim(raw);
    if (d.kind == FeatureKind::Categorical) {
      const auto& levels = ds.category_levels[d.name];
      auto it = std::lower_bound(levels.begin(), levels.end(), v);
      return static_cast<double>(it - levels.begin());
    }
    double x;
    try {
      x = std::stod(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::NonFiniteValue,
                  "row " + std::to_string(row_idx) + ": cannot parse '" + v + "' in " + d.name);
    }
    if (d.kind == FeatureKind::Boolean && x != 0.0 && x != 1.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "row " + std::to_string(row_idx) + ": boolean feature " + d.name +
                      " must be 0 or 1");
    }
    return x;
  };

  for (std::size_t i = 0; i < rows.size(); ++i) {
    ProfileRecord rec;
    for (const auto& d : schema.descriptors) {
      rec.values[d.name] = encode(d, rows[i][col_of[d.name]], i + 1);
    }
    double y;
    try {
      y = std::stod(detail::trim(rows[i][col_of[schema.response]]));
    } catch (const std::exception&) {
      throw Error(ErrorCode::NonFiniteValue,
                  "row " + std::to_string(i + 1) + ": cannot parse response");
    }
    if (!std::isfinite(y) || y <= 0.0) {
      throw Error(ErrorCode::NonPositiveResponse,
                  "NonPositiveResponse(row " + std::to_string(i + 1) + ")");
    }
    rec.response = y;
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

inline ProfileDataset load_profiles(const std::string& csv_path, const std::string& schema_path,
                                    const std::string& app_id = "",
                                    const std::string& provider_id = "") {
  auto schema = load_schema(schema_path);
  std::ifstream in(csv_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open profile CSV: " + csv_path);
  return load_profiles_csv(in, schema, app_id, provider_id);
}

// Categorical codes are written back as their level strings so that a reload
// re-encodes to the same codes.
inline void write_profiles_csv(std::ostream& out, const ProfileDataset& ds) {
  const auto names = ds.schema.feature_names();
  for (const auto& n : names) out << n << ',';
  out << ds.schema.response << '\n';
  out.precision(17);
  for (const auto& r : ds.records) {
    for (const auto& n : names) {
      auto lv = ds.category_levels.find(n);
      if (lv != ds.category_levels.end()) {
        const auto code = static_cast<std::size_t>(r.values.at(n));
        if (code >= lv->second.size()) {
          throw Error(ErrorCode::InvalidArgument, "categorical code out of range in " + n);
        }
        out << lv->second[code] << ',';
      } else {
        out << r.values.at(n) << ',';
      }
    }
    out << r.response << '\n';
  }
}

// ---- Validation ----

struct ValidationReport {
  std::vector<std::string> violations;
  std::size_t duplicate_rows = 0;
  bool clean() const { return violations.empty(); }
};

inline ValidationReport validate_dataset(const ProfileDataset& ds) {
  ValidationReport rep;
  if (ds.records.empty()) {
    rep.violations.push_back("EmptyDataset");
    return rep;
  }
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    if (!std::isfinite(r.response) || r.response <= 0.0) {
      rep.violations.push_back("NonPositiveResponse(row " + std::to_string(i) + ")");
    }
    for (const auto& [k, v] : r.values) {
      if (!std::isfinite(v)) {
        rep.violations.push_back("NonFiniteValue(row " + std::to_string(i) + ", " + k + ")");
      }
    }
  }
  bool constant_response = true;
  for (const auto& r : ds.records) {
    if (r.response != ds.records.front().response) {
      constant_response = false;
      break;
    }
  }
  if (constant_response && ds.records.size() > 1) {
    rep.violations.push_back("ConstantResponse");
  }
  // Duplicate rows are reported but non-fatal: repeated benchmark runs are legitimate.
  std::map<std::string, std::size_t> seen;
  for (const auto& r : ds.records) {
    std::ostringstream key;
    key.precision(17);
    for (const auto& [k, v] : r.values) key << k << '=' << v << ';';
    key << r.response;
    if (seen[key.str()]++ > 0) ++rep.duplicate_rows;
  }
  if (rep.duplicate_rows > 0) {
    rep.violations.push_back("DuplicateRows(count=" + std::to_string(rep.duplicate_rows) + ")");
  }
  return rep;
}

// ---- Bundled catalogs (specs and prices as printed; T2 ECUs are variable
// and recorded as vcpu-equivalent) ----

enum class Provider { Ec2, Gce };

inline InstanceCatalog bundled_catalog(Provider p) {
  InstanceCatalog cat;
  const BillingRule hourly{3600, 3600};
  const BillingRule per_minute_10min{60, 600};
  auto add = [&cat](const std::string& provider, std::string name, std::uint32_t vcpu,
                    double cu, ComputeUnitKind kind, double ram, double storage,
                    std::string storage_note, double price, BillingRule billing) {
    InstanceType t;
    t.provider_id = provider;
    t.name = std::move(name);
    t.vcpu = vcpu;
    t.compute_units = cu;
    t.compute_unit_kind = kind;
    t.ram_gib = ram;
    t.storage_gb = storage;
    t.storage_note = std::move(storage_note);
    t.price_per_hour_usd = price;
    t.billing = billing;
    t.check();
    cat.instances.push_back(std::move(t));
  };
  if (p == Provider::Ec2) {
    cat.provider_id = "ec2";
    const auto k = ComputeUnitKind::Ecu;
    add("ec2", "t2.small", 1, 1, k, 2, 20, "", 0.026, hourly);
    add("ec2", "t2.medium", 2, 2, k, 4, 20, "", 0.052, hourly);
    add("ec2", "m3.medium", 1, 3, k, 3.75, 4, "SSD", 0.070, hourly);
    add("ec2", "m3.large", 2, 6.5, k, 7.5, 32, "SSD", 0.140, hourly);
    add("ec2", "m3.xlarge", 4, 13, k, 15, 32, "SSD", 0.280, hourly);
    add("ec2", "c4.large", 2, 8, k, 3.75, 20, "", 0.116, hourly);
    add("ec2", "c4.xlarge", 4, 16, k, 7.5, 20, "", 0.232, hourly);
    add("ec2", "c3.xlarge", 4, 14, k, 7.5, 32, "SSD", 0.239, hourly);
  } else {
    cat.provider_id = "gce";
    const auto k = ComputeUnitKind::Gceu;
    add("gce", "n1-standard-1", 1, 2.75, k, 3.75, 16, "", 0.036, per_minute_10min);
    add("gce", "n1-standard-2", 2, 5.5, k, 7.5, 16, "", 0.071, per_minute_10min);
    add("gce", "n1-standard-4", 4, 11, k, 15, 16, "", 0.142, per_minute_10min);
    add("gce", "n1-highmem-2", 2, 5.5, k, 13, 16, "", 0.106, per_minute_10min);
    add("gce", "n1-highcpu-2", 2, 5.5, k, 1.8, 16, "", 0.056, per_minute_10min);
    add("gce", "n1-highcpu-4", 4, 11, k, 3.6, 16, "", 0.118, per_minute_10min);
    add("gce", "n1-highcpu-8", 8, 2.2, k, 7.2, 16, "", 0.215, per_minute_10min);
  }
  return cat;
}

// ---- Catalog JSON ----

inline nlohmann::json instance_to_json(const InstanceType& t) {
  return nlohmann::json{
      {"provider_id", t.provider_id},
      {"name", t.name},
      {"vcpu", t.vcpu},
      {"compute_units", t.compute_units},
      {"compute_unit_kind", to_string(t.compute_unit_kind)},
      {"ram_gib", t.ram_gib},
      {"storage_gb", t.storage_gb},
      {"storage_note", t.storage_note},
      {"price_per_hour_usd", t.price_per_hour_usd},
      {"billing",
       {{"granularity_seconds", t.billing.granularity_seconds},
        {"minimum_seconds", t.billing.minimum_seconds}}}};
}

inline InstanceType instance_from_json(const nlohmann::json& j) {
  InstanceType t;
  t.provider_id = j.at("provider_id").get<std::string>();
  t.name = j.at("name").get<std::string>();
  t.vcpu = j.at("vcpu").get<std::uint32_t>();
  t.compute_units = j.at("compute_units").get<double>();
  t.compute_unit_kind = compute_unit_kind_from_string(j.at("compute_unit_kind").get<std::string>());
  t.ram_gib = j.at("ram_gib").get<double>();
  t.storage_gb = j.at("storage_gb").get<double>();
  if (j.contains("storage_note")) t.storage_note = j.at("storage_note").get<std::string>();
  t.price_per_hour_usd = j.at("price_per_hour_usd").get<double>();
  t.billing.granularity_seconds = j.at("billing").at("granularity_seconds").get<std::uint32_t>();
  t.billing.minimum_seconds = j.at("billing").at("minimum_seconds").get<std::uint32_t>();
  t.check();
  return t;
}

inline nlohmann::json catalog_to_json(const InstanceCatalog& cat) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : cat.instances) arr.push_back(instance_to_json(t));
  return arr;
}

inline InstanceCatalog catalog_from_json(const nlohmann::json& j) {
  InstanceCatalog cat;
  for (const auto& e : j) cat.instances.push_back(instance_from_json(e));
  if (!cat.instances.empty()) cat.provider_id = cat.instances.front().provider_id;
  return cat;
}

// ---- Feature mapping ----

struct MappingResult {
  ProfileDataset dataset;
  std::vector<std::string> dropped;  // unmapped source features
};

inline MappingResult apply_mapping(const ProfileDataset& ds, const FeatureMapping& mapping) {
  mapping.check();
  std::map<std::string, std::string> rename;
  for (const auto& [s, t] : mapping.pairs) {
    if (!ds.schema.find(s)) {
      throw Error(ErrorCode::UnknownFeature, "mapping source not in schema: " + s);
    }
    rename[s] = t;
  }
  std::map<std::string, double> scale;
  for (const auto& [f, m] : mapping.unit_conversions) {
    if (!ds.schema.find(f)) {
      throw Error(ErrorCode::UnknownFeature, "conversion feature not in schema: " + f);
    }
    scale[f] = m;
  }

  MappingResult out;
  out.dataset.app_id = ds.app_id;
  out.dataset.provider_id = ds.provider_id;
  out.dataset.schema.response = ds.schema.response;
  for (const auto& d : ds.schema.descriptors) {
    auto it = rename.find(d.name);
    if (it == rename.end()) {
      out.dropped.push_back(d.name);
      continue;
    }
    FeatureDescriptor nd = d;
    nd.name = it->second;
    out.dataset.schema.descriptors.push_back(std::move(nd));
    if (ds.category_levels.count(d.name)) {
      out.dataset.category_levels[it->second] = ds.category_levels.at(d.name);
    }
  }
  for (const auto& r : ds.records) {
    ProfileRecord nr;
    nr.response = r.response;
    for (const auto& d : ds.schema.descriptors) {
      auto it = rename.find(d.name);
      if (it == rename.end()) continue;
      double v = r.values.at(d.name);
      auto sc = scale.find(d.name);
      if (sc != scale.end()) v *= sc->second;
      nr.values[it->second] = v;
    }
    out.dataset.records.push_back(std::move(nr));
  }
  return out;
}

}  // namespace tamakkon
