#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamakkon/core.hpp"
#include "tamakkon/learners.hpp"

namespace tamakkon::kb {

namespace fs = std::filesystem;

constexpr int kFormatVersion = 1;

struct KbEntry {
  std::string entry_id;
  ProfileDataset dataset;
  std::map<learners::LearnerKind, learners::ModelArtifact> artifacts;
  std::map<std::string, std::string> tags;  // target_id -> similarity tag cache
  std::optional<FeatureMapping> mapping;    // how to map this source into the target schema
};

// Advisory single-writer lock; released on destruction.
class WriterLock {
 public:
  explicit WriterLock(const fs::path& root) : path_(root / "kb.lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw Error(ErrorCode::StoreLocked, "knowledgebase is locked: " + path_.string());
    }
    ::close(fd);
  }
  ~WriterLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  WriterLock(const WriterLock&) = delete;
  WriterLock& operator=(const WriterLock&) = delete;

 private:
  fs::path path_;
};

namespace detail {

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << content;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

class Store {
 public:
  explicit Store(fs::path root) : root_(std::move(root)) {
    if (!fs::exists(root_)) {
      fs::create_directories(root_ / "entries");
      fs::create_directories(root_ / "repo");
      nlohmann::json manifest{{"format_version", kFormatVersion}};
      detail::write_file(root_ / "manifest.json", manifest.dump(2) + "\n");
    } else {
      auto manifest = nlohmann::json::parse(detail::read_file(root_ / "manifest.json"));
      const int v = manifest.at("format_version").get<int>();
      if (v != kFormatVersion) {
        throw Error(ErrorCode::FormatVersionMismatch,
                    "unsupported store format version " + std::to_string(v));
      }
    }
  }

  const fs::path& root() const { return root_; }

  std::vector<std::string> list() const {
    std::vector<std::string> ids;
    const auto dir = root_ / "entries";
    if (fs::exists(dir)) {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) ids.push_back(e.path().filename().string());
      }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  bool contains(const std::string& entry_id) const {
    return fs::exists(root_ / "entries" / entry_id);
  }

  std::string put(const KbEntry& entry) {
    if (entry.entry_id.empty()) {
      throw Error(ErrorCode::InvalidArgument, "kb_put: empty entry id");
    }
    if (contains(entry.entry_id)) {
      throw Error(ErrorCode::DuplicateId, "kb_put: DuplicateId(" + entry.entry_id + ")");
    }
    auto report = validate_dataset(entry.dataset);
    for (const auto& v : report.violations) {
      if (v.rfind("DuplicateRows", 0) == 0 || v == "ConstantResponse") continue;
      throw Error(ErrorCode::InvalidArgument, "kb_put: invalid dataset: " + v);
    }

    WriterLock lock(root_);
    const auto dir = root_ / "entries" / entry.entry_id;
    fs::create_directories(dir);

    std::ostringstream csv;
    write_profiles_csv(csv, entry.dataset);
    detail::write_file(dir / "dataset.csv", csv.str());

    auto schema = schema_to_json(entry.dataset.schema);
    schema["category_levels"] = entry.dataset.category_levels;
    detail::write_file(dir / "schema.json", schema.dump(2) + "\n");

    nlohmann::json meta{{"entry_id", entry.entry_id},
                        {"app_id", entry.dataset.app_id},
                        {"provider_id", entry.dataset.provider_id},
                        {"tags", entry.tags}};
    if (entry.mapping) {
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto& [s, t] : entry.mapping->pairs) pairs.push_back({{"from", s}, {"to", t}});
      nlohmann::json convs = nlohmann::json::array();
      for (const auto& [f, m] : entry.mapping->unit_conversions) {
        convs.push_back({{"feature", f}, {"multiplier", m}});
      }
      meta["mapping"] = {{"pairs", pairs}, {"unit_conversions", convs}};
    }
    detail::write_file(dir / "meta.json", meta.dump(2) + "\n");

    for (const auto& [kind, artifact] : entry.artifacts) {
      detail::write_file(dir / (std::string("model-") + learners::to_string(kind) + ".json"),
                         learners::canonical_json(learners::artifact_to_json(artifact)) + "\n");
    }
    return entry.entry_id;
  }

  KbEntry get(const std::string& entry_id) const {
    const auto dir = root_ / "entries" / entry_id;
    if (!fs::exists(dir)) {
      throw Error(ErrorCode::NotFound, "kb_get: NotFound(" + entry_id + ")");
    }
    KbEntry e;
    e.entry_id = entry_id;

    auto schema_json = nlohmann::json::parse(detail::read_file(dir / "schema.json"));
    auto schema = schema_from_json(schema_json);
    auto meta = nlohmann::json::parse(detail::read_file(dir / "meta.json"));
    const auto app_id = meta.at("app_id").get<std::string>();
    const auto provider_id = meta.at("provider_id").get<std::string>();

    std::ifstream csv(dir / "dataset.csv");
    e.dataset = load_profiles_csv(csv, schema, app_id, provider_id);
    if (meta.contains("tags")) {
      e.tags = meta.at("tags").get<std::map<std::string, std::string>>();
    }
    if (meta.contains("mapping")) {
      FeatureMapping m;
      for (const auto& p : meta.at("mapping").at("pairs")) {
        m.pairs.emplace_back(p.at("from").get<std::string>(), p.at("to").get<std::string>());
      }
      for (const auto& c : meta.at("mapping").at("unit_conversions")) {
        m.unit_conversions.emplace_back(c.at("feature").get<std::string>(),
                                        c.at("multiplier").get<double>());
      }
      e.mapping = std::move(m);
    }

    for (const char* kind : {"MPR", "SVR", "RF"}) {
      const auto path = dir / (std::string("model-") + kind + ".json");
      if (fs::exists(path)) {
        auto a = learners::artifact_from_json(nlohmann::json::parse(detail::read_file(path)));
        e.artifacts.emplace(learners::learner_from_string(kind), std::move(a));
      }
    }
    return e;
  }

  // ---- Function repository: accepted predictors, versioned ----

  std::string repo_key(const std::string& app_id, const std::string& provider_id,
                       learners::LearnerKind learner) const {
    return app_id + "__" + provider_id + "__" + learners::to_string(learner);
  }

  int repo_put(const learners::ModelArtifact& artifact) {
    WriterLock lock(root_);
    const auto dir =
        root_ / "repo" / repo_key(artifact.meta.app_id, artifact.meta.provider_id, artifact.learner);
    fs::create_directories(dir);
    int version = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto stem = e.path().stem().string();  // "v<N>"
      if (stem.size() > 1 && stem[0] == 'v') version = std::max(version, std::stoi(stem.substr(1)));
    }
    ++version;
    detail::write_file(dir / ("v" + std::to_string(version) + ".json"),
                       learners::canonical_json(learners::artifact_to_json(artifact)) + "\n");
    return version;
  }

  learners::ModelArtifact repo_get(const std::string& app_id, const std::string& provider_id,
                                   learners::LearnerKind learner) const {
    const auto dir = root_ / "repo" / repo_key(app_id, provider_id, learner);
    if (!fs::exists(dir)) {
      throw Error(ErrorCode::NotFound, "repo_get: NotFound(" + repo_key(app_id, provider_id, learner) + ")");
    }
    int best = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto stem = e.path().stem().string();
      if (stem.size() > 1 && stem[0] == 'v') best = std::max(best, std::stoi(stem.substr(1)));
    }
    if (best == 0) {
      throw Error(ErrorCode::NotFound, "repo_get: no versions stored");
    }
    return learners::artifact_from_json(
        nlohmann::json::parse(detail::read_file(dir / ("v" + std::to_string(best) + ".json"))));
  }

  std::optional<learners::ModelArtifact> repo_find(const std::string& app_id,
                                                   const std::string& provider_id,
                                                   learners::LearnerKind learner) const {
    try {
      return repo_get(app_id, provider_id, learner);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotFound) return std::nullopt;
      throw;
    }
  }

 private:
  fs::path root_;
};

}  // namespace tamakkon::kb
