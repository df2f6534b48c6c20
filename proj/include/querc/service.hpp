#pragma once

// Query-labeling service: per-application (embedder, labeler) pairs that
// augment incoming records, forward them to a sink (inline mode only) and
// append them to a training store.

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "querc/embedder.hpp"
#include "querc/errors.hpp"
#include "querc/labeler.hpp"
#include "querc/workload.hpp"

namespace querc {

enum class AppMode { inline_mode, fork_mode };

struct ClassifierSpec {
  std::string channel;
  std::filesystem::path embedder;
  std::filesystem::path labeler;
};

// sink and training_store: a file path, "-" for stdout, "memory" to keep
// records for inspection, or empty to discard. The training store is always
// kept in memory as well.
struct AppConfig {
  std::string app_id;
  AppMode mode = AppMode::inline_mode;
  std::vector<ClassifierSpec> classifiers;
  std::string sink;
  std::string training_store;
};

// Relative model and output paths resolve against `base_dir`.
std::vector<AppConfig> service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
std::vector<AppConfig> read_service_config(const std::filesystem::path& path);

class StartupError : public Error {
 public:
  explicit StartupError(std::vector<std::string> failures);
  const std::vector<std::string>& failures() const noexcept { return failures_; }

 private:
  std::vector<std::string> failures_;
};

struct ClassifierPair {
  std::string channel;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const ForestModel> labeler;
};

inline constexpr std::string_view kErrorChannel = "querc_error";

// Adds predicted_<channel>, confidence_<channel> and, when the record already
// carries <channel>, mismatch_<channel>. Existing labels are never replaced.
// If any embedding fails the record is returned with only querc_error added.
LabeledQuery label_record(const LabeledQuery& q, const std::vector<ClassifierPair>& pairs);

class Service {
 public:
  // Loads every model once (shared across apps by path). Throws StartupError
  // listing every failure.
  explicit Service(std::vector<AppConfig> configs);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  std::vector<std::string> app_ids() const;
  // Throws Error for an unknown app.
  LabeledQuery process_query(std::string_view app_id, const LabeledQuery& q);

  // Non-destructive: repeated drains return the same records plus any new ones.
  WorkloadLog drain_training_store(std::string_view app_id) const;
  // Records forwarded to a "memory" sink.
  std::vector<LabeledQuery> sink_records(std::string_view app_id) const;
  std::size_t forwarded_count(std::string_view app_id) const;

  std::size_t embedder_instances() const;
  std::size_t labeler_instances() const;

  // Loads a new model set and swaps it in between records. On failure the
  // running models stay in place and StartupError is thrown.
  void reload(std::vector<AppConfig> configs);

 private:
  struct App;
  struct ModelSet;
  std::shared_ptr<ModelSet> load(const std::vector<AppConfig>& configs) const;
  App& app(std::string_view app_id) const;

  std::map<std::string, std::unique_ptr<App>, std::less<>> apps_;
  mutable std::shared_mutex models_mutex_;
  std::shared_ptr<ModelSet> models_;
};

struct ReplayStats {
  std::size_t processed = 0;
  std::size_t rejected = 0;
  std::size_t errors = 0;  // records that gained querc_error
};

// Feeds a JSON-lines log through one app in order.
ReplayStats replay(Service& service, std::string_view app_id, std::istream& in);
ReplayStats replay(Service& service, std::string_view app_id, const std::filesystem::path& path);

// Newline-delimited JSON over a unix stream socket. Requests are
// {"app_id": ..., "record": {...}} (answered with the augmented record),
// {"command": "reload"} (re-reads `config_path`), {"command": "stats"} and
// {"command": "shutdown"}. Returns when shutdown is received or `stop` is set.
void serve_socket(Service& service, const std::filesystem::path& socket_path, const std::filesystem::path& config_path,
                  const std::atomic<bool>* stop = nullptr);

}  // namespace querc
