#include "querc/service.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <charconv>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "querc/log_io.hpp"

namespace querc {

using nlohmann::json;

namespace {

std::string resolve(const std::string& value, const std::filesystem::path& base) {
  if (value.empty() || value == "-" || value == "memory") return value;
  std::filesystem::path p(value);
  return p.is_absolute() ? value : (base / p).string();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : std::string(sep)) + p;
  return out;
}

std::string format_confidence(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::vector<AppConfig> service_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    const json& apps = j.is_object() && j.contains("apps") ? j.at("apps") : j;
    if (!apps.is_array()) throw Error("service config must be an array of apps");
    std::vector<AppConfig> out;
    for (const auto& a : apps) {
      AppConfig c;
      c.app_id = a.at("app_id").get<std::string>();
      const std::string mode = a.value("mode", std::string("inline"));
      if (mode == "inline") {
        c.mode = AppMode::inline_mode;
      } else if (mode == "fork") {
        c.mode = AppMode::fork_mode;
      } else {
        throw Error("app " + c.app_id + ": unknown mode '" + mode + "'");
      }
      for (const auto& k : a.value("classifiers", json::array())) {
        c.classifiers.push_back({k.at("channel").get<std::string>(),
                                 resolve(k.at("embedder").get<std::string>(), base_dir),
                                 resolve(k.at("labeler").get<std::string>(), base_dir)});
      }
      c.sink = resolve(a.value("sink", std::string()), base_dir);
      c.training_store = resolve(a.value("training_store", std::string()), base_dir);
      out.push_back(std::move(c));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed service config: ") + e.what());
  }
}

std::vector<AppConfig> read_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open service config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed service config " + path.string() + ": " + e.what());
  }
  return service_config_from_json(j, path.parent_path());
}

StartupError::StartupError(std::vector<std::string> failures)
    : Error("service startup failed: " + join(failures, "; ")), failures_(std::move(failures)) {}

LabeledQuery label_record(const LabeledQuery& q, const std::vector<ClassifierPair>& pairs) {
  LabeledQuery out = q;
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(pairs.size());
  try {
    for (const auto& p : pairs) vectors.push_back(p.embedder->embed(q.query_text));
  } catch (const Error& e) {
    out.labels.emplace(std::string(kErrorChannel), e.what());
    return out;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const ClassifierPair& p = pairs[i];
    const Prediction pred = predict(*p.labeler, vectors[i]);
    out.labels.emplace("predicted_" + p.channel, pred.label);
    out.labels.emplace("confidence_" + p.channel, format_confidence(pred.confidence));
    if (const std::string* assigned = q.label(p.channel)) {
      out.labels.emplace("mismatch_" + p.channel, *assigned != pred.label ? "true" : "false");
    }
  }
  return out;
}

struct Service::ModelSet {
  struct AppModels {
    AppMode mode = AppMode::inline_mode;
    std::vector<ClassifierPair> pairs;
  };
  std::map<std::string, AppModels, std::less<>> apps;
  std::size_t embedders = 0;
  std::size_t labelers = 0;
};

struct Service::App {
  AppConfig config;
  std::mutex process_mutex;
  mutable std::shared_mutex store_mutex;
  std::vector<LabeledQuery> store;
  std::vector<LabeledQuery> sink_memory;
  std::size_t forwarded = 0;
  std::ofstream store_file;
  std::ofstream sink_file;
};

namespace {

void open_output(std::ofstream& out, const std::string& dest, const std::string& what, std::vector<std::string>& fails) {
  if (dest.empty() || dest == "-" || dest == "memory") return;
  out.open(dest, std::ios::app);
  if (!out) fails.push_back(what + ": cannot open " + dest);
}

}  // namespace

std::shared_ptr<Service::ModelSet> Service::load(const std::vector<AppConfig>& configs) const {
  auto set = std::make_shared<ModelSet>();
  std::vector<std::string> failures;
  std::map<std::string, std::shared_ptr<const Embedder>> embedders;
  std::map<std::string, std::shared_ptr<const ForestModel>> labelers;
  std::set<std::string> bad_paths;

  auto key = [](const std::filesystem::path& p) {
    std::error_code ec;
    auto canon = std::filesystem::weakly_canonical(p, ec);
    return ec ? p.string() : canon.string();
  };

  for (const auto& c : configs) {
    if (set->apps.count(c.app_id)) {
      failures.push_back("duplicate app_id '" + c.app_id + "'");
      continue;
    }
    ModelSet::AppModels models;
    models.mode = c.mode;
    std::set<std::string> channels;
    for (const auto& spec : c.classifiers) {
      const std::string where = "app " + c.app_id + ", channel " + spec.channel;
      if (!channels.insert(spec.channel).second) {
        failures.push_back(where + ": duplicate channel");
        continue;
      }
      ClassifierPair pair{spec.channel, nullptr, nullptr};
      const std::string ek = key(spec.embedder), lk = key(spec.labeler);
      if (auto it = embedders.find(ek); it != embedders.end()) {
        pair.embedder = it->second;
      } else {
        try {
          pair.embedder = load_embedder(spec.embedder);
          embedders.emplace(ek, pair.embedder);
        } catch (const Error& e) {
          failures.push_back(where + ": embedder " + spec.embedder.string() + ": " + e.what());
        }
      }
      if (auto it = labelers.find(lk); it != labelers.end()) {
        pair.labeler = it->second;
      } else {
        try {
          pair.labeler = std::make_shared<const ForestModel>(
              ForestModel::from_artifact(load_model(spec.labeler, ModelKind::forest_classifier)));
          labelers.emplace(lk, pair.labeler);
        } catch (const Error& e) {
          failures.push_back(where + ": labeler " + spec.labeler.string() + ": " + e.what());
        }
      }
      if (pair.embedder && pair.labeler && pair.embedder->dimension() != pair.labeler->dimension) {
        failures.push_back(where + ": embedder dimension " + std::to_string(pair.embedder->dimension()) +
                           " does not match labeler dimension " + std::to_string(pair.labeler->dimension));
      }
      models.pairs.push_back(std::move(pair));
    }
    set->apps.emplace(c.app_id, std::move(models));
  }
  if (!failures.empty()) throw StartupError(std::move(failures));
  set->embedders = embedders.size();
  set->labelers = labelers.size();
  return set;
}

Service::Service(std::vector<AppConfig> configs) {
  models_ = load(configs);
  std::vector<std::string> failures;
  for (auto& c : configs) {
    auto a = std::make_unique<App>();
    open_output(a->store_file, c.training_store, "app " + c.app_id + " training store", failures);
    open_output(a->sink_file, c.sink, "app " + c.app_id + " sink", failures);
    a->config = std::move(c);
    apps_.emplace(a->config.app_id, std::move(a));
  }
  if (!failures.empty()) throw StartupError(std::move(failures));
}

Service::~Service() = default;

std::vector<std::string> Service::app_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, a] : apps_) ids.push_back(id);
  return ids;
}

Service::App& Service::app(std::string_view app_id) const {
  auto it = apps_.find(app_id);
  if (it == apps_.end()) throw Error("unknown app '" + std::string(app_id) + "'");
  return *it->second;
}

LabeledQuery Service::process_query(std::string_view app_id, const LabeledQuery& q) {
  App& a = app(app_id);
  std::lock_guard process_lock(a.process_mutex);
  std::shared_ptr<ModelSet> models;
  {
    std::shared_lock lock(models_mutex_);
    models = models_;
  }
  const auto& am = models->apps.find(app_id)->second;
  LabeledQuery out = label_record(q, am.pairs);

  const bool forward = am.mode == AppMode::inline_mode;
  {
    std::unique_lock lock(a.store_mutex);
    a.store.push_back(out);
    if (forward) {
      ++a.forwarded;
      if (a.config.sink == "memory") a.sink_memory.push_back(out);
    }
  }
  std::string line;
  auto emit = [&](std::ostream& os) {
    if (line.empty()) line = to_json_line(out);
    os << line << '\n' << std::flush;
  };
  if (a.store_file.is_open()) emit(a.store_file);
  if (a.config.training_store == "-") emit(std::cout);
  if (forward && a.sink_file.is_open()) emit(a.sink_file);
  if (forward && a.config.sink == "-") emit(std::cout);
  return out;
}

WorkloadLog Service::drain_training_store(std::string_view app_id) const {
  const App& a = app(app_id);
  std::shared_lock lock(a.store_mutex);
  WorkloadLog log;
  log.records = a.store;
  log.source_id = "training_store:" + a.config.app_id;
  return log;
}

std::vector<LabeledQuery> Service::sink_records(std::string_view app_id) const {
  const App& a = app(app_id);
  std::shared_lock lock(a.store_mutex);
  return a.sink_memory;
}

std::size_t Service::forwarded_count(std::string_view app_id) const {
  const App& a = app(app_id);
  std::shared_lock lock(a.store_mutex);
  return a.forwarded;
}

std::size_t Service::embedder_instances() const {
  std::shared_lock lock(models_mutex_);
  return models_->embedders;
}

std::size_t Service::labeler_instances() const {
  std::shared_lock lock(models_mutex_);
  return models_->labelers;
}

void Service::reload(std::vector<AppConfig> configs) {
  std::set<std::string> ids;
  for (const auto& c : configs) ids.insert(c.app_id);
  std::vector<std::string> failures;
  for (const auto& [id, a] : apps_) {
    if (!ids.count(id)) failures.push_back("reload drops app '" + id + "'");
  }
  for (const auto& id : ids) {
    if (!apps_.count(id)) failures.push_back("reload adds app '" + id + "'");
  }
  if (!failures.empty()) throw StartupError(std::move(failures));
  auto fresh = load(configs);
  std::unique_lock lock(models_mutex_);
  models_ = std::move(fresh);
}

ReplayStats replay(Service& service, std::string_view app_id, std::istream& in) {
  ReplayStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LabeledQuery q;
    try {
      q = record_from_json(json::parse(line));
    } catch (const std::exception& e) {
      std::cerr << "line " << line_no << ": rejected: " << e.what() << '\n';
      ++stats.rejected;
      continue;
    }
    const LabeledQuery out = service.process_query(app_id, q);
    ++stats.processed;
    if (out.label(kErrorChannel) && !q.label(kErrorChannel)) ++stats.errors;
  }
  return stats;
}

ReplayStats replay(Service& service, std::string_view app_id, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return replay(service, app_id, in);
}

namespace {

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

bool write_all(int fd, const std::string& s) {
  std::size_t done = 0;
  while (done < s.size()) {
    const ssize_t n = ::send(fd, s.data() + done, s.size() - done, MSG_NOSIGNAL);
    if (n <= 0) return false;
    done += static_cast<std::size_t>(n);
  }
  return true;
}

json handle_request(Service& service, const std::string& line, const std::filesystem::path& config_path,
                    bool& shutdown) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::exception& e) {
    return {{"error", std::string("malformed request: ") + e.what()}};
  }
  try {
    if (req.contains("command")) {
      const std::string cmd = req.at("command").get<std::string>();
      if (cmd == "shutdown") {
        shutdown = true;
        return {{"ok", true}};
      }
      if (cmd == "reload") {
        service.reload(read_service_config(config_path));
        return {{"ok", true}};
      }
      if (cmd == "stats") {
        json apps = json::object();
        for (const auto& id : service.app_ids()) {
          apps[id] = {{"stored", service.drain_training_store(id).size()}, {"forwarded", service.forwarded_count(id)}};
        }
        return {{"embedder_instances", service.embedder_instances()},
                {"labeler_instances", service.labeler_instances()},
                {"apps", apps}};
      }
      return {{"error", "unknown command '" + cmd + "'"}};
    }
    const LabeledQuery q = record_from_json(req.at("record"));
    return to_json(service.process_query(req.at("app_id").get<std::string>(), q));
  } catch (const std::exception& e) {
    return {{"error", e.what()}};
  }
}

}  // namespace

void serve_socket(Service& service, const std::filesystem::path& socket_path, const std::filesystem::path& config_path,
                  const std::atomic<bool>* stop) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string sp = socket_path.string();
  if (sp.size() >= sizeof(addr.sun_path)) throw Error("socket path too long: " + sp);
  std::memcpy(addr.sun_path, sp.c_str(), sp.size() + 1);

  Fd server(::socket(AF_UNIX, SOCK_STREAM, 0));
  if (server.get() < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  ::unlink(sp.c_str());
  if (::bind(server.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error("bind " + sp + ": " + std::strerror(errno));
  }
  if (::listen(server.get(), 8) != 0) throw Error(std::string("listen: ") + std::strerror(errno));

  bool shutdown = false;
  auto stopped = [&] { return shutdown || (stop && stop->load()); };
  while (!stopped()) {
    pollfd pfd{server.get(), POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    Fd client(::accept(server.get(), nullptr, nullptr));
    if (client.get() < 0) continue;
    std::string buffer;
    char chunk[4096];
    while (!stopped()) {
      pollfd cfd{client.get(), POLLIN, 0};
      if (::poll(&cfd, 1, 100) <= 0) continue;
      const ssize_t n = ::recv(client.get(), chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t pos;
      bool ok = true;
      while (ok && (pos = buffer.find('\n')) != std::string::npos) {
        const std::string line = buffer.substr(0, pos);
        buffer.erase(0, pos + 1);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ok = write_all(client.get(), handle_request(service, line, config_path, shutdown).dump() + "\n");
        if (shutdown) break;
      }
      if (!ok || shutdown) break;
    }
  }
  ::unlink(sp.c_str());
}

}  // namespace querc
