#include "querc/log_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "querc/errors.hpp"

namespace querc {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

nlohmann::json to_json(const LabeledQuery& q) {
  nlohmann::json j;
  j["query_text"] = q.query_text;
  j["labels"] = nlohmann::json::object();
  for (const auto& [k, v] : q.labels) j["labels"][k] = v;
  if (q.timestamp) j["timestamp"] = *q.timestamp;
  if (q.runtime_ms) j["runtime_ms"] = *q.runtime_ms;
  if (q.error_code) j["error_code"] = *q.error_code;
  return j;
}

std::string to_json_line(const LabeledQuery& q) { return to_json(q).dump(); }

LabeledQuery record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("record is not a JSON object");
  LabeledQuery q;
  auto text = j.find("query_text");
  if (text == j.end()) throw Error("missing query_text");
  if (!text->is_string()) throw Error("query_text is not a string");
  q.query_text = text->get<std::string>();

  if (auto labels = j.find("labels"); labels != j.end() && !labels->is_null()) {
    if (!labels->is_object()) throw Error("labels is not an object");
    for (const auto& [k, v] : labels->items()) {
      if (!v.is_string()) throw Error("label '" + k + "' is not a string");
      q.labels.emplace(k, v.get<std::string>());
    }
  }
  auto read_int = [&](const char* key) -> std::optional<std::int64_t> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) throw Error(std::string(key) + " is not an integer");
    return it->get<std::int64_t>();
  };
  q.timestamp = read_int("timestamp");
  q.runtime_ms = read_int("runtime_ms");
  if (auto e = j.find("error_code"); e != j.end() && !e->is_null()) {
    if (!e->is_string()) throw Error("error_code is not a string");
    q.error_code = e->get<std::string>();
  }
  if (auto reason = validate(q); !reason.empty()) throw Error(reason);
  return q;
}

LogReadResult read_log(std::istream& in, std::string source_id, const ReadOptions& options) {
  LogReadResult result;
  result.log.source_id = std::move(source_id);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string reason;
    try {
      if (is_blank(line)) throw Error("blank line");
      auto j = nlohmann::json::parse(line);
      LabeledQuery q = record_from_json(j);
      if (!options.channels.empty()) {
        std::erase_if(q.labels, [&](const auto& kv) {
          return std::find(options.channels.begin(), options.channels.end(), kv.first) ==
                 options.channels.end();
        });
      }
      result.log.records.push_back(std::move(q));
      continue;
    } catch (const nlohmann::json::exception& e) {
      reason = std::string("malformed JSON: ") + e.what();
    } catch (const Error& e) {
      reason = e.what();
    }
    if (options.strict) throw ParseError(line_no, reason);
    result.rejected.push_back({line_no, std::move(reason)});
  }
  result.line_count = line_no;
  return result;
}

LogReadResult read_log(const std::filesystem::path& path, const ReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read workload log " + path.string());
  return read_log(in, path.string(), options);
}

void write_log(const WorkloadLog& log, std::ostream& out) {
  for (const auto& q : log.records) out << to_json_line(q) << '\n';
}

void write_log(const WorkloadLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write workload log " + path.string());
  write_log(log, out);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace querc
