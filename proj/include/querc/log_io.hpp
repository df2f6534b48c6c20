#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "querc/workload.hpp"

namespace querc {

struct ReadOptions {
  // Label channels to keep; empty keeps every channel.
  std::vector<std::string> channels;
  // Upgrade per-line rejections to a fatal ParseError.
  bool strict = false;
};

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

struct LogReadResult {
  WorkloadLog log;
  std::vector<Rejection> rejected;
  std::size_t line_count = 0;
};

// One JSON-lines record per line. Malformed lines and records with empty
// query text are rejected individually; ingestion continues unless strict.
LogReadResult read_log(const std::filesystem::path& path, const ReadOptions& options = {});
LogReadResult read_log(std::istream& in, std::string source_id, const ReadOptions& options = {});

void write_log(const WorkloadLog& log, const std::filesystem::path& path);
void write_log(const WorkloadLog& log, std::ostream& out);

nlohmann::json to_json(const LabeledQuery& q);
// Throws Error with a human-readable reason.
LabeledQuery record_from_json(const nlohmann::json& j);

std::string to_json_line(const LabeledQuery& q);

}  // namespace querc
