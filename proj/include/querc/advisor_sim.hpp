#pragma once

// Desk-scale index-advisor loop used to score workload summaries.
//
// A synthetic schema with independent uniform columns, SQL rendered from
// templates, a row-count cost model, and a greedy advisor whose work is
// counted in cost-model evaluations instead of wall-clock time.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "querc/summarizer.hpp"
#include "querc/workload.hpp"

namespace querc::sim {

inline constexpr std::string_view kTemplateChannel = "template";
inline constexpr std::string_view kUserChannel = "user";
inline constexpr std::string_view kAccountChannel = "account";

struct Column {
  std::string name;
  std::uint64_t distinct_count = 1;
};

struct Table {
  std::string name;
  std::uint64_t row_count = 1;
  std::vector<Column> columns;

  const Column* column(std::string_view name) const;
};

struct SyntheticSchema {
  std::vector<Table> tables;

  const Table* table(std::string_view name) const;
};

// Filter predicate operators a template can render.
enum class FilterOp { eq, lt, gt, between, in, like };

struct QueryTemplate {
  std::string id;
  std::string table;
  std::vector<std::string> filter_columns;
  std::vector<FilterOp> filter_ops;     // empty: all equality
  std::optional<std::string> group_by;
  std::string select = "*";             // projection; with group_by it follows the group column
  std::optional<std::string> order_by;
  std::optional<std::uint64_t> limit;
  std::uint64_t literal_seed = 0;
};

// Each user owns a weight per template; a drawn query goes to a user with
// probability proportional to that user's weight for the drawn template.
struct UserProfile {
  std::string name;
  std::string account;
  std::vector<double> weights;
};

struct WorkloadSpec {
  SyntheticSchema schema;
  std::vector<QueryTemplate> templates;
  std::vector<double> mix;  // empty: uniform
  std::vector<UserProfile> users;

  const QueryTemplate* find_template(std::string_view id) const;
  // Throws Error when a reference or count invariant is violated.
  void validate() const;
};

nlohmann::json to_json(const WorkloadSpec& spec);
WorkloadSpec spec_from_json(const nlohmann::json& j);
WorkloadSpec read_spec(const std::filesystem::path& path);
void write_spec(const WorkloadSpec& spec, const std::filesystem::path& path);

// Literal values fall in [1, distinct_count] of the filtered column when `table` is given.
std::string render(const QueryTemplate& t, std::uint64_t literal_seed, const Table* table = nullptr);

// n i.i.d. queries; `mix` overrides spec.mix when non-empty and must sum to 1.
WorkloadLog generate_workload(const WorkloadSpec& spec, std::size_t n, std::uint64_t seed,
                              std::span<const double> mix = {});

struct IndexDef {
  std::string table;
  std::vector<std::string> columns;

  std::size_t units() const { return columns.size(); }
  auto operator<=>(const IndexDef&) const = default;
  std::string to_string() const;
};

struct IndexConfiguration {
  std::set<IndexDef> indexes;
  std::size_t units() const;
};

// Throws Error when the record's template label is missing or unknown.
double query_cost(const LabeledQuery& q, const IndexConfiguration& config, const WorkloadSpec& spec);
double workload_cost(const WorkloadLog& log, const IndexConfiguration& config, const WorkloadSpec& spec);

struct AdvisorResult {
  IndexConfiguration config;
  std::uint64_t work_units = 0;  // query_cost evaluations performed
  double workload_cost = 0.0;    // cost of the advisor's input under `config`
};

// Greedy by cost reduction per unit; every round re-prices every
// (candidate, query) pair. Ties go to the lexicographically first candidate.
AdvisorResult recommend_indexes(const WorkloadLog& log, std::size_t budget_units, const WorkloadSpec& spec);

struct EvaluationReport {
  double cost_no_indexes = 0.0;
  double cost_full_indexes = 0.0;     // full workload priced under the full-log recommendation
  double cost_summary_indexes = 0.0;  // full workload priced under the summary recommendation
  std::uint64_t advisor_time_full = 0;
  std::uint64_t advisor_time_summary = 0;
  double ratio = 0.0;
  std::size_t budget_units = 0;
  std::size_t full_queries = 0;
  std::size_t summary_queries = 0;
  IndexConfiguration full_config;
  IndexConfiguration summary_config;
};

EvaluationReport evaluate_summary(const WorkloadLog& full, const WorkloadLog& summary, std::size_t budget_units,
                                  const WorkloadSpec& spec);
EvaluationReport evaluate_summary(const WorkloadLog& full, const WorkloadSummary& summary, std::size_t budget_units,
                                  const WorkloadSpec& spec);

nlohmann::json to_json(const EvaluationReport& report);
nlohmann::json to_json(const IndexConfiguration& config);
std::string format_table(const EvaluationReport& report);

// Built-in specs.
//
// single_schema: one schema (tables and columns named with `prefix`) and
// eight structurally distinct templates, uniform mix, no users.
WorkloadSpec single_schema_spec(const std::string& prefix, std::uint64_t variant = 0);
// tenants: `accounts` disjoint schemas with eight templates each and
// `users_per_account` users whose template mixes overlap within an account.
WorkloadSpec tenant_spec(std::size_t accounts = 4, std::size_t users_per_account = 5);
// distinct_users: `users` users, each owning two templates nobody else uses.
WorkloadSpec distinct_user_spec(std::size_t users = 8);

std::vector<std::string> preset_names();
// Throws Error for unknown names.
WorkloadSpec preset_spec(std::string_view name);

}  // namespace querc::sim
