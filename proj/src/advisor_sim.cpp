#include "querc/advisor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "querc/errors.hpp"
#include "querc/random.hpp"

namespace querc::sim {

using nlohmann::json;

const Column* Table::column(std::string_view name_) const {
  for (const auto& c : columns) {
    if (c.name == name_) return &c;
  }
  return nullptr;
}

const Table* SyntheticSchema::table(std::string_view name) const {
  for (const auto& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const QueryTemplate* WorkloadSpec::find_template(std::string_view id) const {
  for (const auto& t : templates) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

namespace {

void check_mix(std::span<const double> mix, std::size_t templates) {
  if (mix.size() != templates) {
    throw Error("template mix has " + std::to_string(mix.size()) + " weights for " + std::to_string(templates) +
                " templates");
  }
  double sum = 0.0;
  for (double w : mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("template weights must be finite and non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("template weights sum to " + std::to_string(sum) + ", expected 1");
}

const char* op_name(FilterOp op) {
  switch (op) {
    case FilterOp::eq: return "=";
    case FilterOp::lt: return "<";
    case FilterOp::gt: return ">";
    case FilterOp::between: return "between";
    case FilterOp::in: return "in";
    case FilterOp::like: return "like";
  }
  return "=";
}

FilterOp parse_op(const std::string& s) {
  for (FilterOp op : {FilterOp::eq, FilterOp::lt, FilterOp::gt, FilterOp::between, FilterOp::in, FilterOp::like}) {
    if (s == op_name(op)) return op;
  }
  throw Error("unknown filter operator '" + s + "'");
}

}  // namespace

void WorkloadSpec::validate() const {
  if (templates.empty()) throw Error("workload spec has no templates");
  std::set<std::string, std::less<>> table_names;
  for (const auto& t : schema.tables) {
    if (!table_names.insert(t.name).second) throw Error("duplicate table '" + t.name + "'");
    std::set<std::string, std::less<>> cols;
    for (const auto& c : t.columns) {
      if (!cols.insert(c.name).second) throw Error("duplicate column '" + c.name + "' in " + t.name);
      if (c.distinct_count < 1 || c.distinct_count > t.row_count) {
        throw Error("column " + t.name + "." + c.name + " needs 1 <= distinct_count <= row_count");
      }
    }
  }
  std::set<std::string, std::less<>> ids;
  for (const auto& q : templates) {
    if (!ids.insert(q.id).second) throw Error("duplicate template id '" + q.id + "'");
    const Table* t = schema.table(q.table);
    if (!t) throw Error("template " + q.id + " references unknown table '" + q.table + "'");
    if (q.filter_columns.empty()) throw Error("template " + q.id + " has no filter columns");
    for (const auto& c : q.filter_columns) {
      if (!t->column(c)) throw Error("template " + q.id + " references unknown column '" + c + "'");
    }
    if (!q.filter_ops.empty() && q.filter_ops.size() != q.filter_columns.size()) {
      throw Error("template " + q.id + " needs one operator per filter column");
    }
    for (const auto* opt : {&q.group_by, &q.order_by}) {
      if (*opt && !t->column(**opt)) throw Error("template " + q.id + " references unknown column '" + **opt + "'");
    }
  }
  if (!mix.empty()) check_mix(mix, templates.size());
  for (const auto& u : users) {
    if (u.weights.size() != templates.size()) {
      throw Error("user " + u.name + " has " + std::to_string(u.weights.size()) + " weights for " +
                  std::to_string(templates.size()) + " templates");
    }
    for (double w : u.weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error("user " + u.name + " has a negative or non-finite weight");
    }
  }
  if (!users.empty()) {
    for (std::size_t t = 0; t < templates.size(); ++t) {
      double total = 0.0;
      for (const auto& u : users) total += u.weights[t];
      if (total <= 0.0) throw Error("no user runs template " + templates[t].id);
    }
  }
}

json to_json(const WorkloadSpec& spec) {
  json tables = json::array();
  for (const auto& t : spec.schema.tables) {
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"distinct_count", c.distinct_count}});
    tables.push_back({{"name", t.name}, {"row_count", t.row_count}, {"columns", cols}});
  }
  json templates = json::array();
  for (const auto& q : spec.templates) {
    json j = {{"id", q.id}, {"table", q.table}, {"filter_columns", q.filter_columns}, {"select", q.select},
              {"literal_seed", q.literal_seed}};
    if (!q.filter_ops.empty()) {
      json ops = json::array();
      for (FilterOp op : q.filter_ops) ops.push_back(op_name(op));
      j["filter_ops"] = ops;
    }
    if (q.group_by) j["group_by"] = *q.group_by;
    if (q.order_by) j["order_by"] = *q.order_by;
    if (q.limit) j["limit"] = *q.limit;
    templates.push_back(std::move(j));
  }
  json users = json::array();
  for (const auto& u : spec.users) users.push_back({{"name", u.name}, {"account", u.account}, {"weights", u.weights}});
  json out = {{"tables", tables}, {"templates", templates}};
  if (!spec.mix.empty()) out["mix"] = spec.mix;
  if (!spec.users.empty()) out["users"] = users;
  return out;
}

WorkloadSpec spec_from_json(const json& j) {
  try {
    WorkloadSpec spec;
    for (const auto& t : j.at("tables")) {
      Table table{t.at("name").get<std::string>(), t.at("row_count").get<std::uint64_t>(), {}};
      for (const auto& c : t.at("columns")) {
        table.columns.push_back({c.at("name").get<std::string>(), c.at("distinct_count").get<std::uint64_t>()});
      }
      spec.schema.tables.push_back(std::move(table));
    }
    for (const auto& q : j.at("templates")) {
      QueryTemplate t;
      t.id = q.at("id").get<std::string>();
      t.table = q.at("table").get<std::string>();
      t.filter_columns = q.at("filter_columns").get<std::vector<std::string>>();
      if (q.contains("filter_ops")) {
        for (const auto& op : q.at("filter_ops")) t.filter_ops.push_back(parse_op(op.get<std::string>()));
      }
      if (q.contains("group_by")) t.group_by = q.at("group_by").get<std::string>();
      if (q.contains("order_by")) t.order_by = q.at("order_by").get<std::string>();
      if (q.contains("limit")) t.limit = q.at("limit").get<std::uint64_t>();
      t.select = q.value("select", std::string("*"));
      t.literal_seed = q.value("literal_seed", std::uint64_t{0});
      spec.templates.push_back(std::move(t));
    }
    if (j.contains("mix")) spec.mix = j.at("mix").get<std::vector<double>>();
    if (j.contains("users")) {
      for (const auto& u : j.at("users")) {
        spec.users.push_back({u.at("name").get<std::string>(), u.value("account", std::string()),
                              u.at("weights").get<std::vector<double>>()});
      }
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed workload spec: ") + e.what());
  }
}

WorkloadSpec read_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open workload spec " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed workload spec " + path.string() + ": " + e.what());
  }
  return spec_from_json(j);
}

void write_spec(const WorkloadSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(spec).dump(2) << '\n';
}

std::string render(const QueryTemplate& t, std::uint64_t literal_seed, const Table* table) {
  Rng rng(literal_seed);
  std::uint64_t domain = 100000;
  auto number = [&] { return std::to_string(1 + rng.below(domain)); };
  std::ostringstream sql;
  sql << "SELECT ";
  if (t.group_by) sql << *t.group_by << ", ";
  sql << t.select << " FROM " << t.table << " WHERE ";
  for (std::size_t i = 0; i < t.filter_columns.size(); ++i) {
    if (i) sql << " AND ";
    const std::string& c = t.filter_columns[i];
    const Column* col = table ? table->column(c) : nullptr;
    domain = col ? col->distinct_count : 100000;
    const FilterOp op = t.filter_ops.empty() ? FilterOp::eq : t.filter_ops[i];
    switch (op) {
      case FilterOp::eq: sql << c << " = " << number(); break;
      case FilterOp::lt: sql << c << " < " << number(); break;
      case FilterOp::gt: sql << c << " > " << number(); break;
      case FilterOp::between: {
        const std::uint64_t a = 1 + rng.below(domain), b = 1 + rng.below(domain);
        sql << c << " BETWEEN " << std::min(a, b) << " AND " << std::max(a, b);
        break;
      }
      case FilterOp::in: {
        const std::string a = number(), b = number();
        sql << c << " IN (" << a << ", " << b << ", " << number() << ")";
        break;
      }
      case FilterOp::like: {
        std::string pattern;
        for (int k = 0; k < 3; ++k) pattern += static_cast<char>('a' + rng.below(26));
        sql << c << " LIKE '" << pattern << "%'";
        break;
      }
    }
  }
  if (t.group_by) sql << " GROUP BY " << *t.group_by;
  if (t.order_by) sql << " ORDER BY " << *t.order_by;
  if (t.limit) sql << " LIMIT " << *t.limit;
  return sql.str();
}

WorkloadLog generate_workload(const WorkloadSpec& spec, std::size_t n, std::uint64_t seed,
                              std::span<const double> mix) {
  spec.validate();
  if (n == 0) throw Error("workload size must be at least 1");
  std::vector<double> weights;
  if (!mix.empty()) {
    check_mix(mix, spec.templates.size());
    weights.assign(mix.begin(), mix.end());
  } else if (!spec.mix.empty()) {
    weights = spec.mix;
  } else {
    weights.assign(spec.templates.size(), 1.0 / static_cast<double>(spec.templates.size()));
  }
  std::vector<double> cdf(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cdf.begin());

  Rng rng(seed);
  WorkloadLog log;
  log.source_id = "generated:" + std::to_string(seed);
  log.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * cdf.back();
    std::size_t t = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (t >= cdf.size()) t = cdf.size() - 1;
    while (weights[t] == 0.0) --t;
    const QueryTemplate& tmpl = spec.templates[t];

    LabeledQuery q;
    q.query_text = render(tmpl, derive_seed(tmpl.literal_seed, rng.next()), spec.schema.table(tmpl.table));
    q.labels.emplace(std::string(kTemplateChannel), tmpl.id);
    if (!spec.users.empty()) {
      double total = 0.0;
      for (const auto& user : spec.users) total += user.weights[t];
      double r = rng.uniform() * total;
      std::size_t chosen = spec.users.size();
      for (std::size_t k = 0; k < spec.users.size(); ++k) {
        if (spec.users[k].weights[t] <= 0.0) continue;
        chosen = k;
        r -= spec.users[k].weights[t];
        if (r < 0.0) break;
      }
      q.labels.emplace(std::string(kUserChannel), spec.users[chosen].name);
      if (!spec.users[chosen].account.empty()) {
        q.labels.emplace(std::string(kAccountChannel), spec.users[chosen].account);
      }
    }
    q.timestamp = static_cast<std::int64_t>(i);
    log.records.push_back(std::move(q));
  }
  return log;
}

std::string IndexDef::to_string() const {
  std::string s = table + "(";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) s += ", ";
    s += columns[i];
  }
  return s + ")";
}

std::size_t IndexConfiguration::units() const {
  std::size_t total = 0;
  for (const auto& idx : indexes) total += idx.units();
  return total;
}

namespace {

const QueryTemplate& template_of(const LabeledQuery& q, const WorkloadSpec& spec) {
  const std::string* id = q.label(kTemplateChannel);
  if (!id) throw Error("query has no template label; only generated workloads can be priced");
  const QueryTemplate* t = spec.find_template(*id);
  if (!t) throw Error("unknown template '" + *id + "'");
  return *t;
}

double template_cost(const QueryTemplate& t, const IndexConfiguration& config, const SyntheticSchema& schema) {
  const Table& table = *schema.table(t.table);
  const double rows = static_cast<double>(table.row_count);
  double best = rows;
  bool group_led = false;
  for (const auto& idx : config.indexes) {
    if (idx.table != t.table) continue;
    if (t.group_by && !idx.columns.empty() && idx.columns.front() == *t.group_by) group_led = true;
    double selectivity = 1.0;
    std::size_t matched = 0;
    for (const auto& c : idx.columns) {
      if (std::find(t.filter_columns.begin(), t.filter_columns.end(), c) == t.filter_columns.end()) break;
      const Column* col = table.column(c);
      if (!col) break;
      selectivity *= static_cast<double>(col->distinct_count);
      ++matched;
    }
    if (matched > 0) best = std::min(best, std::max(1.0, rows / selectivity));
  }
  if (t.group_by && !group_led) best *= 1.1;
  return best;
}

}  // namespace

double query_cost(const LabeledQuery& q, const IndexConfiguration& config, const WorkloadSpec& spec) {
  return template_cost(template_of(q, spec), config, spec.schema);
}

double workload_cost(const WorkloadLog& log, const IndexConfiguration& config, const WorkloadSpec& spec) {
  double total = 0.0;
  for (const auto& q : log.records) total += query_cost(q, config, spec);
  return total;
}

AdvisorResult recommend_indexes(const WorkloadLog& log, std::size_t budget_units, const WorkloadSpec& spec) {
  AdvisorResult result;
  std::set<IndexDef> candidates;
  for (const auto& q : log.records) {
    const QueryTemplate& t = template_of(q, spec);
    for (std::size_t m = 1; m <= t.filter_columns.size(); ++m) {
      candidates.insert({t.table, {t.filter_columns.begin(), t.filter_columns.begin() + m}});
    }
  }

  auto price = [&](const IndexConfiguration& config) {
    double total = 0.0;
    for (const auto& q : log.records) {
      total += query_cost(q, config, spec);
      ++result.work_units;
    }
    return total;
  };

  double current = price(result.config);
  std::size_t remaining = budget_units;
  while (remaining > 0) {
    const IndexDef* best = nullptr;
    double best_score = 0.0;
    double best_cost = current;
    for (const auto& c : candidates) {
      if (result.config.indexes.count(c) || c.units() > remaining) continue;
      IndexConfiguration trial = result.config;
      trial.indexes.insert(c);
      const double cost = price(trial);
      const double gain = current - cost;
      if (gain <= 0.0) continue;
      const double score = gain / static_cast<double>(c.units());
      if (!best || score > best_score) {
        best = &c;
        best_score = score;
        best_cost = cost;
      }
    }
    if (!best) break;
    result.config.indexes.insert(*best);
    remaining -= best->units();
    current = best_cost;
  }
  result.workload_cost = current;
  return result;
}

EvaluationReport evaluate_summary(const WorkloadLog& full, const WorkloadLog& summary, std::size_t budget_units,
                                  const WorkloadSpec& spec) {
  EvaluationReport report;
  const AdvisorResult on_full = recommend_indexes(full, budget_units, spec);
  const AdvisorResult on_summary = recommend_indexes(summary, budget_units, spec);
  report.cost_no_indexes = workload_cost(full, {}, spec);
  report.cost_full_indexes = workload_cost(full, on_full.config, spec);
  report.cost_summary_indexes = workload_cost(full, on_summary.config, spec);
  report.advisor_time_full = on_full.work_units;
  report.advisor_time_summary = on_summary.work_units;
  report.ratio = report.cost_summary_indexes / report.cost_full_indexes;
  report.budget_units = budget_units;
  report.full_queries = full.size();
  report.summary_queries = summary.size();
  report.full_config = on_full.config;
  report.summary_config = on_summary.config;
  return report;
}

EvaluationReport evaluate_summary(const WorkloadLog& full, const WorkloadSummary& summary, std::size_t budget_units,
                                  const WorkloadSpec& spec) {
  return evaluate_summary(full, summary.witness_log(), budget_units, spec);
}

json to_json(const IndexConfiguration& config) {
  json indexes = json::array();
  for (const auto& idx : config.indexes) indexes.push_back({{"table", idx.table}, {"columns", idx.columns}});
  return {{"indexes", indexes}, {"units", config.units()}};
}

json to_json(const EvaluationReport& r) {
  return {{"cost_no_indexes", r.cost_no_indexes},
          {"cost_full_indexes", r.cost_full_indexes},
          {"cost_summary_indexes", r.cost_summary_indexes},
          {"advisor_time_full", r.advisor_time_full},
          {"advisor_time_summary", r.advisor_time_summary},
          {"ratio", r.ratio},
          {"budget_units", r.budget_units},
          {"full_queries", r.full_queries},
          {"summary_queries", r.summary_queries},
          {"full_config", to_json(r.full_config)},
          {"summary_config", to_json(r.summary_config)}};
}

std::string format_table(const EvaluationReport& r) {
  auto configs = [](const IndexConfiguration& c) {
    std::string s;
    for (const auto& idx : c.indexes) s += (s.empty() ? "" : " ") + idx.to_string();
    return s.empty() ? std::string("(none)") : s;
  };
  auto num = [](double v) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(v == std::floor(v) ? 0 : 4) << v;
    return o.str();
  };
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"queries (full)", std::to_string(r.full_queries)},
      {"queries (summary)", std::to_string(r.summary_queries)},
      {"budget units", std::to_string(r.budget_units)},
      {"cost, no indexes", num(r.cost_no_indexes)},
      {"cost, full-log indexes", num(r.cost_full_indexes)},
      {"cost, summary indexes", num(r.cost_summary_indexes)},
      {"ratio", num(r.ratio)},
      {"advisor work (full)", std::to_string(r.advisor_time_full)},
      {"advisor work (summary)", std::to_string(r.advisor_time_summary)},
      {"indexes (full)", configs(r.full_config)},
      {"indexes (summary)", configs(r.summary_config)},
  };
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream out;
  for (const auto& [k, v] : rows) out << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
  return out.str();
}

namespace {

Table make_table(const std::string& prefix, const std::string& name, std::uint64_t rows,
                 std::vector<std::pair<std::string, std::uint64_t>> cols) {
  Table t{prefix + "_" + name, rows, {}};
  for (auto& [c, d] : cols) t.columns.push_back({prefix + "_" + c, std::min(d, rows)});
  return t;
}

SyntheticSchema make_schema(const std::string& p, std::uint64_t variant) {
  const std::uint64_t s = variant + 1;
  SyntheticSchema schema;
  schema.tables.push_back(make_table(p, "orders", 1000000 * s,
                                     {{"custkey", 100000 * s},
                                      {"status", 3},
                                      {"odate", 2500},
                                      {"priority", 5},
                                      {"clerk", 1000},
                                      {"total", 1000000 * s}}));
  schema.tables.push_back(make_table(p, "lineitem", 6000000 * s,
                                     {{"orderkey", 1500000 * s},
                                      {"partkey", 200000 * s},
                                      {"suppkey", 10000 * s},
                                      {"shipdate", 2500},
                                      {"quantity", 50},
                                      {"flag", 3}}));
  schema.tables.push_back(make_table(p, "customer", 150000 * s,
                                     {{"nation", 25}, {"segment", 5}, {"phone", 150000 * s}, {"balance", 100000}}));
  schema.tables.push_back(
      make_table(p, "part", 200000 * s, {{"brand", 25}, {"type", 150}, {"size", 50}, {"container", 40}}));
  return schema;
}

// Eight structurally distinct shapes; the names differ per prefix only.
std::vector<QueryTemplate> make_templates(const std::string& p, std::uint64_t seed_base) {
  auto c = [&](const char* n) { return p + "_" + n; };
  std::vector<QueryTemplate> ts(8);
  ts[0] = {p + "_t0", c("orders"), {c("custkey")}, {FilterOp::eq}, std::nullopt, "*", std::nullopt, std::nullopt, 0};
  ts[1] = {p + "_t1", c("lineitem"), {c("partkey"), c("shipdate")}, {FilterOp::eq, FilterOp::lt}, std::nullopt,
           c("orderkey") + ", " + c("quantity"), std::nullopt, std::nullopt, 0};
  ts[2] = {p + "_t2", c("orders"), {c("odate")}, {FilterOp::between}, c("status"), "COUNT(*)", std::nullopt,
           std::nullopt, 0};
  ts[3] = {p + "_t3", c("customer"), {c("nation")}, {FilterOp::in}, std::nullopt, "*", c("balance"), 10, 0};
  ts[4] = {p + "_t4", c("lineitem"), {c("suppkey"), c("quantity"), c("flag")},
           {FilterOp::eq, FilterOp::eq, FilterOp::gt}, std::nullopt, c("orderkey"), std::nullopt, std::nullopt, 0};
  ts[5] = {p + "_t5", c("part"), {c("type")}, {FilterOp::like}, std::nullopt, "COUNT(*)", std::nullopt,
           std::nullopt, 0};
  ts[6] = {p + "_t6", c("lineitem"), {c("shipdate")}, {FilterOp::gt}, c("flag"), "SUM(" + c("quantity") + ")",
           c("flag"), std::nullopt, 0};
  ts[7] = {p + "_t7", c("customer"), {c("segment"), c("balance")}, {FilterOp::eq, FilterOp::between}, std::nullopt,
           "DISTINCT " + c("nation"), std::nullopt, std::nullopt, 0};
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i].literal_seed = derive_seed(seed_base, i);
  return ts;
}

const std::vector<std::string>& account_names() {
  static const std::vector<std::string> names = {"acme", "globex", "initech", "umbrella",
                                                 "hooli", "vandelay", "wonka", "stark"};
  return names;
}

std::string account_name(std::size_t i) {
  return i < account_names().size() ? account_names()[i] : "acct" + std::to_string(i);
}

}  // namespace

WorkloadSpec single_schema_spec(const std::string& prefix, std::uint64_t variant) {
  WorkloadSpec spec;
  spec.schema = make_schema(prefix, variant);
  spec.templates = make_templates(prefix, fnv1a(prefix));
  spec.validate();
  return spec;
}

WorkloadSpec tenant_spec(std::size_t accounts, std::size_t users_per_account) {
  if (accounts == 0 || users_per_account == 0) throw Error("tenant spec needs at least one account and one user");
  WorkloadSpec spec;
  for (std::size_t a = 0; a < accounts; ++a) {
    const std::string name = account_name(a);
    SyntheticSchema s = make_schema(name, a % 2);
    spec.schema.tables.insert(spec.schema.tables.end(), s.tables.begin(), s.tables.end());
    auto ts = make_templates(name, fnv1a(name));
    spec.templates.insert(spec.templates.end(), ts.begin(), ts.end());
  }
  const std::size_t per = 8;
  for (std::size_t a = 0; a < accounts; ++a) {
    for (std::size_t j = 0; j < users_per_account; ++j) {
      UserProfile u{account_name(a) + "_u" + std::to_string(j), account_name(a),
                    std::vector<double>(spec.templates.size(), 0.0)};
      for (std::size_t t = 0; t < per; ++t) {
        double w = 1.0;
        if (t == j % per) w += 4.0;
        if (t == (j + 1) % per) w += 2.0;
        if (t == (j + 3) % per) w += 2.0;
        u.weights[a * per + t] = w;
      }
      spec.users.push_back(std::move(u));
    }
  }
  spec.validate();
  return spec;
}

WorkloadSpec distinct_user_spec(std::size_t users) {
  if (users == 0) throw Error("distinct-user spec needs at least one user");
  WorkloadSpec spec;
  const std::size_t accounts = (2 * users + 7) / 8;
  for (std::size_t a = 0; a < accounts; ++a) {
    const std::string name = account_name(a);
    SyntheticSchema s = make_schema(name, a % 2);
    spec.schema.tables.insert(spec.schema.tables.end(), s.tables.begin(), s.tables.end());
    auto ts = make_templates(name, fnv1a(name));
    spec.templates.insert(spec.templates.end(), ts.begin(), ts.end());
  }
  spec.templates.resize(2 * users);
  for (std::size_t i = 0; i < users; ++i) {
    UserProfile u{"user" + std::to_string(i), account_name(2 * i / 8), std::vector<double>(spec.templates.size(), 0.0)};
    u.weights[2 * i] = 1.0;
    u.weights[2 * i + 1] = 1.0;
    spec.users.push_back(std::move(u));
  }
  spec.validate();
  return spec;
}

std::vector<std::string> preset_names() { return {"schema-a", "schema-b", "tenants", "distinct-users"}; }

WorkloadSpec preset_spec(std::string_view name) {
  if (name == "schema-a") return single_schema_spec("shop");
  if (name == "schema-b") return single_schema_spec("web", 1);
  if (name == "tenants") return tenant_spec();
  if (name == "distinct-users") return distinct_user_spec();
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error("unknown workload preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace querc::sim
