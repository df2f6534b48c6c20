#include "querc/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "querc/advisor_sim.hpp"
#include "querc/doc2vec.hpp"
#include "querc/embedder.hpp"
#include "querc/errors.hpp"
#include "querc/labeler.hpp"
#include "querc/log_io.hpp"
#include "querc/lstm.hpp"
#include "querc/service.hpp"
#include "querc/summarizer.hpp"

namespace querc::cli {

using nlohmann::json;

namespace {

struct TextFlags {
  bool no_normalize = false;
  std::size_t max_seq_len = 256;
  std::size_t min_count = 2;

  void add(CLI::App* app) {
    app->add_flag("--no-normalize-literals", no_normalize, "Keep literal values as tokens");
    app->add_option("--max-seq-len", max_seq_len, "Truncate token sequences to this length")->check(CLI::PositiveNumber);
    app->add_option("--min-count", min_count, "Tokens rarer than this map to <unk>")->check(CLI::PositiveNumber);
  }
  TextOptions options() const {
    TextOptions t;
    t.tokenizer.normalize_literals = !no_normalize;
    t.tokenizer.max_sequence_length = max_seq_len;
    t.min_count = min_count;
    return t;
  }
};

struct ForestFlags {
  std::size_t trees = 100;
  std::size_t max_depth = 16;
  std::size_t min_leaf = 2;
  std::size_t features = 0;
  std::size_t thresholds = 4;

  void add(CLI::App* app) {
    app->add_option("--trees", trees, "Number of trees")->check(CLI::PositiveNumber);
    app->add_option("--max-depth", max_depth, "Maximum tree depth");
    app->add_option("--min-leaf", min_leaf, "Minimum samples per leaf")->check(CLI::PositiveNumber);
    app->add_option("--features", features, "Coordinates tried per split (0: sqrt of dimension)");
    app->add_option("--thresholds", thresholds, "Random thresholds per tried coordinate")->check(CLI::PositiveNumber);
  }
  ForestConfig config(std::uint64_t seed) const {
    ForestConfig c;
    c.n_trees = trees;
    c.max_depth = max_depth;
    c.min_leaf = min_leaf;
    c.features_per_split = features;
    c.thresholds_per_feature = thresholds;
    c.seed = seed;
    return c;
  }
};

struct SpecFlags {
  std::string preset;
  std::string spec_path;

  void add(CLI::App* app) {
    auto* p = app->add_option("--preset", preset, "Built-in workload spec");
    auto* s = app->add_option("--spec", spec_path, "Workload spec JSON file");
    p->excludes(s);
  }
  sim::WorkloadSpec load() const {
    if (!spec_path.empty()) return sim::read_spec(spec_path);
    if (!preset.empty()) return sim::preset_spec(preset);
    throw CLI::RequiredError("--preset or --spec");
  }
};

// Writes to the file, or to `out` when the path is empty or "-".
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(out);
    out.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  body(f);
  if (!f) throw Error("write failed: " + path);
}

WorkloadLog load_log(const std::string& path, std::ostream& err) {
  LogReadResult r = read_log(path);
  for (const auto& rej : r.rejected) err << path << ":" << rej.line << ": rejected: " << rej.reason << '\n';
  return std::move(r.log);
}

struct EmbeddedSet {
  Matrix x;
  std::vector<std::string> labels;
  std::vector<std::size_t> source_index;
  std::size_t missing_label = 0;
  std::size_t embed_failures = 0;
};

EmbeddedSet embed_labeled(const WorkloadLog& log, const Embedder& embedder, const std::string& channel,
                          std::ostream& err) {
  EmbeddedSet set;
  std::vector<EmbeddingVector> vectors;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const std::string* label = log.records[i].label(channel);
    if (!label) {
      ++set.missing_label;
      continue;
    }
    try {
      vectors.push_back(embedder.embed(log.records[i].query_text));
    } catch (const EmptyQueryError& e) {
      ++set.embed_failures;
      err << "record " << i << ": skipped: " << e.what() << '\n';
      continue;
    }
    set.labels.push_back(*label);
    set.source_index.push_back(i);
  }
  if (set.missing_label) err << set.missing_label << " records lack channel '" << channel << "'\n";
  if (vectors.empty()) throw Error("no usable records carry channel '" + channel + "'");
  set.x = to_matrix(vectors);
  return set;
}

std::string dump(const json& j, bool pretty) { return pretty ? j.dump(2) : j.dump(); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"querc: query embedding, workload summarization and query labeling"};
  app.name("querc");
  app.require_subcommand(1);
  app.fallthrough(false);

  std::uint64_t seed = 1;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed")->capture_default_str(); };

  // train-embedder
  auto* train_emb = app.add_subcommand("train-embedder", "Train a doc2vec or LSTM autoencoder embedder");
  std::string method = "doc2vec", te_in, te_out;
  std::size_t te_dim = 0, te_epochs = 0, te_window = 5, te_negatives = 5, te_input = 64;
  double te_lr = 0.0, te_min_lr = 0.0001, te_clip = 5.0;
  TextFlags te_text;
  train_emb->add_option("--method", method, "doc2vec or lstm")->check(CLI::IsMember({"doc2vec", "lstm"}));
  train_emb->add_option("--in", te_in, "Training workload (JSON lines)")->required();
  train_emb->add_option("--out", te_out, "Model file")->required();
  train_emb->add_option("--dim", te_dim, "Vector size (doc2vec dimension or LSTM hidden size)");
  train_emb->add_option("--epochs", te_epochs, "Training epochs");
  train_emb->add_option("--lr", te_lr, "Initial learning rate");
  train_emb->add_option("--min-lr", te_min_lr, "Final learning rate (doc2vec)");
  train_emb->add_option("--window", te_window, "Context window (doc2vec)");
  train_emb->add_option("--negatives", te_negatives, "Negative samples (doc2vec)");
  train_emb->add_option("--input-size", te_input, "Token embedding width (lstm)");
  train_emb->add_option("--clip", te_clip, "Gradient norm clip (lstm)");
  te_text.add(train_emb);
  add_seed(train_emb);

  // embed
  auto* embed = app.add_subcommand("embed", "Embed every query of a workload");
  std::string em_in, em_model, em_out;
  embed->add_option("--in", em_in, "Workload (JSON lines)")->required();
  embed->add_option("--embedder", em_model, "Embedder model file")->required();
  embed->add_option("--out", em_out, "Output JSON lines (default stdout)");
  add_seed(embed);

  // summarize
  auto* summ = app.add_subcommand("summarize", "Pick witness queries by clustering embeddings");
  std::string su_in, su_model, su_out, su_sql, su_witnesses;
  std::size_t su_k = 0, su_kmax = 0;
  double su_eps = 0.05;
  bool su_l2 = false;
  summ->add_option("--in", su_in, "Workload (JSON lines)")->required();
  summ->add_option("--embedder", su_model, "Embedder model file")->required();
  summ->add_option("--out", su_out, "Summary JSON (default stdout)");
  summ->add_option("--k", su_k, "Fixed cluster count (default: elbow)");
  summ->add_option("--k-max", su_kmax, "Largest k the elbow search tries");
  summ->add_option("--epsilon", su_eps, "Elbow threshold");
  summ->add_flag("--l2-normalize", su_l2, "Normalize vectors before clustering");
  summ->add_option("--witness-sql", su_sql, "Also write witness queries, one per line");
  summ->add_option("--witnesses", su_witnesses, "Also write witness records as JSON lines");
  add_seed(summ);

  // train-labeler
  auto* train_lab = app.add_subcommand("train-labeler", "Train a forest labeler on one label channel");
  std::string tl_in, tl_model, tl_channel, tl_out;
  ForestFlags tl_forest;
  train_lab->add_option("--in", tl_in, "Labeled workload (JSON lines)")->required();
  train_lab->add_option("--embedder", tl_model, "Embedder model file")->required();
  train_lab->add_option("--channel", tl_channel, "Label channel to learn")->required();
  train_lab->add_option("--out", tl_out, "Labeler model file")->required();
  tl_forest.add(train_lab);
  add_seed(train_lab);

  // label
  auto* label = app.add_subcommand("label", "Add predicted labels to a workload");
  std::string la_in, la_model, la_labeler, la_channel, la_out;
  label->add_option("--in", la_in, "Workload (JSON lines)")->required();
  label->add_option("--embedder", la_model, "Embedder model file")->required();
  label->add_option("--labeler", la_labeler, "Labeler model file")->required();
  label->add_option("--channel", la_channel, "Channel name for the predicted labels")->required();
  label->add_option("--out", la_out, "Output JSON lines (default stdout)");
  add_seed(label);

  // cross-validate
  auto* cv = app.add_subcommand("cross-validate", "Stratified k-fold accuracy of a labeler");
  std::string cv_in, cv_model, cv_channel, cv_out;
  std::size_t cv_folds = 10;
  bool cv_pretty = false;
  ForestFlags cv_forest;
  cv->add_option("--in", cv_in, "Labeled workload (JSON lines)")->required();
  cv->add_option("--embedder", cv_model, "Embedder model file")->required();
  cv->add_option("--channel", cv_channel, "Label channel")->required();
  cv->add_option("--folds", cv_folds, "Number of folds")->check(CLI::Range(2, 1000));
  cv->add_option("--out", cv_out, "Report JSON (default stdout)");
  cv->add_flag("--pretty", cv_pretty, "Human-readable table");
  cv_forest.add(cv);
  add_seed(cv);

  // audit
  auto* audit = app.add_subcommand("audit", "Flag records whose claimed label disagrees with the labeler");
  std::string au_in, au_model, au_labeler, au_channel, au_out;
  bool au_pretty = false;
  audit->add_option("--in", au_in, "Labeled workload (JSON lines)")->required();
  audit->add_option("--embedder", au_model, "Embedder model file")->required();
  audit->add_option("--labeler", au_labeler, "Labeler model file")->required();
  audit->add_option("--channel", au_channel, "Channel holding the claimed label")->required();
  audit->add_option("--out", au_out, "Flagged records as JSON lines");
  audit->add_flag("--pretty", au_pretty, "Indented summary");
  add_seed(audit);

  // gen-workload
  auto* gen = app.add_subcommand("gen-workload", "Generate a synthetic labeled workload");
  SpecFlags ge_spec;
  std::size_t ge_n = 1000;
  std::string ge_out, ge_write_spec;
  std::vector<double> ge_mix;
  ge_spec.add(gen);
  gen->add_option("--n", ge_n, "Number of queries")->check(CLI::PositiveNumber);
  gen->add_option("--mix", ge_mix, "Template weights, comma separated")->delimiter(',');
  gen->add_option("--out", ge_out, "Output JSON lines (default stdout)");
  gen->add_option("--write-spec", ge_write_spec, "Also write the spec as JSON");
  add_seed(gen);

  // recommend
  auto* rec = app.add_subcommand("recommend", "Greedy index recommendation on a generated workload");
  SpecFlags re_spec;
  std::string re_in, re_out;
  std::size_t re_budget = 8;
  bool re_pretty = false;
  re_spec.add(rec);
  rec->add_option("--in", re_in, "Workload (JSON lines)")->required();
  rec->add_option("--budget", re_budget, "Budget in index column units");
  rec->add_option("--out", re_out, "Output JSON (default stdout)");
  rec->add_flag("--pretty", re_pretty, "Human-readable output");
  add_seed(rec);

  // evaluate-summary
  auto* eval = app.add_subcommand("evaluate-summary", "Compare advisor results on a summary and the full log");
  SpecFlags ev_spec;
  std::string ev_full, ev_summary, ev_witnesses, ev_out;
  std::size_t ev_budget = 8;
  bool ev_pretty = false;
  ev_spec.add(eval);
  eval->add_option("--full,--in", ev_full, "Full workload (JSON lines)")->required();
  auto* ev_s = eval->add_option("--summary", ev_summary, "Summary JSON from summarize");
  auto* ev_w = eval->add_option("--witnesses", ev_witnesses, "Summary as a JSON-lines workload");
  ev_s->excludes(ev_w);
  eval->add_option("--budget", ev_budget, "Budget in index column units");
  eval->add_option("--out", ev_out, "Report (default stdout)");
  eval->add_flag("--pretty", ev_pretty, "Aligned text table instead of JSON");
  add_seed(eval);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the labeling service");
  std::string se_config, se_socket;
  std::vector<std::string> se_replay, se_drain;
  serve->add_option("--config", se_config, "Service config JSON")->required();
  serve->add_option("--replay", se_replay, "app_id=path of a JSON-lines log to feed through the app");
  serve->add_option("--drain", se_drain, "app_id=path to write the app's training store after replay");
  serve->add_option("--socket", se_socket, "Listen on this unix socket after replay");
  add_seed(serve);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (*train_emb) {
      const WorkloadLog log = load_log(te_in, err);
      ModelArtifact artifact;
      if (method == "doc2vec") {
        Doc2VecConfig c;
        if (te_dim) c.dimension = te_dim;
        if (te_epochs) c.epochs = te_epochs;
        if (te_lr > 0) c.learning_rate = te_lr;
        c.min_learning_rate = te_min_lr;
        c.window = te_window;
        c.negatives = te_negatives;
        c.seed = seed;
        c.text = te_text.options();
        const Doc2VecModel m = train_doc2vec(log, c);
        err << "doc2vec: " << m.vocab.size() << " tokens, final epoch loss " << m.epoch_losses.back() << '\n';
        artifact = m.to_artifact();
      } else {
        LstmConfig c;
        if (te_dim) c.hidden_size = te_dim;
        if (te_epochs) c.epochs = te_epochs;
        if (te_lr > 0) c.learning_rate = te_lr;
        c.input_size = te_input;
        c.grad_clip = te_clip;
        c.seed = seed;
        c.text = te_text.options();
        const LstmModel m = train_autoencoder(log, c);
        err << "lstm: " << m.vocab.size() << " tokens, final epoch loss " << m.epoch_losses.back() << '\n';
        artifact = m.to_artifact();
      }
      save_model(artifact, te_out);
      return 0;
    }

    if (*embed) {
      const WorkloadLog log = load_log(em_in, err);
      const auto embedder = load_embedder(em_model);
      emit(em_out, out, [&](std::ostream& os) {
        for (std::size_t i = 0; i < log.size(); ++i) {
          json line = {{"index", i}};
          try {
            const EmbeddingVector v = embedder->embed(log.records[i].query_text);
            line["vector"] = std::vector<double>(v.values().begin(), v.values().end());
          } catch (const EmptyQueryError& e) {
            line["error"] = e.what();
          }
          os << line.dump() << '\n';
        }
      });
      return 0;
    }

    if (*summ) {
      const WorkloadLog log = load_log(su_in, err);
      const auto embedder = load_embedder(su_model);
      SummaryParams p;
      if (su_k) p.k = su_k;
      p.k_max = su_kmax;
      p.epsilon = su_eps;
      p.l2_normalize = su_l2;
      p.seed = seed;
      const WorkloadSummary s = summarize(log, *embedder, p);
      for (const auto& ex : s.excluded) err << "record " << ex.index << ": excluded: " << ex.reason << '\n';
      emit(su_out, out, [&](std::ostream& os) { os << to_json(s).dump(2) << '\n'; });
      if (!su_sql.empty()) write_witness_sql(s, su_sql);
      if (!su_witnesses.empty()) write_log(s.witness_log(), su_witnesses);
      return 0;
    }

    if (*train_lab) {
      const WorkloadLog log = load_log(tl_in, err);
      const auto embedder = load_embedder(tl_model);
      const EmbeddedSet set = embed_labeled(log, *embedder, tl_channel, err);
      const ForestModel m = train_forest(set.x, set.labels, tl_forest.config(seed));
      save_model(m.to_artifact(), tl_out);
      err << "labeler: " << m.classes.size() << " classes, " << set.labels.size() << " samples\n";
      return 0;
    }

    if (*label) {
      const WorkloadLog log = load_log(la_in, err);
      const std::vector<ClassifierPair> pairs = {
          {la_channel, load_embedder(la_model),
           std::make_shared<const ForestModel>(
               ForestModel::from_artifact(load_model(la_labeler, ModelKind::forest_classifier)))}};
      if (pairs[0].embedder->dimension() != pairs[0].labeler->dimension) {
        throw Error("embedder and labeler dimensions differ");
      }
      emit(la_out, out, [&](std::ostream& os) {
        for (const auto& q : log.records) os << to_json_line(label_record(q, pairs)) << '\n';
      });
      return 0;
    }

    if (*cv) {
      const WorkloadLog log = load_log(cv_in, err);
      const auto embedder = load_embedder(cv_model);
      const EmbeddedSet set = embed_labeled(log, *embedder, cv_channel, err);
      const CrossValidation r = cross_validate(set.x, set.labels, cv_folds, cv_forest.config(seed));
      std::map<std::string, std::pair<std::size_t, std::size_t>> per_label;
      for (std::size_t i = 0; i < set.labels.size(); ++i) {
        auto& [n, hit] = per_label[set.labels[i]];
        ++n;
        if (r.predicted[i] == set.labels[i]) ++hit;
      }
      json labels = json::object();
      for (const auto& [l, c] : per_label) {
        labels[l] = {{"samples", c.first}, {"accuracy", static_cast<double>(c.second) / static_cast<double>(c.first)}};
      }
      const json report = {{"channel", cv_channel},     {"folds", cv_folds},
                           {"samples", set.labels.size()}, {"accuracy", r.accuracy},
                           {"fold_accuracy", r.fold_accuracy}, {"per_label", labels}};
      emit(cv_out, out, [&](std::ostream& os) {
        if (!cv_pretty) {
          os << report.dump() << '\n';
          return;
        }
        os << "channel   " << cv_channel << "\nsamples   " << set.labels.size() << "\nfolds     " << cv_folds
           << "\naccuracy  " << std::fixed << std::setprecision(4) << r.accuracy << "\n\n";
        std::size_t w = 5;
        for (const auto& [l, c] : per_label) w = std::max(w, l.size());
        os << std::left << std::setw(static_cast<int>(w) + 2) << "label" << std::setw(9) << "samples" << "accuracy\n";
        for (const auto& [l, c] : per_label) {
          os << std::setw(static_cast<int>(w) + 2) << l << std::setw(9) << c.first
             << static_cast<double>(c.second) / static_cast<double>(c.first) << '\n';
        }
      });
      return 0;
    }

    if (*audit) {
      const WorkloadLog log = load_log(au_in, err);
      const auto embedder = load_embedder(au_model);
      const ForestModel forest = ForestModel::from_artifact(load_model(au_labeler, ModelKind::forest_classifier));
      std::size_t checked = 0, skipped = 0;
      std::vector<json> flagged;
      for (std::size_t i = 0; i < log.size(); ++i) {
        const LabeledQuery& q = log.records[i];
        const std::string* claimed = q.label(au_channel);
        if (!claimed) {
          ++skipped;
          continue;
        }
        EmbeddingVector v;
        try {
          v = embedder->embed(q.query_text);
        } catch (const EmptyQueryError&) {
          ++skipped;
          continue;
        }
        ++checked;
        const AuditResult a = audit_flag(forest, v, *claimed);
        if (a.mismatch) {
          flagged.push_back({{"index", i},
                             {"claimed", *claimed},
                             {"predicted", a.predicted},
                             {"confidence", a.confidence},
                             {"query_text", q.query_text}});
        }
      }
      if (!au_out.empty()) {
        emit(au_out, out, [&](std::ostream& os) {
          for (const auto& f : flagged) os << f.dump() << '\n';
        });
      }
      const json report = {{"channel", au_channel}, {"checked", checked}, {"skipped", skipped},
                           {"flagged", flagged.size()}};
      out << dump(report, au_pretty) << '\n';
      return 0;
    }

    if (*gen) {
      const sim::WorkloadSpec spec = ge_spec.load();
      const WorkloadLog log = sim::generate_workload(spec, ge_n, seed, ge_mix);
      emit(ge_out, out, [&](std::ostream& os) { write_log(log, os); });
      if (!ge_write_spec.empty()) sim::write_spec(spec, ge_write_spec);
      return 0;
    }

    if (*rec) {
      const sim::WorkloadSpec spec = re_spec.load();
      const WorkloadLog log = load_log(re_in, err);
      const sim::AdvisorResult r = sim::recommend_indexes(log, re_budget, spec);
      emit(re_out, out, [&](std::ostream& os) {
        if (re_pretty) {
          for (const auto& idx : r.config.indexes) os << idx.to_string() << '\n';
          os << "units " << r.config.units() << ", workload cost " << r.workload_cost << ", work units "
             << r.work_units << '\n';
          return;
        }
        json j = sim::to_json(r.config);
        j["work_units"] = r.work_units;
        j["workload_cost"] = r.workload_cost;
        os << j.dump() << '\n';
      });
      return 0;
    }

    if (*eval) {
      const sim::WorkloadSpec spec = ev_spec.load();
      const WorkloadLog full = load_log(ev_full, err);
      WorkloadLog summary;
      if (!ev_summary.empty()) {
        summary = read_summary(ev_summary).witness_log();
      } else if (!ev_witnesses.empty()) {
        summary = load_log(ev_witnesses, err);
      } else {
        throw CLI::RequiredError("--summary or --witnesses");
      }
      const sim::EvaluationReport r = sim::evaluate_summary(full, summary, ev_budget, spec);
      emit(ev_out, out, [&](std::ostream& os) {
        if (ev_pretty) {
          os << sim::format_table(r);
        } else {
          os << sim::to_json(r).dump() << '\n';
        }
      });
      return 0;
    }

    if (*serve) {
      Service service(read_service_config(se_config));
      auto split = [](const std::string& s) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("expected app_id=path, got '" + s + "'");
        return std::pair{s.substr(0, eq), s.substr(eq + 1)};
      };
      json stats = json::object();
      for (const auto& r : se_replay) {
        const auto [app_id, path] = split(r);
        const ReplayStats st = replay(service, app_id, std::filesystem::path(path));
        stats[app_id] = {{"processed", st.processed}, {"rejected", st.rejected}, {"errors", st.errors}};
      }
      for (const auto& d : se_drain) {
        const auto [app_id, path] = split(d);
        write_log(service.drain_training_store(app_id), path);
      }
      if (!se_socket.empty()) {
        err << "listening on " << se_socket << '\n';
        serve_socket(service, se_socket, se_config);
      }
      out << json{{"embedder_instances", service.embedder_instances()},
                  {"labeler_instances", service.labeler_instances()},
                  {"replay", stats}}
                 .dump()
          << '\n';
      return 0;
    }
  } catch (const CLI::Error& e) {
    err << "querc: " << e.what() << '\n';
    return 1;
  } catch (const StartupError& e) {
    err << "querc: service startup failed\n";
    for (const auto& f : e.failures()) err << "  " << f << '\n';
    return 2;
  } catch (const Error& e) {
    err << "querc: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "querc: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace querc::cli
