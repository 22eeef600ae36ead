#pragma once

// Command-line front end. Exit codes: 0 success, 1 validation or usage error, 2 I/O or format error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/dump.hpp"
#include "schemaprobe/errors.hpp"
#include "schemaprobe/metrics.hpp"
#include "schemaprobe/parallel.hpp"
#include "schemaprobe/probe.hpp"
#include "schemaprobe/records.hpp"
#include "schemaprobe/reference_encoder.hpp"
#include "schemaprobe/render.hpp"
#include "schemaprobe/rulelink.hpp"
#include "schemaprobe/synthetic.hpp"

namespace schemaprobe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

struct ProbeOptions {
  std::string examples, schemas, encoder = "reference", dump, metric = "euclidean", out;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
};

struct LinkOptions {
  std::string matrices, out;
  double tau = 0.0;
};

struct BaselineOptions {
  std::string examples, schemas, out;
  std::size_t max_ngram = 5;
  bool no_case_fold = false;
};

struct MergeOptions {
  std::string a, b, out;
};

struct EvalOptions {
  std::string pred, examples, schemas, report = "text", out;
};

struct RenderOptions {
  std::string matrix, example_id, format, out, examples, schemas;
};

struct SelftestOptions {
  std::size_t count = 60;
  std::uint64_t seed = 7;
};

struct ExportDumpOptions {
  std::string examples, schemas, out;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
};

inline std::vector<ProbeExample> load_bound_examples(const std::string& examples, const std::string& schemas) {
  return load_examples(examples, make_catalog(load_spider_schemas(schemas)));
}

inline ReferenceEncoderSpec reference_spec(const ProbeExample& ex, std::size_t dim, std::uint64_t seed, bool f32) {
  ReferenceEncoderSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  spec.planted_similarity = plant_from_gold(ex, seed);
  spec.f32_outputs = f32;
  return spec;
}

inline int run_probe(const ProbeOptions& o, std::ostream& log) {
  auto examples = load_bound_examples(o.examples, o.schemas);
  Metric metric = metric_from_string(o.metric);
  std::vector<MatrixRecord> records;
  if (o.encoder == "reference") {
    records = parallel_map(examples, [&](const ProbeExample& ex) {
      ReferenceEncoder enc(reference_spec(ex, o.dim, o.seed, false));
      return MatrixRecord{ex.example_id, probe_example(ex, enc, metric), std::string(to_string(metric))};
    });
  } else if (o.encoder == "dump") {
    if (o.dump.empty()) throw ValidationError("--encoder dump requires --dump PATH");
    auto sets = read_embedding_dump(o.dump);
    std::map<std::string, const EmbeddingSet*> by_id;
    for (const auto& s : sets)
      if (!by_id.emplace(s.example_id, &s).second)
        throw ValidationError("dump holds example '" + s.example_id + "' twice");
    records = parallel_map(examples, [&](const ProbeExample& ex) {
      auto it = by_id.find(ex.example_id);
      if (it == by_id.end()) throw ValidationError("dump has no record for example '" + ex.example_id + "'");
      return MatrixRecord{ex.example_id, materialize_from_dump(*it->second, metric, &ex), std::string(to_string(metric))};
    });
  } else {
    throw ValidationError("unknown encoder '" + o.encoder + "'");
  }
  write_file(o.out, to_jsonl(records));
  log << "probed " << records.size() << " examples (" << to_string(metric) << ")\n";
  return kExitOk;
}

inline int run_link(const LinkOptions& o, std::ostream& log) {
  if (!(o.tau >= 0.0 && o.tau <= 1.0))
    throw ValidationError("--tau " + std::to_string(o.tau) + " is outside the range [0, 1]");
  auto matrices = load_matrix_records(o.matrices);
  auto links = parallel_map(matrices, [&](const MatrixRecord& r) {
    RelationMatrix xn = r.matrix.normalized() ? r.matrix : normalize_minmax(r.matrix);
    return LinkRecord{r.example_id, threshold_adjacency(xn, o.tau)};
  });
  write_file(o.out, to_jsonl(links));
  log << "linked " << links.size() << " examples at tau " << o.tau << "\n";
  return kExitOk;
}

inline int run_baseline(const BaselineOptions& o, std::ostream& log) {
  MatchConfig cfg{o.max_ngram, !o.no_case_fold};
  cfg.validate();
  auto examples = load_bound_examples(o.examples, o.schemas);
  auto links = parallel_map(examples, [&](const ProbeExample& ex) { return LinkRecord{ex.example_id, lexical_link(ex, cfg)}; });
  write_file(o.out, to_jsonl(links));
  log << "lexical links for " << links.size() << " examples\n";
  return kExitOk;
}

inline int run_merge(const MergeOptions& o, std::ostream& log) {
  auto a = load_link_records(o.a);
  auto b = load_link_records(o.b);
  std::map<std::string, std::size_t> index;
  std::vector<LinkRecord> out;
  for (auto& r : a) {
    if (!index.emplace(r.example_id, out.size()).second) throw ValidationError("duplicate example '" + r.example_id + "' in " + o.a);
    out.push_back(std::move(r));
  }
  std::map<std::string, bool> seen_b;
  for (auto& r : b) {
    if (seen_b[r.example_id]) throw ValidationError("duplicate example '" + r.example_id + "' in " + o.b);
    seen_b[r.example_id] = true;
    auto it = index.find(r.example_id);
    if (it == index.end()) {
      index.emplace(r.example_id, out.size());
      out.push_back(std::move(r));
    } else {
      out[it->second].graph = merge_graphs(out[it->second].graph, r.graph);
    }
  }
  write_file(o.out, to_jsonl(out));
  log << "merged " << out.size() << " examples\n";
  return kExitOk;
}

inline json metrics_json(const LinkMetrics& m) {
  return {{"true_positives", m.true_positives}, {"false_positives", m.false_positives},
          {"false_negatives", m.false_negatives}, {"precision", m.precision},
          {"recall", m.recall}, {"f1", m.f1}};
}

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline int run_eval(const EvalOptions& o, std::ostream& out, std::ostream& log) {
  if (o.report != "text" && o.report != "json") throw ValidationError("--report must be text or json");
  auto examples = load_bound_examples(o.examples, o.schemas);
  auto preds = load_link_records(o.pred);
  std::map<std::string, const LinkGraph*> by_id;
  for (const auto& r : preds)
    if (!by_id.emplace(r.example_id, &r.graph).second) throw ValidationError("duplicate prediction for '" + r.example_id + "'");
  std::map<std::string, bool> known;
  for (const auto& ex : examples) known[ex.example_id] = true;
  for (const auto& r : preds)
    if (!known.count(r.example_id)) throw ValidationError("prediction for unknown example '" + r.example_id + "'");

  LinkMetrics total;
  std::vector<std::pair<std::string, LinkMetrics>> rows;
  for (const auto& ex : examples) {
    auto it = by_id.find(ex.example_id);
    LinkGraph empty(ex.num_question(), ex.num_schema());
    LinkMetrics m = score_links(it == by_id.end() ? empty : *it->second, ex);
    total += m;
    rows.emplace_back(ex.example_id, m);
  }

  std::string report;
  if (o.report == "json") {
    json per = json::array();
    for (const auto& [id, m] : rows) {
      json j = metrics_json(m);
      j["example_id"] = id;
      per.push_back(j);
    }
    report = json{{"examples", per}, {"micro", metrics_json(total)}}.dump(2) + "\n";
  } else {
    std::ostringstream ss;
    for (const auto& [id, m] : rows)
      ss << id << " tp=" << m.true_positives << " fp=" << m.false_positives << " fn=" << m.false_negatives
         << " precision=" << fixed3(m.precision) << " recall=" << fixed3(m.recall) << " F1=" << fixed3(m.f1) << "\n";
    ss << "micro tp=" << total.true_positives << " fp=" << total.false_positives << " fn=" << total.false_negatives
       << " precision=" << fixed3(total.precision) << " recall=" << fixed3(total.recall) << " F1=" << fixed3(total.f1)
       << "\n";
    report = ss.str();
  }
  if (o.out.empty()) {
    out << report;
  } else {
    write_file(o.out, report);
    log << "wrote report for " << rows.size() << " examples\n";
  }
  return kExitOk;
}

inline int run_render(const RenderOptions& o, std::ostream& log) {
  RenderFormat format = render_format_from_string(o.format);
  auto matrices = load_matrix_records(o.matrix);
  const MatrixRecord* rec = nullptr;
  for (const auto& r : matrices)
    if (r.example_id == o.example_id) rec = &r;
  if (!rec) throw ValidationError("no matrix for example '" + o.example_id + "' in " + o.matrix);

  MatrixLabels labels = MatrixLabels::indices(rec->matrix.rows(), rec->matrix.cols());
  if (!o.examples.empty() || !o.schemas.empty()) {
    if (o.examples.empty() || o.schemas.empty()) throw ValidationError("--examples and --schemas go together");
    bool found = false;
    for (const auto& ex : load_bound_examples(o.examples, o.schemas))
      if (ex.example_id == o.example_id) {
        labels = MatrixLabels::of(ex);
        found = true;
      }
    if (!found) throw ValidationError("example '" + o.example_id + "' not in " + o.examples);
  }
  RelationMatrix xn = rec->matrix.normalized() ? rec->matrix : normalize_minmax(rec->matrix);
  render_matrix(xn, labels, format, o.out);
  log << "rendered " << o.example_id << " to " << o.out << "\n";
  return kExitOk;
}

inline int run_export_dump(const ExportDumpOptions& o, std::ostream& log) {
  auto examples = load_bound_examples(o.examples, o.schemas);
  auto sets = parallel_map(examples, [&](const ProbeExample& ex) {
    ReferenceEncoder enc(reference_spec(ex, o.dim, o.seed, true));
    return collect_embeddings(ex, enc);
  });
  write_embedding_dump(o.out, sets);
  log << "dumped " << sets.size() << " examples\n";
  return kExitOk;
}

struct SelftestResult {
  bool passed = true;
  std::string report;
};

/// End-to-end check on the synthetic corpora: the probe must recover every planted link at any
/// tau in (0, min normalized planted score] under both metrics, the lexical baseline must find
/// nothing on the synonym suite and everything on the exact-match suite.
inline SelftestResult selftest(std::size_t count, std::uint64_t seed) {
  SelftestResult result;
  std::ostringstream ss;
  auto synonyms = synthetic::synonym_suite(count, seed);
  auto exact = synthetic::exact_match_suite(std::max<std::size_t>(count / 2, 1), seed);
  ss << "corpus: " << synonyms.examples.size() << " synonym examples, " << exact.examples.size()
     << " exact-match examples\n";

  auto check = [&](bool ok, const std::string& line) {
    ss << (ok ? "PASS " : "FAIL ") << line << "\n";
    result.passed = result.passed && ok;
  };

  for (const auto* corpus : {&synonyms, &exact}) {
    std::vector<std::size_t> idx(corpus->examples.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    for (Metric metric : {Metric::Euclidean, Metric::Poincare}) {
      struct Probed {
        RelationMatrix normalized;
        double min_planted;
        bool pass_count_ok;
      };
      auto probed = parallel_map(idx, [&](std::size_t k) {
        const auto& ex = corpus->examples[k];
        ReferenceEncoder enc(synthetic::encoder_spec_for(corpus->planted[k], seed));
        auto xn = normalize_minmax(probe_example(ex, enc, metric));
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& [p, sim] : corpus->planted[k]) lo = std::min(lo, xn(p.first, p.second));
        return Probed{xn, lo, enc.calls() == ex.num_question() + 1};
      });
      double tau_max = std::numeric_limits<double>::infinity();
      bool passes_ok = true;
      for (const auto& p : probed) {
        tau_max = std::min(tau_max, p.min_planted);
        passes_ok = passes_ok && p.pass_count_ok;
      }
      std::string suite = corpus == &synonyms ? "synonym" : "exact-match";
      check(passes_ok, suite + " " + std::string(to_string(metric)) + ": encoder passes = |Q| + 1");
      check(tau_max > 0.0, suite + " " + std::string(to_string(metric)) + ": min normalized planted score " +
                               std::to_string(tau_max));
      if (!(tau_max > 0.0)) continue;
      for (double tau : {tau_max, tau_max / 2, tau_max * 1e-3}) {
        LinkMetrics total;
        for (std::size_t k = 0; k < probed.size(); ++k)
          total += score_links(threshold_adjacency(probed[k].normalized, tau), corpus->examples[k]);
        check(total.precision == 1.0 && total.recall == 1.0 && total.f1 == 1.0,
              suite + " probe " + std::string(to_string(metric)) + " tau=" + std::to_string(tau) +
                  " precision=" + fixed3(total.precision) + " recall=" + fixed3(total.recall) +
                  " F1=" + fixed3(total.f1));
      }
    }
    LinkMetrics lexical;
    for (const auto& ex : corpus->examples) lexical += score_links(lexical_link(ex), ex);
    if (corpus == &synonyms)
      check(lexical.f1 == 0.0, "synonym lexical baseline F1=" + fixed3(lexical.f1) + " (expected 0.000)");
    else
      check(lexical.f1 == 1.0, "exact-match lexical baseline F1=" + fixed3(lexical.f1) + " (expected 1.000)");
  }
  ss << (result.passed ? "selftest passed" : "selftest FAILED") << "\n";
  result.report = ss.str();
  return result;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Schema-linking probe over masked-encoder perturbations", "schemaprobe"};
  app.require_subcommand(1);

  ProbeOptions probe;
  auto* probe_cmd = app.add_subcommand("probe", "Build relation matrices for every example");
  probe_cmd->add_option("--examples", probe.examples, "Examples JSON Lines file")->required();
  probe_cmd->add_option("--schemas", probe.schemas, "Spider tables.json")->required();
  probe_cmd->add_option("--encoder", probe.encoder, "reference | dump")->check(CLI::IsMember({"reference", "dump"}));
  probe_cmd->add_option("--dump", probe.dump, "Embedding dump (with --encoder dump)");
  probe_cmd->add_option("--metric", probe.metric, "euclidean | poincare")->check(CLI::IsMember({"euclidean", "poincare"}));
  probe_cmd->add_option("--dim", probe.dim, "Reference encoder dimension");
  probe_cmd->add_option("--seed", probe.seed, "Reference encoder seed");
  probe_cmd->add_option("--out", probe.out, "Output matrices (JSON Lines)")->required();

  LinkOptions link;
  auto* link_cmd = app.add_subcommand("link", "Threshold normalized matrices into probe links");
  link_cmd->add_option("--matrices", link.matrices, "Matrices JSON Lines file")->required();
  link_cmd->add_option("--tau", link.tau, "Threshold in [0, 1]")->required();
  link_cmd->add_option("--out", link.out, "Output links (JSON Lines)")->required();

  BaselineOptions base;
  auto* base_cmd = app.add_subcommand("baseline", "Lexical n-gram schema linking");
  base_cmd->add_option("--examples", base.examples)->required();
  base_cmd->add_option("--schemas", base.schemas)->required();
  base_cmd->add_option("--max-ngram", base.max_ngram, "Longest question n-gram considered");
  base_cmd->add_flag("--no-case-fold", base.no_case_fold, "Compare tokens case-sensitively");
  base_cmd->add_option("--out", base.out)->required();

  MergeOptions merge;
  auto* merge_cmd = app.add_subcommand("merge", "Union two link files");
  merge_cmd->add_option("--a", merge.a)->required();
  merge_cmd->add_option("--b", merge.b)->required();
  merge_cmd->add_option("--out", merge.out)->required();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score links against gold links");
  eval_cmd->add_option("--pred", eval.pred, "Predicted links (JSON Lines)")->required();
  eval_cmd->add_option("--gold-from-examples", eval.examples, "Examples file holding gold_links")->required();
  eval_cmd->add_option("--schemas", eval.schemas, "Spider tables.json")->required();
  eval_cmd->add_option("--report", eval.report, "text | json")->check(CLI::IsMember({"text", "json"}));
  eval_cmd->add_option("--out", eval.out, "Write the report here instead of stdout");

  RenderOptions render;
  auto* render_cmd = app.add_subcommand("render", "Render one relation matrix");
  render_cmd->add_option("--matrix", render.matrix, "Matrices JSON Lines file")->required();
  render_cmd->add_option("--example-id", render.example_id)->required();
  render_cmd->add_option("--format", render.format, "csv | pgm | svg")->required()->check(CLI::IsMember({"csv", "pgm", "svg"}));
  render_cmd->add_option("--out", render.out)->required();
  render_cmd->add_option("--examples", render.examples, "Examples file, for token labels");
  render_cmd->add_option("--schemas", render.schemas, "Spider tables.json, for item labels");

  SelftestOptions self;
  auto* self_cmd = app.add_subcommand("selftest", "Run the reference-encoder end-to-end suite");
  self_cmd->add_option("--count", self.count, "Synonym examples to generate");
  self_cmd->add_option("--seed", self.seed);

  ExportDumpOptions exp;
  auto* exp_cmd = app.add_subcommand("export-dump", "Write reference-encoder vectors as an embedding dump");
  exp_cmd->add_option("--examples", exp.examples)->required();
  exp_cmd->add_option("--schemas", exp.schemas)->required();
  exp_cmd->add_option("--dim", exp.dim);
  exp_cmd->add_option("--seed", exp.seed);
  exp_cmd->add_option("--out", exp.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*probe_cmd) return run_probe(probe, err);
    if (*link_cmd) return run_link(link, err);
    if (*base_cmd) return run_baseline(base, err);
    if (*merge_cmd) return run_merge(merge, err);
    if (*eval_cmd) return run_eval(eval, out, err);
    if (*render_cmd) return run_render(render, err);
    if (*exp_cmd) return run_export_dump(exp, err);
    if (*self_cmd) {
      if (self.count == 0) throw ValidationError("--count must be positive");
      auto r = selftest(self.count, self.seed);
      out << r.report;
      return r.passed ? kExitOk : kExitValidation;
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace schemaprobe::cli
