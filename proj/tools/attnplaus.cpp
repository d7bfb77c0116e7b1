#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "attnplaus/corpus.hpp"
#include "attnplaus/embeddings.hpp"
#include "attnplaus/errors.hpp"
#include "attnplaus/heuristic.hpp"
#include "attnplaus/maps_io.hpp"
#include "attnplaus/metrics.hpp"
#include "attnplaus/model.hpp"
#include "attnplaus/report.hpp"
#include "json.hpp"

using namespace attnplaus;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CommonOpts {
  std::string corpus;
  std::string columns;
  std::string stopwords;
  std::string label;
  std::size_t limit = 0;
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--corpus", o.corpus, "annotated sentence-pair CSV");
  cmd->add_option("--columns", o.columns,
                  "column overrides, e.g. premise=s1,premise_hl=h1+h2");
  cmd->add_option("--stopwords", o.stopwords, "stop-word file (default: embedded list)");
  cmd->add_option("--class", o.label, "keep only this gold label");
  cmd->add_option("--limit", o.limit, "parse at most N usable pairs");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 256u));
}

StopWords load_stops(const CommonOpts& o) {
  return o.stopwords.empty() ? StopWords::embedded() : StopWords::from_file(o.stopwords);
}

Dataset load_corpus(const CommonOpts& o) {
  if (o.corpus.empty()) throw UsageError("missing --corpus");
  ColumnMap cols = o.columns.empty() ? ColumnMap{} : ColumnMap::parse(o.columns);
  Dataset d = parse_corpus(o.corpus, cols, load_stops(o), o.limit);
  if (!o.label.empty()) {
    auto label = parse_label(o.label);
    if (!label)
      throw UsageError("unknown label '" + o.label +
                       "' (expected entailment, contradiction, or neutral)");
    d = filter_by_label(d, *label);
  }
  return d;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t cli_seed) {
  if (seed_opt->count() > 0) return cli_seed;
  if (const char* env = std::getenv("ATTNPLAUS_SEED")) {
    std::uint64_t v = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end)
      throw UsageError("ATTNPLAUS_SEED is not an unsigned integer");
    return v;
  }
  return 1;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failure on " + path);
}

template <typename Fn>
void parallel_indices(std::size_t n, unsigned threads, Fn fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned k = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < k; ++t)
    pool.emplace_back([t, k, n, &fn] {
      for (std::size_t i = n * t / k; i < n * (t + 1) / k; ++i) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::string fmt6(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ------------------------------------------------------------------ stats

struct StatsOpts {
  CommonOpts common;
  bool print_stopwords = false;
};

int run_stats(const StatsOpts& o) {
  if (o.print_stopwords) {
    StopWords stops = load_stops(o.common);
    for (const auto& word : stops.entries()) std::cout << word << "\n";
    return 0;
  }
  Dataset d = load_corpus(o.common);

  ordered_json j;
  j["corpus"] = d.split_name;
  j["pairs"] = d.pairs.size();
  j["skipped_label_rows"] = d.skipped_label_rows;
  std::size_t counts[3] = {0, 0, 0};
  std::size_t tokens = 0;
  for (const auto& p : d.pairs) {
    ++counts[static_cast<std::size_t>(p.label)];
    tokens += p.premise.size() + p.hypothesis.size();
  }
  j["label_counts"]["entailment"] = counts[0];
  j["label_counts"]["contradiction"] = counts[1];
  j["label_counts"]["neutral"] = counts[2];
  j["tokens"] = tokens;
  j["highlight_rate"] = highlight_rate(d);

  bool has_pos = !d.pairs.empty();
  for (const auto& p : d.pairs) {
    for (const auto& t : p.premise) has_pos = has_pos && t.pos.has_value();
    for (const auto& t : p.hypothesis) has_pos = has_pos && t.pos.has_value();
  }
  if (has_pos) {
    PosStats ps = pos_stats(d);
    ordered_json fractions;
    for (const auto& [cat, share] : ps.fraction) fractions[to_string(cat)] = share;
    j["highlighted_pos"]["fractions"] = std::move(fractions);
    j["highlighted_pos"]["verb_noun_adj"] = ps.verb_noun_adj;
    j["highlighted_pos"]["highlighted_tokens"] = ps.highlighted_tokens;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

// -------------------------------------------------------------- heuristic

struct HeuristicOpts {
  CommonOpts common;
  std::string embeddings;
  std::size_t dim = 0;
  std::string out;
};

int run_heuristic(const HeuristicOpts& o) {
  if (o.embeddings.empty()) throw UsageError("missing --embeddings");
  if (o.dim == 0) throw UsageError("missing --dim");
  Dataset d = load_corpus(o.common);
  EmbeddingTable table = load_table(o.embeddings, o.dim, OovPolicy::zero());
  std::cerr << "loaded " << table.size() << " vectors, computing maps for "
            << d.pairs.size() << " pairs\n";

  std::vector<AttentionMap> maps(d.pairs.size());
  parallel_indices(d.pairs.size(), o.common.threads, [&](std::size_t i) {
    HeuristicMap h = heuristic_map(d.pairs[i], table);
    maps[i].pair_id = d.pairs[i].pair_id;
    maps[i].premise = std::move(h.premise_scores);
    maps[i].hypothesis = std::move(h.hypothesis_scores);
  });
  write_maps_jsonl(maps, o.out);
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainOpts {
  CommonOpts common;
  std::string embeddings;
  std::size_t dim = 64;
  std::string dev_corpus;
  std::string out;
  std::string log_path;
  std::size_t hidden = 64;
  std::string scoring = "dot";
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch = 32;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  const CLI::Option* seed_opt = nullptr;
};

int run_train(const TrainOpts& o) {
  if (o.embeddings.empty()) throw UsageError("missing --embeddings");
  if (o.out.empty()) throw UsageError("missing --out");
  std::uint64_t seed = resolve_seed(o.seed_opt, o.seed);

  Dataset train_set = load_corpus(o.common);
  Dataset dev_set;
  if (!o.dev_corpus.empty()) {
    CommonOpts dev_common = o.common;
    dev_common.corpus = o.dev_corpus;
    dev_set = load_corpus(dev_common);
  } else {
    // deterministic carve: the last tenth (at least one pair) becomes dev
    if (train_set.pairs.size() < 2)
      throw DataError("need at least 2 pairs to carve a dev split");
    std::size_t n_dev = std::max<std::size_t>(1, train_set.pairs.size() / 10);
    dev_set.split_name = train_set.split_name + "-dev";
    dev_set.pairs.assign(train_set.pairs.end() - static_cast<std::ptrdiff_t>(n_dev),
                         train_set.pairs.end());
    train_set.pairs.resize(train_set.pairs.size() - n_dev);
  }

  ModelConfig cfg;
  cfg.d_e = o.dim;
  cfg.d_h = o.hidden;
  cfg.seed = seed;
  if (o.scoring == "dot")
    cfg.scoring = ModelConfig::Scoring::dot;
  else if (o.scoring == "cosine")
    cfg.scoring = ModelConfig::Scoring::cosine;
  else
    throw UsageError("--scoring must be dot or cosine");

  EmbeddingTable table =
      load_table(o.embeddings, o.dim, OovPolicy::seeded_uniform(-0.05, 0.05, seed));
  ModelParams params = init_model(cfg, build_vocab(train_set), table);
  std::cerr << "vocab " << params.vocab.size() << ", train " << train_set.pairs.size()
            << ", dev " << dev_set.pairs.size() << ", seed " << seed << "\n";

  TrainConfig tc;
  tc.lr = o.lr;
  tc.momentum = o.momentum;
  tc.batch_size = o.batch;
  tc.epochs = o.epochs;
  tc.seed = seed;
  tc.threads = o.common.threads;
  std::vector<EpochLog> logs = train(params, train_set, dev_set, tc);
  for (const auto& log : logs)
    std::cerr << "epoch " << log.epoch << ": loss " << fmt6(log.train_loss) << " dev_acc "
              << fmt6(log.dev_accuracy) << " dev_f1 " << fmt6(log.dev_macro_f1) << "\n";

  if (!o.log_path.empty()) {
    std::string csv = "epoch,train_loss,dev_accuracy,dev_macro_f1\n";
    char buf[128];
    for (const auto& log : logs) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", log.epoch,
                    log.train_loss, log.dev_accuracy, log.dev_macro_f1);
      csv += buf;
    }
    write_text(o.log_path, csv);
  }
  save_model(params, o.out);
  return 0;
}

// ----------------------------------------------------------- extraction

struct ExtractOpts {
  CommonOpts common;
  std::string model;
  std::string out;
};

int run_extract(const ExtractOpts& o) {
  if (o.model.empty()) throw UsageError("missing --model");
  if (o.out.empty()) throw UsageError("missing --out");
  ModelParams params = load_model(o.model);
  Dataset d = load_corpus(o.common);
  write_maps_jsonl(extract_attention(params, d, o.common.threads), o.out);
  return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateOpts {
  CommonOpts common;
  std::string truth = "human";
  std::string candidate;
  std::string model_maps;
  std::string out;
  std::string roc_csv;
};

int run_evaluate(const EvaluateOpts& o) {
  if (o.truth != "human")
    throw UsageError("only --truth human is supported (annotation masks)");
  if (o.candidate.empty()) throw UsageError("missing --candidate");
  if (o.out.empty()) throw UsageError("missing --out");

  Dataset d = load_corpus(o.common);
  std::vector<AttentionMap> candidate = align_maps(d, read_maps_jsonl(o.candidate));
  std::vector<AttentionMap> model;
  if (!o.model_maps.empty()) model = align_maps(d, read_maps_jsonl(o.model_maps));

  EvalReport report = evaluate(d, candidate, o.model_maps.empty() ? nullptr : &model,
                               make_default_grid());
  write_report_json(report, o.out);
  if (!o.roc_csv.empty()) write_roc_csv(report.roc, o.roc_csv);
  std::cerr << "pairs " << report.pair_count << ", auc " << fmt6(report.auc_value)
            << ", pearson(general) " << fmt6(report.global.pearson_general.coefficient)
            << ", spearman(general) " << fmt6(report.global.spearman_general.coefficient)
            << "\n";
  return 0;
}

// ------------------------------------------------------------------- plot

struct PlotOpts {
  std::string report;
  std::vector<std::string> maps;  // name=path or bare path
  std::string pairs;
  std::string corpus;
  std::string columns;
  std::string stopwords;
  std::string out_dir;
};

double attr_of(const std::string& svg, const std::string& key) {
  std::size_t at = svg.find(key + "=\"");
  std::size_t start = at + key.size() + 2;
  std::size_t end = svg.find('"', start);
  return std::stod(svg.substr(start, end - start));
}

std::string hue_for(const std::string& source) {
  if (source == "human") return "#d62728";
  if (source == "model") return "#1f77b4";
  if (source == "heuristic") return "#ff7f0e";
  return "#555555";
}

ordered_json parse_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw FormatError("report is not a JSON object: " + path);
  return j;
}

int run_plot(const PlotOpts& o) {
  if (o.report.empty()) throw UsageError("missing --report");
  if (o.out_dir.empty()) throw UsageError("missing --out");
  std::filesystem::create_directories(o.out_dir);
  auto out_path = [&](const std::string& name) {
    return (std::filesystem::path(o.out_dir) / name).string();
  };

  ordered_json rep = parse_report(o.report);

  // figure 1: candidate ROC against the human masks
  if (rep.contains("roc")) {
    RocCurve curve;
    for (const auto& pt : rep["roc"]) {
      RocPoint p{};
      p.epsilon = pt["epsilon"].is_string() ? std::numeric_limits<double>::infinity()
                                            : pt["epsilon"].get<double>();
      p.tpr = pt["tpr"].get<double>();
      p.fpr = pt["fpr"].get<double>();
      curve.points.push_back(p);
    }
    write_text(out_path("roc.svg"),
               render_roc({{"candidate vs human", curve, "#ff7f0e"}}));
  }

  // figure 2: AUC of human (and model) scorers against epsilon-thresholded
  // candidate pseudo-truth
  if (rep.contains("auc_vs_epsilon")) {
    NamedSeries human{"human", {}, {}, "#ff7f0e"};
    NamedSeries model{"model", {}, {}, "#1f77b4"};
    for (const auto& row : rep["auc_vs_epsilon"]["rows"]) {
      double eps = row["epsilon"].get<double>();
      human.x.push_back(eps);
      human.y.push_back(row["auc_human"].is_null() ? std::nan("")
                                                   : row["auc_human"].get<double>());
      model.x.push_back(eps);
      model.y.push_back(row["auc_model"].is_null() ? std::nan("")
                                                   : row["auc_model"].get<double>());
    }
    std::vector<NamedSeries> series = {human};
    if (std::any_of(model.y.begin(), model.y.end(),
                    [](double v) { return std::isfinite(v); }))
      series.push_back(model);
    write_text(out_path("auc_vs_eps.svg"), render_auc_lines(series, "epsilon", "auc"));
  }

  // figure 3: per-instance metric distributions, premise vs hypothesis
  if (rep.contains("per_instance")) {
    auto values = [&](const char* side, const char* metric) {
      std::vector<double> vs;
      for (const auto& row : rep["per_instance"][side]) vs.push_back(row[metric]);
      return vs;
    };
    auto hist = [&](const char* metric, double lo, double hi) {
      return render_histograms(
          {{"premise", values("premise", metric), "#d62728"},
           {"hypothesis", values("hypothesis", metric), "#1f77b4"}},
          lo, hi, 40, metric);
    };
    write_text(out_path("hist_js.svg"), hist("js", 0.0, std::log(2.0)));
    write_text(out_path("hist_spearman.svg"), hist("spearman", -1.0, 1.0));
    write_text(out_path("hist_pearson.svg"), hist("pearson", -1.0, 1.0));
  }

  // token heatmaps for the chosen pairs in every supplied map source
  if (!o.pairs.empty()) {
    if (o.maps.empty()) throw UsageError("--pairs needs at least one --maps source");

    std::unordered_map<std::string, const SentencePair*> by_id;
    Dataset d;
    if (!o.corpus.empty()) {
      CommonOpts c;
      c.corpus = o.corpus;
      c.columns = o.columns;
      c.stopwords = o.stopwords;
      d = load_corpus(c);
      for (const auto& p : d.pairs) by_id.emplace(p.pair_id, &p);
    }

    std::vector<std::string> ids;
    for (std::size_t at = 0; at < o.pairs.size();) {
      std::size_t comma = o.pairs.find(',', at);
      if (comma == std::string::npos) comma = o.pairs.size();
      if (comma > at) ids.push_back(o.pairs.substr(at, comma - at));
      at = comma + 1;
    }
    if (ids.empty()) throw UsageError("--pairs lists no ids");

    for (const std::string& entry : o.maps) {
      std::size_t eq = entry.find('=');
      std::string source, path;
      if (eq == std::string::npos) {
        path = entry;
        source = std::filesystem::path(entry).stem().string();
      } else {
        source = entry.substr(0, eq);
        path = entry.substr(eq + 1);
      }
      if (source.empty() || path.empty())
        throw UsageError("bad --maps entry '" + entry + "' (want name=path)");

      std::vector<AttentionMap> maps = read_maps_jsonl(path);
      std::unordered_map<std::string, const AttentionMap*> map_index;
      for (const auto& m : maps) map_index.emplace(m.pair_id, &m);

      for (const std::string& id : ids) {
        auto it = map_index.find(id);
        if (it == map_index.end())
          throw DataError("pair '" + id + "' not present in maps " + path);
        AttentionMap scaled = rescale_by_sentence_max({*it->second}).front();

        auto labels = [&](bool premise_side, std::size_t n) {
          std::vector<std::string> out;
          auto pair_it = by_id.find(id);
          if (pair_it != by_id.end()) {
            const auto& tokens =
                premise_side ? pair_it->second->premise : pair_it->second->hypothesis;
            if (tokens.size() == n)
              for (const auto& t : tokens) out.push_back(t.surface);
          }
          if (out.empty())
            for (std::size_t i = 1; i <= n; ++i) out.push_back(std::to_string(i));
          return out;
        };

        HeatmapSpec prem;
        prem.title = id + " premise (" + source + ")";
        prem.row_tokens = {"premise"};
        prem.col_tokens = labels(true, scaled.premise.size());
        prem.values = {scaled.premise};
        prem.hue = hue_for(source);
        HeatmapSpec hyp;
        hyp.title = "hypothesis";
        hyp.row_tokens = {"hypothesis"};
        hyp.col_tokens = labels(false, scaled.hypothesis.size());
        hyp.values = {scaled.hypothesis};
        hyp.hue = hue_for(source);

        std::string strip_p = render_heatmap(prem);
        std::string strip_h = render_heatmap(hyp);
        double wp = attr_of(strip_p, "width"), hp = attr_of(strip_p, "height");
        double wh = attr_of(strip_h, "width"), hh = attr_of(strip_h, "height");
        std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                          fmt6(std::max(wp, wh)) + "\" height=\"" + fmt6(hp + hh + 8) +
                          "\" font-family=\"monospace\" font-size=\"12\">\n";
        svg += strip_p;
        svg += "<g transform=\"translate(0 " + fmt6(hp + 8) + ")\">\n" + strip_h +
               "</g>\n</svg>\n";
        write_text(out_path("heatmap_" + id + "_" + source + ".svg"), svg);
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention plausibility toolkit"};
  app.require_subcommand(1);

  StatsOpts stats;
  auto* stats_cmd = app.add_subcommand("stats", "corpus and highlight statistics");
  add_common(stats_cmd, stats.common);
  stats_cmd->add_flag("--print-stopwords", stats.print_stopwords,
                      "print the active stop-word list and exit");

  HeuristicOpts heur;
  auto* heur_cmd =
      app.add_subcommand("heuristic", "similarity-based plausible attention maps");
  add_common(heur_cmd, heur.common);
  heur_cmd->add_option("--embeddings", heur.embeddings, "word vectors, text format");
  heur_cmd->add_option("--dim", heur.dim, "embedding dimension");
  heur_cmd->add_option("--out", heur.out, "output maps (JSONL)")->required();

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "train the attention classifier");
  add_common(train_cmd, tr.common);
  train_cmd->add_option("--embeddings", tr.embeddings, "word vectors, text format");
  train_cmd->add_option("--dim", tr.dim, "embedding dimension");
  train_cmd->add_option("--dev", tr.dev_corpus,
                        "dev corpus (default: carve the last tenth of train)");
  train_cmd->add_option("--hidden", tr.hidden, "LSTM state size per direction");
  train_cmd->add_option("--scoring", tr.scoring, "attention scoring: dot or cosine");
  train_cmd->add_option("--lr", tr.lr, "learning rate");
  train_cmd->add_option("--momentum", tr.momentum, "momentum coefficient");
  train_cmd->add_option("--batch", tr.batch, "minibatch size");
  train_cmd->add_option("--epochs", tr.epochs, "training epochs");
  tr.seed_opt = train_cmd->add_option("--seed", tr.seed,
                                      "RNG seed (overrides ATTNPLAUS_SEED)");
  train_cmd->add_option("--log", tr.log_path, "write per-epoch CSV log here");
  train_cmd->add_option("--out", tr.out, "output model file")->required();

  ExtractOpts ex;
  auto* ex_cmd =
      app.add_subcommand("extract-attention", "attention maps from a trained model");
  add_common(ex_cmd, ex.common);
  ex_cmd->add_option("--model", ex.model, "trained model file")->required();
  ex_cmd->add_option("--out", ex.out, "output maps (JSONL)")->required();

  EvaluateOpts ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "score candidate maps against truth");
  add_common(ev_cmd, ev.common);
  ev_cmd->add_option("--truth", ev.truth, "truth source (human)");
  ev_cmd->add_option("--candidate", ev.candidate, "candidate maps (JSONL)")->required();
  ev_cmd->add_option("--model-maps", ev.model_maps,
                     "model attention maps for the epsilon table (JSONL)");
  ev_cmd->add_option("--out", ev.out, "output report (JSON)")->required();
  ev_cmd->add_option("--roc-csv", ev.roc_csv, "also write the ROC points as CSV");

  PlotOpts pl;
  auto* pl_cmd = app.add_subcommand("plot", "render report figures as SVG");
  pl_cmd->add_option("--report", pl.report, "evaluation report (JSON)")->required();
  pl_cmd->add_option("--maps", pl.maps,
                     "attention maps as name=path (repeatable; bare path uses the "
                     "file stem as name)");
  pl_cmd->add_option("--pairs", pl.pairs, "comma-separated pair ids to heatmap");
  pl_cmd->add_option("--corpus", pl.corpus, "corpus for heatmap token labels");
  pl_cmd->add_option("--columns", pl.columns, "column overrides for --corpus");
  pl_cmd->add_option("--stopwords", pl.stopwords, "stop-word file for --corpus");
  pl_cmd->add_option("--out", pl.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (stats_cmd->parsed()) return run_stats(stats);
    if (heur_cmd->parsed()) return run_heuristic(heur);
    if (train_cmd->parsed()) return run_train(tr);
    if (ex_cmd->parsed()) return run_extract(ex);
    if (ev_cmd->parsed()) return run_evaluate(ev);
    if (pl_cmd->parsed()) return run_plot(pl);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
