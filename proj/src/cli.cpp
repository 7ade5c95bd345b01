#include "fmea/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmea/config.hpp"
#include "fmea/error.hpp"
#include "fmea/eval.hpp"
#include "fmea/infer.hpp"
#include "fmea/pipeline.hpp"
#include "fmea/util.hpp"

namespace fmea {

namespace {

namespace fs = std::filesystem;

std::unique_ptr<LlmClient> make_llm(const RunConfig& rc) {
  if (rc.llm_backend == "mock") return std::make_unique<MockLlm>();
  if (rc.llm_backend == "replay") {
    if (rc.transcripts.empty()) {
      throw Error(Errc::UsageError,
                  "replay backend needs --transcripts <file>");
    }
    return std::make_unique<ReplayLlm>(rc.transcripts);
  }
  if (rc.llm_backend == "http") {
    HttpLlmConfig config;
    config.base_url = rc.llm_base_url;
    config.api_key = rc.llm_api_key;
    config.model = rc.llm_model;
    return std::make_unique<HttpLlm>(config);
  }
  throw Error(Errc::UsageError, "unknown llm backend '" + rc.llm_backend + "'");
}

std::unique_ptr<EmbeddingProvider> make_provider(const RunConfig& rc) {
  if (rc.embeddings == "offline") {
    return std::make_unique<OfflineEmbeddingProvider>();
  }
  if (rc.embeddings == "http") {
    HttpEmbeddingConfig config;
    config.base_url = rc.llm_base_url;
    config.api_key = rc.llm_api_key;
    config.model = rc.embed_model;
    config.dim = rc.embed_dim;
    return std::make_unique<HttpEmbeddingProvider>(config);
  }
  throw Error(Errc::UsageError,
              "unknown embeddings provider '" + rc.embeddings + "'");
}

void echo_config(const RunConfig& rc) {
  std::cerr << "# resolved config\n" << rc.echo();
}

std::vector<int> parse_ns(const std::string& text) {
  std::size_t dots = text.find("..");
  std::vector<int> ns;
  if (dots != std::string::npos) {
    int lo = std::stoi(text.substr(0, dots));
    int hi = std::stoi(text.substr(dots + 2));
    for (int n = lo; n <= hi; ++n) ns.push_back(n);
  } else {
    for (const std::string& part : util::split_any_trimmed(text, ",")) {
      ns.push_back(std::stoi(part));
    }
  }
  if (ns.empty()) throw Error(Errc::UsageError, "empty n list");
  return ns;
}

PcaModel fit_graph_pca(const KnowledgeGraph& g, EmbeddingProvider& provider,
                       int text_dim) {
  std::vector<std::string> labels;
  labels.reserve(g.node_count());
  for (const Node& n : g.nodes()) labels.push_back(n.label);
  return fit_pca(embed_texts(provider, labels), text_dim);
}

// ----- build-kg -----

struct BuildKgArgs {
  std::vector<std::string> worksheets;
  std::vector<std::string> line_ids;
  std::string ontology_path;
  std::string out;
  std::string ontology_out;
  std::string record;
  std::string error_policy = "abort";
};

int cmd_build_kg(const RunConfig& rc, const BuildKgArgs& args) {
  echo_config(rc);
  if (!args.line_ids.empty() &&
      args.line_ids.size() != args.worksheets.size()) {
    throw Error(Errc::UsageError,
                "--line-id count must match --worksheet count");
  }
  Ontology ontology = load_ontology(args.ontology_path);
  std::unique_ptr<LlmClient> llm = make_llm(rc);
  std::unique_ptr<RecordingLlm> recorder;
  LlmClient* client = llm.get();
  if (!args.record.empty()) {
    recorder = std::make_unique<RecordingLlm>(*llm);
    client = recorder.get();
  }

  std::vector<Worksheet> worksheets;
  for (std::size_t i = 0; i < args.worksheets.size(); ++i) {
    std::string line_id = i < args.line_ids.size()
                              ? args.line_ids[i]
                              : fs::path(args.worksheets[i]).stem().string();
    worksheets.push_back(parse_worksheet(args.worksheets[i], line_id));
  }

  BuildOptions options;
  options.shortlist_k = rc.shortlist_k;
  options.policy = args.error_policy == "skip" ? ErrorPolicy::SkipAndLog
                                               : ErrorPolicy::Abort;
  KnowledgeGraph g = build_kg(worksheets, ontology, *client, options);
  save_graph(g, args.out);
  if (!args.ontology_out.empty()) save_ontology(ontology, args.ontology_out);
  if (recorder) recorder->save(args.record);
  std::cerr << "built graph: " << g.node_count() << " nodes, "
            << g.edge_count() << " edges\n";
  return 0;
}

// ----- train -----

struct TrainArgs {
  std::string kg;
  std::string out;
  std::string loss_trace;
};

int cmd_train(const RunConfig& rc, const TrainArgs& args) {
  echo_config(rc);
  KnowledgeGraph g = load_graph(args.kg);
  std::unique_ptr<EmbeddingProvider> provider = make_provider(rc);
  PcaModel pca = fit_graph_pca(g, *provider, rc.train.text_dim);
  Eigen::MatrixXd text = text_features(g, pca, *provider);
  Checkpoint ckpt = train(g, text, pca, rc.train);
  ckpt.embeddings_provider = rc.embeddings;
  save_checkpoint(ckpt, args.out);
  if (!args.loss_trace.empty()) {
    util::write_file(args.loss_trace, loss_trace_csv(ckpt));
  }
  if (!ckpt.loss_trace.empty()) {
    std::cerr << "trained " << ckpt.loss_trace.size() << " epochs, loss "
              << ckpt.loss_trace.front() << " -> " << ckpt.loss_trace.back()
              << ", best epoch " << ckpt.best_epoch << "\n";
  }
  return 0;
}

// ----- predict -----

struct PredictArgs {
  std::string kg;
  std::string ckpt;
  std::string ontology_path;
  std::string line;
  std::string function;
  std::string desc;
  int topk = 20;
  bool no_order_logit = false;
  std::string out;
  std::string record;
};

int cmd_predict(RunConfig rc, const PredictArgs& args) {
  KnowledgeGraph g = load_graph(args.kg);
  Checkpoint ckpt = load_checkpoint(args.ckpt);
  if (rc.embeddings == "offline" && !ckpt.embeddings_provider.empty()) {
    rc.embeddings = ckpt.embeddings_provider;
  }
  echo_config(rc);
  Ontology ontology = args.ontology_path.empty()
                          ? ontology_from_graph(g)
                          : load_ontology(args.ontology_path);
  std::unique_ptr<LlmClient> llm = make_llm(rc);
  std::unique_ptr<RecordingLlm> recorder;
  LlmClient* client = llm.get();
  if (!args.record.empty()) {
    recorder = std::make_unique<RecordingLlm>(*llm);
    client = recorder.get();
  }
  std::unique_ptr<EmbeddingProvider> provider = make_provider(rc);

  Query query{args.desc, args.line, args.function};
  PredictOptions options;
  options.order_logit = !args.no_order_logit;
  std::vector<RankedCandidate> ranked = predict(
      query, ckpt, g, ontology, *client, *provider, args.topk, options);
  std::cout << candidates_table(ranked);
  if (!args.out.empty()) util::write_file(args.out, candidates_jsonl(ranked));
  if (recorder) recorder->save(args.record);
  return 0;
}

// ----- evaluate -----

struct EvaluateArgs {
  std::string kg;
  std::string ckpt;
  std::string scenarios;
  std::string ontology_path;
  std::string alias_path;
  std::string ns_text = "1..20";
  std::string rankings;
  std::string out;
  bool no_order_logit = false;
  bool no_rerank = false;
};

std::vector<std::vector<std::string>> load_rankings(const std::string& path) {
  std::vector<std::vector<std::string>> rankings;
  for (const std::string& line : util::split(util::read_file(path), '\n')) {
    if (util::trim(line).empty()) continue;
    auto rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("labels")) {
      throw Error(Errc::MalformedGraphFile, "bad ranking line: " + line);
    }
    rankings.push_back(rec["labels"].get<std::vector<std::string>>());
  }
  return rankings;
}

int cmd_evaluate(const RunConfig& rc, const EvaluateArgs& args) {
  echo_config(rc);
  std::vector<Scenario> scenarios =
      parse_scenarios(util::read_file(args.scenarios));
  AliasMap aliases;
  if (!args.alias_path.empty()) {
    aliases = parse_aliases(util::read_file(args.alias_path));
  }
  std::vector<int> ns = parse_ns(args.ns_text);

  MetricsReport report;
  if (!args.rankings.empty()) {
    report =
        evaluate_rankings(load_rankings(args.rankings), scenarios, ns, aliases);
  } else {
    if (args.kg.empty() || args.ckpt.empty()) {
      throw Error(Errc::UsageError,
                  "evaluate needs --kg and --ckpt (or --rankings)");
    }
    KnowledgeGraph g = load_graph(args.kg);
    Checkpoint ckpt = load_checkpoint(args.ckpt);
    Ontology ontology = args.ontology_path.empty()
                            ? ontology_from_graph(g)
                            : load_ontology(args.ontology_path);
    std::unique_ptr<LlmClient> llm = make_llm(rc);
    std::unique_ptr<EmbeddingProvider> provider = make_provider(rc);
    EvalContext ctx;
    ctx.ckpt = &ckpt;
    ctx.graph = &g;
    ctx.ontology = &ontology;
    ctx.llm = llm.get();
    ctx.provider = provider.get();
    ctx.options.order_logit = !args.no_order_logit;
    ctx.options.rerank = !args.no_rerank;
    ctx.aliases = aliases;
    report = evaluate(ctx, scenarios, ns);
  }
  for (int n : report.ns) {
    const MetricsAtN& m = report.macro.at(n);
    std::cout << "macro @" << n << ": P=" << m.p << " R=" << m.r
              << " F1=" << m.f1 << "\n";
  }
  if (!args.out.empty()) util::write_file(args.out, metrics_csv(report));
  return 0;
}

// ----- gen-synth -----

struct GenSynthArgs {
  GeneratorSpec spec;
  std::string spec_file;
  std::string out_dir;
};

GeneratorSpec parse_generator_spec(const std::string& content,
                                   GeneratorSpec spec) {
  for (const std::string& raw : util::split(content, '\n')) {
    std::string line = util::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::UsageError, "generator spec: expected key = value");
    }
    std::string key = util::trim(line.substr(0, eq));
    std::string value = util::trim(line.substr(eq + 1));
    if (key == "lines") spec.lines = std::stoi(value);
    else if (key == "functions_per_line") spec.functions_per_line = std::stoi(value);
    else if (key == "rules") spec.rules = std::stoi(value);
    else if (key == "noise") spec.noise = std::stod(value);
    else throw Error(Errc::UsageError, "unknown generator key '" + key + "'");
  }
  return spec;
}

int cmd_gen_synth(const RunConfig& rc, const GenSynthArgs& args) {
  echo_config(rc);
  GeneratorSpec spec = args.spec;
  if (!args.spec_file.empty()) {
    spec = parse_generator_spec(util::read_file(args.spec_file), spec);
  }
  SyntheticDataset dataset = generate_synthetic(spec, rc.train.seed);
  fs::create_directories(args.out_dir);
  nlohmann::ordered_json manifest;
  manifest["target_line"] = dataset.target_line;
  manifest["seed"] = rc.train.seed;
  manifest["lines"] = nlohmann::ordered_json::array();
  for (const Worksheet& ws : dataset.worksheets) {
    std::string name = ws.line_id + ".csv";
    util::write_file((fs::path(args.out_dir) / name).string(),
                     worksheet_csv(ws));
    nlohmann::ordered_json entry;
    entry["line"] = ws.line_id;
    entry["file"] = name;
    manifest["lines"].push_back(entry);
  }
  manifest["spec"]["lines"] = spec.lines;
  manifest["spec"]["functions_per_line"] = spec.functions_per_line;
  manifest["spec"]["rules"] = spec.rules;
  manifest["spec"]["noise"] = spec.noise;
  save_ontology(dataset.ontology,
                (fs::path(args.out_dir) / "ontology.tsv").string());
  util::write_file((fs::path(args.out_dir) / "scenarios.jsonl").string(),
                   scenarios_jsonl(dataset.scenarios));
  util::write_file((fs::path(args.out_dir) / "aliases.tsv").string(),
                   serialize_aliases(dataset.aliases));
  util::write_file((fs::path(args.out_dir) / "manifest.json").string(),
                   manifest.dump(2) + "\n");
  std::cerr << "wrote synthetic dataset: " << dataset.worksheets.size()
            << " lines, " << dataset.scenarios.size() << " scenarios\n";
  return 0;
}

// ----- ablate -----

struct AblateArgs {
  std::string dataset_dir;
  std::vector<std::uint64_t> seeds;
  int num_seeds = 5;
  std::string out;
  std::string csv;
};

SyntheticDataset load_dataset(const std::string& dir) {
  SyntheticDataset dataset;
  auto manifest = nlohmann::json::parse(
      util::read_file((fs::path(dir) / "manifest.json").string()));
  dataset.target_line = manifest.at("target_line").get<std::string>();
  for (const auto& entry : manifest.at("lines")) {
    dataset.worksheets.push_back(parse_worksheet(
        (fs::path(dir) / entry.at("file").get<std::string>()).string(),
        entry.at("line").get<std::string>()));
  }
  dataset.ontology = load_ontology((fs::path(dir) / "ontology.tsv").string());
  dataset.scenarios = parse_scenarios(
      util::read_file((fs::path(dir) / "scenarios.jsonl").string()));
  dataset.aliases = parse_aliases(
      util::read_file((fs::path(dir) / "aliases.tsv").string()));
  return dataset;
}

int cmd_ablate(const RunConfig& rc, const AblateArgs& args) {
  echo_config(rc);
  SyntheticDataset dataset = load_dataset(args.dataset_dir);
  std::vector<std::uint64_t> seeds = args.seeds;
  if (seeds.empty()) {
    for (int i = 0; i < args.num_seeds; ++i) {
      seeds.push_back(rc.train.seed + static_cast<std::uint64_t>(i));
    }
  }
  std::vector<AblationResult> results =
      run_ablation(dataset, paper_ablation_rows(), seeds, rc.train);
  std::string table = ablation_table(results);
  std::cout << table;
  if (!args.out.empty()) util::write_file(args.out, table);
  if (!args.csv.empty()) util::write_file(args.csv, ablation_csv(results));
  return 0;
}

// ----- grad-check -----

struct GradCheckArgs {
  std::string kg;
  int probes = 100;
  double eps = 1e-5;
  double tolerance = 1e-4;
};

KnowledgeGraph default_toy_graph() {
  // Small single-line fixture covering every relation kind.
  GeneratorSpec spec;
  spec.lines = 2;
  spec.functions_per_line = 3;
  spec.rules = 2;
  spec.noise = 0.0;
  SyntheticDataset dataset = generate_synthetic(spec, 7);
  Ontology ontology = dataset.ontology;
  MockLlm llm;
  return build_kg({dataset.worksheets.front()}, ontology, llm, {});
}

int cmd_grad_check(const RunConfig& rc, const GradCheckArgs& args) {
  echo_config(rc);
  KnowledgeGraph g =
      args.kg.empty() ? default_toy_graph() : load_graph(args.kg);
  OfflineEmbeddingProvider provider;
  PcaModel pca = fit_graph_pca(g, provider, rc.train.text_dim);
  Eigen::MatrixXd text = text_features(g, pca, provider);
  util::Rng rng(util::mix(rc.train.seed, 0x6fd));
  ModelParams params = init_params(rc.train, rng);
  FdReport report = finite_difference_check(g, text, params, rc.train,
                                            args.probes, args.eps,
                                            rc.train.seed);
  std::cout << "max relative error " << report.max_rel_error << " over "
            << report.probes << " probes (eps " << args.eps << ")\n";
  if (report.max_rel_error >= args.tolerance) {
    std::cerr << "gradient check failed tolerance " << args.tolerance << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"FMEA knowledge-graph toolkit"};
  app.require_subcommand(1);
  // lets `--config` appear after the subcommand as well
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "flat key = value config file");

  RunConfig rc;

  // Shared option targets; applied onto rc after file + env resolution.
  std::optional<int> opt_epochs, opt_negative_ratio, opt_k_overlap,
      opt_hidden_dim, opt_text_dim, opt_type_dim, opt_eval_every,
      opt_shortlist_k;
  std::optional<double> opt_lr, opt_alpha, opt_beta, opt_lambda,
      opt_weight_decay;
  std::optional<std::uint64_t> opt_seed;
  std::optional<std::string> opt_llm, opt_embeddings, opt_transcripts,
      opt_split;

  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--epochs", opt_epochs);
    cmd->add_option("--lr", opt_lr);
    cmd->add_option("--negative-ratio", opt_negative_ratio);
    cmd->add_option("--alpha", opt_alpha);
    cmd->add_option("--beta", opt_beta);
    cmd->add_option("--lambda", opt_lambda);
    cmd->add_option("--k-overlap", opt_k_overlap);
    cmd->add_option("--weight-decay", opt_weight_decay);
    cmd->add_option("--hidden-dim", opt_hidden_dim);
    cmd->add_option("--text-dim", opt_text_dim);
    cmd->add_option("--type-dim", opt_type_dim);
    cmd->add_option("--eval-every", opt_eval_every);
    cmd->add_option("--split", opt_split, "train,val,test fractions");
  };
  auto add_llm_flags = [&](CLI::App* cmd) {
    cmd->add_option("--llm", opt_llm)
        ->check(CLI::IsMember({"mock", "replay", "http"}));
    cmd->add_option("--transcripts", opt_transcripts);
  };
  auto add_embed_flags = [&](CLI::App* cmd) {
    cmd->add_option("--embeddings", opt_embeddings)
        ->check(CLI::IsMember({"offline", "http"}));
  };

  BuildKgArgs build_args;
  CLI::App* build = app.add_subcommand("build-kg",
                                       "extract worksheets into a graph");
  build->add_option("--ontology", build_args.ontology_path)->required();
  build->add_option("--worksheet", build_args.worksheets)->required();
  build->add_option("--line-id", build_args.line_ids);
  build->add_option("--out", build_args.out)->required();
  build->add_option("--ontology-out", build_args.ontology_out);
  build->add_option("--record", build_args.record,
                    "record LLM transcripts to this replay store");
  build->add_option("--error-policy", build_args.error_policy)
      ->check(CLI::IsMember({"abort", "skip"}));
  build->add_option("--k", opt_shortlist_k, "shortlist size");
  add_llm_flags(build);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train the model");
  train_cmd->add_option("--kg", train_args.kg)->required();
  train_cmd->add_option("--seed", opt_seed)->required();
  train_cmd->add_option("--out", train_args.out)->required();
  train_cmd->add_option("--loss-trace", train_args.loss_trace);
  add_train_flags(train_cmd);
  add_embed_flags(train_cmd);

  PredictArgs predict_args;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "rank candidate causes for a failure");
  predict_cmd->add_option("--kg", predict_args.kg)->required();
  predict_cmd->add_option("--ckpt", predict_args.ckpt)->required();
  predict_cmd->add_option("--line", predict_args.line)->required();
  predict_cmd->add_option("--function", predict_args.function)->required();
  predict_cmd->add_option("--desc", predict_args.desc)->required();
  predict_cmd->add_option("--topk", predict_args.topk);
  predict_cmd->add_option("--ontology", predict_args.ontology_path);
  predict_cmd->add_option("--out", predict_args.out);
  predict_cmd->add_option("--record", predict_args.record,
                          "record LLM transcripts to this replay store");
  predict_cmd->add_flag("--no-order-logit", predict_args.no_order_logit);
  add_llm_flags(predict_cmd);
  add_embed_flags(predict_cmd);

  EvaluateArgs eval_args;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "score scenarios against ground truth");
  eval_cmd->add_option("--kg", eval_args.kg);
  eval_cmd->add_option("--ckpt", eval_args.ckpt);
  eval_cmd->add_option("--scenarios", eval_args.scenarios)->required();
  eval_cmd->add_option("--ontology", eval_args.ontology_path);
  eval_cmd->add_option("--alias", eval_args.alias_path);
  eval_cmd->add_option("--ns", eval_args.ns_text);
  eval_cmd->add_option("--rankings", eval_args.rankings,
                       "precomputed rankings (JSON Lines)");
  eval_cmd->add_option("--out", eval_args.out);
  eval_cmd->add_flag("--no-order-logit", eval_args.no_order_logit);
  eval_cmd->add_flag("--no-rerank", eval_args.no_rerank);
  add_llm_flags(eval_cmd);
  add_embed_flags(eval_cmd);

  GenSynthArgs gen_args;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-synth", "generate a synthetic dataset");
  gen_cmd->add_option("--seed", opt_seed)->required();
  gen_cmd->add_option("--out", gen_args.out_dir)->required();
  gen_cmd->add_option("--spec", gen_args.spec_file,
                      "key = value generator spec file");
  gen_cmd->add_option("--lines", gen_args.spec.lines);
  gen_cmd->add_option("--functions", gen_args.spec.functions_per_line);
  gen_cmd->add_option("--rules", gen_args.spec.rules);
  gen_cmd->add_option("--noise", gen_args.spec.noise);

  AblateArgs ablate_args;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "run the H/C/P ablation table");
  ablate_cmd->add_option("--dataset", ablate_args.dataset_dir)->required();
  ablate_cmd->add_option("--seed", opt_seed)->required();
  ablate_cmd->add_option("--seeds", ablate_args.seeds,
                         "explicit seed list (overrides --seed)");
  ablate_cmd->add_option("--num-seeds", ablate_args.num_seeds);
  ablate_cmd->add_option("--out", ablate_args.out);
  ablate_cmd->add_option("--csv", ablate_args.csv);
  add_train_flags(ablate_cmd);

  GradCheckArgs grad_args;
  CLI::App* grad_cmd =
      app.add_subcommand("grad-check", "finite-difference gradient check");
  grad_cmd->add_option("--kg", grad_args.kg);
  grad_cmd->add_option("--probes", grad_args.probes);
  grad_cmd->add_option("--eps", grad_args.eps);
  grad_cmd->add_option("--tolerance", grad_args.tolerance);
  grad_cmd->add_option("--seed", opt_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) rc.apply_file(config_path);
    rc.apply_env();
    // flags win
    if (opt_epochs) rc.train.epochs = *opt_epochs;
    if (opt_lr) rc.train.learning_rate = *opt_lr;
    if (opt_negative_ratio) rc.train.negative_ratio = *opt_negative_ratio;
    if (opt_alpha) rc.train.alpha = *opt_alpha;
    if (opt_beta) rc.train.beta = *opt_beta;
    if (opt_lambda) rc.train.lambda = *opt_lambda;
    if (opt_k_overlap) rc.train.k_overlap = *opt_k_overlap;
    if (opt_weight_decay) rc.train.weight_decay = *opt_weight_decay;
    if (opt_hidden_dim) rc.train.hidden_dim = *opt_hidden_dim;
    if (opt_text_dim) rc.train.text_dim = *opt_text_dim;
    if (opt_type_dim) rc.train.type_dim = *opt_type_dim;
    if (opt_eval_every) rc.train.eval_every = *opt_eval_every;
    if (opt_seed) rc.train.seed = *opt_seed;
    if (opt_shortlist_k) rc.shortlist_k = *opt_shortlist_k;
    if (opt_llm) rc.llm_backend = *opt_llm;
    if (opt_embeddings) rc.embeddings = *opt_embeddings;
    if (opt_transcripts) rc.transcripts = *opt_transcripts;
    if (opt_split) {
      std::vector<std::string> parts = util::split_any_trimmed(*opt_split, ",");
      if (parts.size() != 3) {
        throw Error(Errc::UsageError, "--split needs train,val,test");
      }
      rc.train.split_train = std::stod(parts[0]);
      rc.train.split_val = std::stod(parts[1]);
      rc.train.split_test = std::stod(parts[2]);
    }

    if (build->parsed()) return cmd_build_kg(rc, build_args);
    if (train_cmd->parsed()) return cmd_train(rc, train_args);
    if (predict_cmd->parsed()) return cmd_predict(rc, predict_args);
    if (eval_cmd->parsed()) return cmd_evaluate(rc, eval_args);
    if (gen_cmd->parsed()) return cmd_gen_synth(rc, gen_args);
    if (ablate_cmd->parsed()) return cmd_ablate(rc, ablate_args);
    if (grad_cmd->parsed()) return cmd_grad_check(rc, grad_args);
    throw Error(Errc::UsageError, "no subcommand selected");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fmea
