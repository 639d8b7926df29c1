#pragma once

// Subcommands ingest, fit, evaluate, generate and report. Every command takes
// an optional flat key=value config file whose keys are long flag names;
// flags given on the command line win. Exit status: 0 ok, 1 usage, 2 data.

#include <CLI11.hpp>
#include <json.hpp>

#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tbm/tbm.hpp"

namespace tbm::cli {

namespace detail {

struct HyperFlags {
  double xi0 = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double kappa = 0.1;

  void add(CLI::App& app) {
    app.add_option("--xi0", xi0, "community concentration")->capture_default_str();
    app.add_option("--alpha", alpha, "gamma shape of block rates")->capture_default_str();
    app.add_option("--beta", beta, "gamma rate of block rates")->capture_default_str();
    app.add_option("--kappa", kappa, "topic-word concentration")->capture_default_str();
  }

  Hyperparams make(int K, int T) const {
    Hyperparams h;
    h.K = K;
    h.T = T;
    h.xi0 = xi0;
    h.alpha_lambda = alpha;
    h.beta_lambda = beta;
    h.kappa = kappa;
    h.validate();
    return h;
  }
};

struct ChainFlags {
  int iters = 1000;
  int burnin = 500;
  int thin = 10;
  bool no_anneal = false;
  double mh_step = 0.1;
  std::string hypers = "xi0,alpha_lambda,beta_lambda,kappa";

  void add(CLI::App& app) {
    app.add_option("--iters", iters, "Gibbs sweeps")->capture_default_str();
    app.add_option("--burnin", burnin, "annealed sweeps before retention")->capture_default_str();
    app.add_option("--thin", thin, "keep every n-th post-burn-in sweep")->capture_default_str();
    app.add_flag("--no-anneal", no_anneal, "disable tempering during burn-in");
    app.add_option("--mh-step", mh_step, "log-scale MH proposal width")->capture_default_str();
    app.add_option("--sample-hypers", hypers, "comma list of hyperparameters to sample, or none")
        ->capture_default_str();
  }

  ChainConfig make(std::uint64_t seed) const {
    ChainConfig c;
    c.iterations = iters;
    c.burnin = burnin;
    c.thin = thin;
    c.seed = seed;
    c.anneal = !no_anneal;
    c.mh_step = mh_step;
    c.sample_hypers.clear();
    if (hypers != "none")
      for (const auto& name : split_list(hypers)) c.sample_hypers.push_back(parse_hyper_name(name));
    c.validate();
    return c;
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) out.push_back(item);
    return out;
  }
};

inline int default_communities(int S, int requested, int divisor) {
  if (requested > 0) return requested;
  if (divisor < 1) throw InvalidParam("--communities-divisor must be positive");
  return std::max(1, S / divisor);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

inline void check_match(const PosteriorSamples& ps, const InteractionCorpus& corpus) {
  if (ps.num_nodes != corpus.num_nodes())
    throw InconsistentState("samples were fitted on " + std::to_string(ps.num_nodes) +
                            " nodes, corpus has " + std::to_string(corpus.num_nodes()));
  if (ps.vocab_hash != vocab_hash(corpus.vocabulary))
    throw InconsistentState("samples were fitted on a different vocabulary");
}

inline bool is_block_kind(ModelKind k) {
  return k == ModelKind::TopicBlock || k == ModelKind::CNT || k == ModelKind::PoissonSBM;
}

inline bool applies(Task task, ModelKind k) {
  switch (task) {
    case Task::Text: return k != ModelKind::PoissonSBM;
    case Task::Recipient:
    case Task::SenderRecipient: return k != ModelKind::LDA;
    case Task::EdgeCount: return k == ModelKind::TopicBlock || k == ModelKind::PoissonSBM;
  }
  return false;
}

inline std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

inline void write_report(const EvalReport& rep, const std::string& prefix) {
  const std::string base = prefix + "." + std::string(to_string(rep.task)) + "." + rep.model;
  nlohmann::json items = nlohmann::json::array();
  for (const auto& [id, v] : rep.per_item) items.push_back({{"id", id}, {"log_predictive", v}});
  nlohmann::json j = {{"task", std::string(to_string(rep.task))},
                      {"model", rep.model},
                      {"total_log_predictive", rep.total_log_predictive},
                      {"mc_standard_error", rep.mc_standard_error},
                      {"num_items", rep.per_item.size()},
                      {"per_item", items}};
  auto jf = open_out(base + ".json");
  jf << j.dump(2) << '\n';
  auto cf = open_out(base + ".csv");
  cf << "id,log_predictive\n" << std::setprecision(17);
  for (const auto& [id, v] : rep.per_item) cf << id << ',' << v << '\n';
}

/// Parses `args` (without the subcommand) into `app`; returns an exit code
/// when parsing ends the command (help or error).
inline std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args,
                                std::ostream& out, std::ostream& err) {
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

inline int cmd_ingest(const std::vector<std::string>& args, std::ostream& out,
                      std::ostream& err) {
  CLI::App app{"Tokenize, filter and encode an interaction corpus", "tbm ingest"};
  app.set_config("--config");
  std::string input, stopwords_path, out_path;
  bool script = false, no_lowercase = false;
  std::size_t min_count = 0, max_count = static_cast<std::size_t>(-1), min_degree = 0;
  app.add_option("--input", input, "JSON-lines messages or script")->required();
  app.add_flag("--script", script, "input is a script; speeches address the previous speaker");
  app.add_option("--stopwords", stopwords_path, "file with one stopword per line");
  app.add_option("--min-count", min_count, "drop words rarer than this")->capture_default_str();
  app.add_option("--max-count", max_count, "drop words more frequent than this");
  app.add_option("--min-degree", min_degree, "drop nodes with fewer messages sent+received")
      ->capture_default_str();
  app.add_flag("--no-lowercase", no_lowercase, "keep letter case");
  app.add_option("--out", out_path, "encoded corpus path")->required();
  if (auto code = parse(app, args, out, err)) return *code;

  PreprocessConfig cfg;
  cfg.min_count = min_count;
  cfg.max_count = max_count;
  cfg.min_node_degree = min_degree;
  cfg.lowercase = !no_lowercase;
  if (!stopwords_path.empty()) {
    auto f = open_in(stopwords_path);
    cfg.stopwords = read_stopwords(f);
  }
  auto in = open_in(input);
  const auto raw = script ? script_to_messages(read_script_jsonl(in)) : read_messages_jsonl(in);
  const auto corpus = ingest_corpus(raw, cfg);
  write_corpus(corpus, out_path);
  out << "nodes " << corpus.num_nodes() << '\n'
      << "vocab " << corpus.vocab_size() << '\n'
      << "messages " << corpus.messages.size() << '\n'
      << "tokens " << corpus.num_tokens() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct HoldoutResult {
  InteractionCorpus train;
  HeldoutInfo info;
  std::vector<Message> documents;
};

inline HoldoutResult apply_holdout(const InteractionCorpus& corpus, const std::string& kind,
                                   double fraction, std::uint64_t seed) {
  HoldoutResult r;
  r.info.kind = kind;
  if (kind == "none") {
    r.train = corpus;
    return r;
  }
  r.info.fraction = fraction;
  r.info.seed = seed;
  Split sp;
  if (kind == "documents")
    sp = split_documents(corpus, fraction, seed);
  else if (kind == "pairs")
    sp = split_pairs(corpus, fraction, seed);
  else
    throw InvalidParam("--holdout-task must be none, documents or pairs");
  r.train = std::move(sp.train);
  for (const auto& m : sp.heldout_documents) r.info.message_ids.push_back(m.id);
  r.info.pairs = sp.heldout_pairs;
  r.documents = std::move(sp.heldout_documents);
  return r;
}

inline int cmd_fit(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Run a posterior chain and write retained samples", "tbm fit"};
  app.set_config("--config");
  std::string corpus_path, out_path, model = "tbm", holdout_task = "none", init_path;
  int topics = 10, communities = 0, divisor = 4, chains = 1;
  double holdout = 0.1;
  std::uint64_t seed = 1;
  HyperFlags hf;
  ChainFlags cf;
  app.add_option("--corpus", corpus_path, "encoded corpus")->required();
  app.add_option("--model", model, "tbm, lda, art, cnt or psbm")->capture_default_str();
  app.add_option("--topics", topics, "number of topics T")->capture_default_str();
  app.add_option("--communities", communities, "number of communities K (0: S / divisor)")
      ->capture_default_str();
  app.add_option("--communities-divisor", divisor, "K = floor(S / divisor) when unset")
      ->capture_default_str();
  app.add_option("--holdout-task", holdout_task, "none, documents or pairs")
      ->capture_default_str();
  app.add_option("--holdout", holdout, "held-out fraction")->capture_default_str();
  app.add_option("--chains", chains, "independent chains, seeds seed..seed+n-1")
      ->capture_default_str();
  app.add_option("--init-samples", init_path,
                 "start from the communities of the last sample in this file");
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--out", out_path, "samples path (suffixed .i for several chains)")->required();
  hf.add(app);
  cf.add(app);
  if (auto code = parse(app, args, out, err)) return *code;

  const auto kind = parse_model_kind(model);
  if (chains < 1) throw InvalidParam("--chains must be at least 1");
  const auto corpus = read_corpus(corpus_path);
  const int S = corpus.num_nodes();
  const int K = default_communities(S, communities, divisor);
  const auto hyper = hf.make(K, kind == ModelKind::PoissonSBM ? 1 : topics);
  const auto base_cfg = cf.make(seed);
  const auto ho = apply_holdout(corpus, holdout_task, holdout, seed);
  const std::string hash = vocab_hash(corpus.vocabulary);

  std::optional<std::vector<int>> init;
  if (!init_path.empty()) {
    const auto prev = read_samples(init_path);
    check_match(prev, corpus);
    if (prev.samples.empty() || prev.samples.back().c.empty())
      throw InconsistentState("init samples carry no community assignments");
    init = prev.samples.back().c;
  }

  const TrainingData data(ho.train, ho.info.pairs);
  std::vector<PosteriorSamples> results(chains);
  std::vector<std::exception_ptr> errors(chains);
  auto run = [&](int i) {
    try {
      auto cfg = base_cfg;
      cfg.seed = seed + static_cast<std::uint64_t>(i);
      results[i] = fit_model(kind, data, K, hyper.T, hyper, cfg, init);
      results[i].vocab_hash = hash;
      results[i].heldout = ho.info;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (chains == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < chains; ++i) pool.emplace_back(run, i);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  out << "model " << to_string(kind) << " K " << (is_block_kind(kind) ? K : 0) << " T "
      << hyper.T << '\n';
  for (int i = 0; i < chains; ++i) {
    const auto path = chains == 1 ? out_path : out_path + "." + std::to_string(i);
    write_samples(results[i], path);
    const auto& r = results[i];
    out << "chain " << i << " samples " << r.samples.size() << " final_joint_log_prob "
        << (r.trace.empty() ? std::string("nan") : fmt(r.trace.back())) << '\n';
    for (auto n : kAllHypers)
      if (r.proposed[static_cast<std::size_t>(n)] > 0)
        out << "  acceptance " << to_string(n) << ' ' << fmt(r.acceptance_rate(n)) << '\n';
    out << "  wrote " << path << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

inline std::vector<Task> parse_tasks(const std::string& s) {
  if (s == "all") return {Task::Text, Task::Recipient, Task::SenderRecipient, Task::EdgeCount};
  return {parse_task(s)};
}

inline EvalReport score(Task task, const PosteriorPredictive& pp, const std::vector<Message>& docs,
                        const std::vector<NodePair>& pairs, const InteractionCorpus& corpus) {
  switch (task) {
    case Task::Text: return heldout_text_loglik(pp, docs);
    case Task::Recipient: return recipient_task(pp, docs);
    case Task::SenderRecipient: return sender_recipient_task(pp, docs);
    case Task::EdgeCount: return edge_count_loglik(pp, pairs, corpus);
  }
  throw InvalidParam("unknown task");
}

inline PosteriorSamples merge_chains(std::vector<PosteriorSamples> parts) {
  PosteriorSamples merged = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.kind != merged.kind || p.num_nodes != merged.num_nodes ||
        p.vocab_hash != merged.vocab_hash || !(p.heldout == merged.heldout))
      throw InconsistentState("sample files come from incompatible runs");
    merged.samples.insert(merged.samples.end(), p.samples.begin(), p.samples.end());
  }
  return merged;
}

inline int cmd_evaluate(const std::vector<std::string>& args, std::ostream& out,
                        std::ostream& err) {
  CLI::App app{"Score held-out documents and pairs", "tbm evaluate"};
  app.set_config("--config");
  std::string corpus_path, out_prefix, models, task_name = "all", grid;
  std::vector<std::string> sample_paths;
  int topics = 10, communities = 0, divisor = 4, folds = 5;
  double holdout = 0.1;
  std::uint64_t seed = 1;
  HyperFlags hf;
  ChainFlags cf;
  app.add_option("--corpus", corpus_path, "encoded corpus")->required();
  app.add_option("--samples", sample_paths,
                 "sample files of one fitted run (chains are pooled); omitted: fit here");
  app.add_option("--model", models, "comma list of models to fit (default: all that apply)");
  app.add_option("--task", task_name, "text, recipient, pair, counts or all")
      ->capture_default_str();
  app.add_option("--holdout", holdout, "held-out fraction")->capture_default_str();
  app.add_option("--topics", topics, "number of topics T")->capture_default_str();
  app.add_option("--communities", communities, "K (0: S / divisor)")->capture_default_str();
  app.add_option("--communities-divisor", divisor, "K = floor(S / divisor) when unset")
      ->capture_default_str();
  app.add_option("--folds", folds, "cross-validation folds for --topic-grid")
      ->capture_default_str();
  app.add_option("--topic-grid", grid, "comma list of candidate T chosen by cross-validation");
  app.add_option("--seed", seed, "seed of the splits and of internal fits")->capture_default_str();
  app.add_option("--out", out_prefix, "report prefix: <out>.<task>.<model>.{json,csv}")
      ->required();
  hf.add(app);
  cf.add(app);
  if (auto code = parse(app, args, out, err)) return *code;

  const auto tasks = parse_tasks(task_name);
  const auto corpus = read_corpus(corpus_path);
  const int S = corpus.num_nodes();
  const int K = default_communities(S, communities, divisor);
  const auto cfg = cf.make(seed);

  bool need_docs = false, need_pairs = false;
  for (auto t : tasks) (t == Task::EdgeCount ? need_pairs : need_docs) = true;
  Split doc_split, pair_split;
  if (need_docs) doc_split = split_documents(corpus, holdout, seed);
  if (need_pairs) pair_split = split_pairs(corpus, holdout, seed);

  auto emit = [&](const EvalReport& rep) {
    write_report(rep, out_prefix);
    out << to_string(rep.task) << ' ' << rep.model << " items " << rep.per_item.size()
        << " total " << fmt(rep.total_log_predictive) << " se " << fmt(rep.mc_standard_error)
        << '\n';
  };

  if (!sample_paths.empty()) {
    std::vector<PosteriorSamples> parts;
    for (const auto& p : sample_paths) parts.push_back(read_samples(p));
    const auto ps = merge_chains(std::move(parts));
    check_match(ps, corpus);
    if (need_docs) {
      const std::set<std::string> excluded(ps.heldout.message_ids.begin(),
                                           ps.heldout.message_ids.end());
      for (const auto& d : doc_split.heldout_documents)
        if (!excluded.contains(d.id))
          throw InconsistentState("held-out document '" + d.id +
                                  "' was part of the samples' training data");
    }
    const PosteriorPredictive pp(ps);
    for (auto t : tasks) {
      if (!applies(t, ps.kind))
        throw InvalidParam(std::string(to_string(ps.kind)) + " cannot score task " +
                           std::string(to_string(t)));
      emit(score(t, pp, doc_split.heldout_documents, pair_split.heldout_pairs, corpus));
    }
    return 0;
  }

  std::vector<ModelKind> kinds;
  const bool explicit_models = !models.empty();
  if (explicit_models) {
    for (const auto& m : ChainFlags::split_list(models)) kinds.push_back(parse_model_kind(m));
  } else {
    kinds = {ModelKind::TopicBlock, ModelKind::LDA, ModelKind::ART, ModelKind::CNT,
             ModelKind::PoissonSBM};
  }
  if (explicit_models && tasks.size() == 1)
    for (auto k : kinds)
      if (!applies(tasks[0], k))
        throw InvalidParam(std::string(to_string(k)) + " cannot score task " +
                           std::string(to_string(tasks[0])));

  int T = topics;
  if (!grid.empty() && need_docs) {
    std::vector<int> candidates;
    for (const auto& g : ChainFlags::split_list(grid)) candidates.push_back(std::stoi(g));
    const auto cv = cross_validate_topics(doc_split.train, candidates, folds, hf.make(K, 1), cfg);
    for (const auto& [t, s] : cv.scores) out << "cv T " << t << " mean " << fmt(s) << '\n';
    out << "cv chosen T " << cv.chosen_T << '\n';
    T = cv.chosen_T;
  }

  auto fit = [&](ModelKind k, const Split& sp) {
    const TrainingData data(sp.train, sp.heldout_pairs);
    const auto h = hf.make(K, k == ModelKind::PoissonSBM ? 1 : T);
    auto ps = fit_model(k, data, K, h.T, h, cfg);
    for (const auto& m : sp.heldout_documents) ps.heldout.message_ids.push_back(m.id);
    ps.heldout.pairs = sp.heldout_pairs;
    return ps;
  };
  for (auto k : kinds) {
    std::optional<PosteriorSamples> doc_fit;
    for (auto t : tasks) {
      if (!applies(t, k)) continue;
      if (t == Task::EdgeCount) {
        emit(score(t, PosteriorPredictive(fit(k, pair_split)), {}, pair_split.heldout_pairs,
                   corpus));
      } else {
        if (!doc_fit) doc_fit = fit(k, doc_split);
        emit(score(t, PosteriorPredictive(*doc_fit), doc_split.heldout_documents, {}, corpus));
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

inline int cmd_generate(const std::vector<std::string>& args, std::ostream& out,
                        std::ostream& err) {
  CLI::App app{"Draw a synthetic corpus from the generative model", "tbm generate"};
  app.set_config("--config");
  int S = 20, V = 50, K = 2, T = 2, message_length = 0;
  std::uint64_t seed = 1;
  std::string out_prefix;
  HyperFlags hf;
  app.add_option("--nodes", S, "number of nodes S")->capture_default_str();
  app.add_option("--vocab", V, "vocabulary size V")->capture_default_str();
  app.add_option("--communities", K, "number of communities K")->capture_default_str();
  app.add_option("--topics", T, "number of topics T")->capture_default_str();
  app.add_option("--message-length", message_length,
                 "split each pair's words into messages of this many tokens (0: one message)")
      ->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--out", out_prefix, "writes <out>.corpus and <out>.truth.json")->required();
  hf.add(app);
  if (auto code = parse(app, args, out, err)) return *code;

  if (S < 2) throw InvalidParam("--nodes must be at least 2");
  if (message_length < 0) throw InvalidParam("--message-length must be nonnegative");
  const auto h = hf.make(K, T);
  GenerateOptions opts;
  opts.message_length = message_length;
  const auto g = forward_generate(h, S, V, seed, opts);
  write_corpus(g.corpus, out_prefix + ".corpus");

  nlohmann::json truth = {{"nodes", S},
                          {"vocab", V},
                          {"seed", seed},
                          {"hyper", tbm::detail::hyper_to_json(h)},
                          {"c", g.truth.c},
                          {"z", g.truth.z},
                          {"phi", g.params.phi},
                          {"lambda", {{"dims", {K, K, T}}, {"data", g.params.lambda}}},
                          {"eta", {{"dims", {T, V}}, {"data", g.params.eta}}}};
  auto f = open_out(out_prefix + ".truth.json");
  f << truth.dump() << '\n';
  out << "nodes " << S << '\n'
      << "messages " << g.corpus.messages.size() << '\n'
      << "tokens " << g.corpus.num_tokens() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline int cmd_report(const std::vector<std::string>& args, std::ostream& out,
                      std::ostream& err) {
  CLI::App app{"Block intensity matrix and topic table of one retained sample", "tbm report"};
  app.set_config("--config");
  std::string corpus_path, samples_path, out_prefix;
  int index = -1, top_topics = 3, top_words = 10;
  app.add_option("--corpus", corpus_path, "encoded corpus")->required();
  app.add_option("--samples", samples_path, "samples file of a block model")->required();
  app.add_option("--sample-index", index, "retained sample to report (-1: last)")
      ->capture_default_str();
  app.add_option("--top-topics", top_topics, "topics listed per community pair")
      ->capture_default_str();
  app.add_option("--top-words", top_words, "words listed per topic")->capture_default_str();
  app.add_option("--out", out_prefix, "writes <out>.matrix.csv and <out>.topics.txt")
      ->required();
  if (auto code = parse(app, args, out, err)) return *code;

  const auto corpus = read_corpus(corpus_path);
  const auto ps = read_samples(samples_path);
  check_match(ps, corpus);
  if (!is_block_kind(ps.kind))
    throw InvalidParam("report needs a block model, got " + std::string(to_string(ps.kind)));
  const int n = static_cast<int>(ps.samples.size());
  const int i = index < 0 ? n + index : index;
  if (i < 0 || i >= n)
    throw InvalidParam("sample index " + std::to_string(index) + " out of range for " +
                       std::to_string(n) + " samples");
  const auto& smp = ps.samples[i];

  {
    auto f = open_out(out_prefix + ".matrix.csv");
    write_intensity_csv(intensity_matrix(smp, corpus.vocab_size(), corpus.nodes), corpus.nodes, f);
  }
  {
    auto f = open_out(out_prefix + ".topics.txt");
    write_topic_table(smp, corpus, top_topics, top_words, f);
  }
  out << "sample " << i << " iteration " << smp.iteration << '\n';
  return 0;
}

}  // namespace detail

inline constexpr const char* kUsage =
    "usage: tbm <command> [options]\n"
    "commands:\n"
    "  ingest    tokenize and encode raw messages or a script\n"
    "  fit       run a chain and write retained samples\n"
    "  evaluate  held-out text, recipient, pair and count prediction\n"
    "  generate  draw a synthetic corpus\n"
    "  report    intensity matrix and topic table of one sample\n"
    "run 'tbm <command> --help' for options\n";

inline int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  if (argv.empty() || argv[0] == "-h" || argv[0] == "--help") {
    (argv.empty() ? err : out) << kUsage;
    return argv.empty() ? 1 : 0;
  }
  const std::string cmd = argv[0];
  const std::vector<std::string> rest(argv.begin() + 1, argv.end());
  try {
    if (cmd == "ingest") return detail::cmd_ingest(rest, out, err);
    if (cmd == "fit") return detail::cmd_fit(rest, out, err);
    if (cmd == "evaluate") return detail::cmd_evaluate(rest, out, err);
    if (cmd == "generate") return detail::cmd_generate(rest, out, err);
    if (cmd == "report") return detail::cmd_report(rest, out, err);
    err << "unknown command '" << cmd << "'\n" << kUsage;
    return 1;
  } catch (const InvalidParam& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidFraction& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace tbm::cli
