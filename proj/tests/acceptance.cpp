// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace tbm;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Hyperparams hyper(int K, int T, double kappa = 0.1) {
  Hyperparams h;
  h.K = K;
  h.T = T;
  h.kappa = kappa;
  return h;
}

ChainConfig chain(int iterations, int burnin, int thin, std::uint64_t seed) {
  ChainConfig c;
  c.iterations = iterations;
  c.burnin = burnin;
  c.thin = thin;
  c.seed = seed;
  return c;
}

std::vector<int> balanced(int S, int K) {
  std::vector<int> c(S);
  for (int s = 0; s < S; ++s) c[s] = s % K;
  return c;
}

// ---------------------------------------------------------------------------

Outcome conjugacy_vs_quadrature() {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<int> counts(1 + uniform_index(8, rng));
    for (int& n : counts) n = uniform_index(30, rng);
    const double a = 0.05 + 10.0 * uniform01(rng), b = 0.05 + 10.0 * uniform01(rng);
    worst = std::max(worst, std::abs(block_topic_log_marginal(counts, a, b) -
                                     oracle::gamma_poisson_quadrature(counts, a, b)));
  }
  return {worst <= 1e-6, fmt("max abs log error %.3g over 100 cases", worst)};
}

Outcome per_topic_factorization() {
  // per-topic negative binomials vs total negative binomial times the multinomial split
  auto rel_error = [](const std::vector<int>& n, double a, double b) {
    double lhs = 0.0;
    int N = 0;
    for (int x : n) {
      lhs += block_topic_log_marginal(std::vector<int>{x}, a, b);
      N += x;
    }
    const double rhs = oracle::nb_pmf(N, n.size() * a, b) * oracle::dirmult_count_pmf(n, a);
    return std::abs(std::exp(lhs) - rhs) / rhs;
  };
  double worst = rel_error({1, 0}, 1.0, 1.0);
  double eighth = 0.0;
  for (int x : {1, 0}) eighth += block_topic_log_marginal(std::vector<int>{x}, 1.0, 1.0);
  const double eighth_err = std::abs(std::exp(eighth) - 0.125) / 0.125;
  Rng rng(202);
  for (int i = 1; i < 100; ++i) {
    std::vector<int> n(1 + uniform_index(6, rng));
    for (int& x : n) x = uniform_index(12, rng);
    worst = std::max(worst, rel_error(n, 0.1 + 5.0 * uniform01(rng), 0.1 + 5.0 * uniform01(rng)));
  }
  return {worst <= 1e-10 && eighth_err <= 1e-10,
          fmt("max rel error %.3g, worked case 1/8 rel error %.3g", worst, eighth_err)};
}

Outcome conditionals_vs_enumeration() {
  Rng rng(303);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = oracle::random_instance(rng, 4, 3, 3, 4, 6);
    TrainingData data(in.corpus, in.unobserved);
    for (int s = 0; s < data.num_nodes(); ++s) {
      const auto p = community_conditional(
          s, oracle::stats_without_node(data, in.state, in.hyper, s), in.state, in.hyper);
      const auto q =
          oracle::community_by_enumeration(data, in.state, in.hyper, s, BlockModel::TopicBlock);
      worst = std::max(worst, oracle::max_rel_diff(p, q));
      ++checked;
    }
    for (std::size_t i = 0; i < data.num_tokens(); ++i) {
      const auto st = oracle::stats_without_token(data, in.state, in.hyper, i);
      const auto p = topic_token_conditional(in.state.c[data.sender(i)],
                                             in.state.c[data.recipient(i)], data.word(i), st,
                                             in.hyper);
      const auto q =
          oracle::topic_by_enumeration(data, in.state, in.hyper, i, BlockModel::TopicBlock);
      worst = std::max(worst, oracle::max_rel_diff(p, q));
      ++checked;
    }
  }
  return {worst <= 1e-9, fmt("max rel error %.3g over %d conditionals", worst, checked)};
}

// ---------------------------------------------------------------------------
// Geweke: iid forward draws vs a chain alternating (z, data) | c with one sweep.

std::vector<double> geweke_stats(const TrainingData& data, const LatentState& state,
                                 const Hyperparams& h) {
  const auto st = recompute_stats(data, state, h);
  double m2 = 0.0, mt2 = 0.0, within = 0.0, nonempty = 0.0;
  for (int x : st.m) m2 += double(x) * x;
  for (int x : st.M_t) mt2 += double(x) * x;
  for (int k = 0; k < st.K; ++k)
    for (int t = 0; t < st.T; ++t) within += st.N_blk[st.blk(k, k, t)];
  for (int s = 0; s < st.S; ++s)
    for (int r = 0; r < st.S; ++r) {
      if (s == r) continue;
      int n = 0;
      for (int t = 0; t < st.T; ++t) n += st.n_pair[st.pair(s, r, t)];
      nonempty += n > 0;
    }
  return {double(st.m[0]),     m2,     double(st.total_tokens()), double(st.M_t[0]), mt2,
          within,              nonempty, joint_log_prob(data, state, h)};
}

const char* kGewekeNames[] = {"m0",    "sum m^2", "tokens",   "topic0",
                              "sum Mt^2", "within", "nonempty", "joint"};

struct Moments {
  double mean, se;
};

// batch means standard error
Moments moments(const std::vector<double>& x, int batches) {
  const std::size_t n = x.size(), len = n / batches;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (int b = 0; b < batches; ++b) {
    double bm = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) bm += x[i];
    bm /= len;
    var += (bm - mean) * (bm - mean);
  }
  var /= batches - 1;
  return {mean, std::sqrt(var / batches)};
}

Outcome geweke() {
  const int S = 4, V = 5, draws = 10000;
  Hyperparams h = hyper(2, 2, 1.0);
  h.xi0 = h.alpha_lambda = h.beta_lambda = 1.0;
  const std::size_t nstat = std::size(kGewekeNames);
  std::vector<std::vector<double>> fwd(nstat), succ(nstat);

  Rng rf(404);
  for (int i = 0; i < draws; ++i) {
    const auto g = forward_generate(h, S, V, rf);
    const auto v = geweke_stats(TrainingData(g.corpus), g.truth, h);
    for (std::size_t j = 0; j < nstat; ++j) fwd[j].push_back(v[j]);
  }

  Rng rs(505);
  std::vector<int> c = forward_generate(h, S, V, rs).truth.c;
  for (int i = 0; i < draws; ++i) {
    GenerateOptions o;
    o.communities = c;
    auto g = forward_generate(h, S, V, rs, o);
    TrainingData data(g.corpus);
    LatentState state = g.truth;
    auto st = recompute_stats(data, state, h);
    gibbs_sweep(data, state, st, h, 1.0, rs);
    c = state.c;
    const auto v = geweke_stats(data, state, h);
    for (std::size_t j = 0; j < nstat; ++j) succ[j].push_back(v[j]);
  }

  double worst = 0.0;
  std::string detail;
  for (std::size_t j = 0; j < nstat; ++j) {
    const auto a = moments(fwd[j], 50), b = moments(succ[j], 50);
    const double z = (a.mean - b.mean) / std::sqrt(a.se * a.se + b.se * b.se);
    worst = std::max(worst, std::abs(z));
    detail += fmt("%s%s z=%.2f", j ? ", " : "", kGewekeNames[j], z);
  }
  return {worst < 4.0, fmt("%zu statistics, %d draws per side: ", nstat, draws) + detail};
}

// ---------------------------------------------------------------------------

std::vector<double> block_rates(int K, int T, const std::vector<double>& totals,
                                const std::function<double(int, int, int)>& share) {
  std::vector<double> lam(static_cast<std::size_t>(K) * K * T);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l)
      for (int t = 0; t < T; ++t) lam[(k * K + l) * T + t] = totals[k * K + l] * share(k, l, t);
  return lam;
}

Outcome synthetic_recovery() {
  const int S = 30, K = 3, T = 4, V = 100;
  std::vector<double> totals(K * K, 1.0);
  for (int k = 0; k < K; ++k) totals[k * K + k] = 10.0;
  std::vector<double> aris;
  for (int rep = 0; rep < 10; ++rep) {
    GenerateOptions o;
    o.communities = balanced(S, K);
    o.lambda = block_rates(K, T, totals, [&](int, int, int) { return 1.0 / T; });
    const auto g = forward_generate(hyper(K, T), S, V, std::uint64_t(500 + rep), o);
    const auto ps = run_chain(TrainingData(g.corpus), hyper(K, T), chain(600, 500, 10, rep + 1));
    aris.push_back(adjusted_rand_index(ps.samples.back().c, g.truth.c));
  }
  std::vector<double> sorted = aris;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[4] + sorted[5]);
  std::string each;
  for (double a : aris) each += fmt(" %.2f", a);
  return {median >= 0.9, fmt("median ARI %.3f; per seed:", median) + each};
}

// ---------------------------------------------------------------------------
// Held-out orderings on two-community synthetic data. Topic t < K marks the
// sender's community and topic K + l the recipient's; other topics share
// the remaining mass.

struct Regime {
  int S;
  double within, cross, sender_share, recipient_share;
};

GeneratedCorpus regime_corpus(const Regime& R, int rep) {
  const int K = 2, T = 4, V = 50;
  GenerateOptions o;
  o.communities = balanced(R.S, K);
  const std::vector<double> totals{R.within, R.cross, R.cross, R.within};
  o.lambda = block_rates(K, T, totals, [&](int k, int l, int t) {
    if (t == k) return R.sender_share;
    if (t == K + l) return R.recipient_share;
    return (1.0 - R.sender_share - R.recipient_share) / (T - 2);
  });
  return forward_generate(hyper(K, T), R.S, V, std::uint64_t(100 + rep), o);
}

Outcome heldout_orderings() {
  const int K = 2, T = 4;
  // recipient task: lengths and text both carry the recipient's community
  const Regime recipient{20, 6.0, 1.0, 0.45, 0.45};
  // count task: weak rate contrast, text mostly marks the sender's community
  const Regime counts{30, 1.5, 1.0, 0.85, 0.05};

  int recipient_wins = 0, count_wins = 0;
  std::string detail;
  for (int rep = 0; rep < 10; ++rep) {
    const auto cfg = chain(600, 500, 10, rep + 1);

    const auto gr = regime_corpus(recipient, rep);
    const auto docs = split_documents(gr.corpus, 0.1, 7 + rep);
    const TrainingData dtrain(docs.train);
    double r[4];
    const ModelKind kinds[4] = {ModelKind::TopicBlock, ModelKind::PoissonSBM, ModelKind::CNT,
                                ModelKind::ART};
    for (int i = 0; i < 4; ++i) {
      const auto ps = fit_model(kinds[i], dtrain, K, T, hyper(K, T), cfg);
      r[i] = recipient_task(PosteriorPredictive(ps), docs.heldout_documents).total_log_predictive;
    }
    const bool rok = r[0] > r[1] && r[1] > r[2] && r[1] > r[3];

    const auto gc = regime_corpus(counts, rep);
    const auto pairs = split_pairs(gc.corpus, 0.1, 9 + rep);
    const TrainingData ptrain(pairs.train, pairs.heldout_pairs);
    double n[2];
    for (int i = 0; i < 2; ++i) {
      auto ps = fit_model(kinds[i], ptrain, K, T, hyper(K, T), cfg);
      ps.heldout.pairs = pairs.heldout_pairs;
      n[i] = edge_count_loglik(PosteriorPredictive(ps), pairs.heldout_pairs, gc.corpus)
                 .total_log_predictive;
    }
    const bool cok = n[0] > n[1];

    recipient_wins += rok;
    count_wins += cok;
    detail += fmt("\n    seed %d recipient tbm %.1f psbm %.1f cnt %.1f art %.1f [%s] | counts tbm "
                  "%.1f psbm %.1f [%s]",
                  rep, r[0], r[1], r[2], r[3], rok ? "ok" : "no", n[0], n[1], cok ? "ok" : "no");
  }
  return {recipient_wins >= 8 && count_wins >= 8,
          fmt("recipient ordering %d/10, count ordering %d/10", recipient_wins, count_wins) +
              detail};
}

// ---------------------------------------------------------------------------

Outcome annealing_schedule() {
  const bool ends = anneal_temperature(0, 500) == std::exp(1.0) &&
                    anneal_temperature(500, 500) == 1.0;
  Rng gen(606);
  bool identical = true;
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = oracle::random_instance(gen, 4, 3, 3, 4, 6);
    TrainingData data(in.corpus, in.unobserved);
    auto s1 = in.state, s2 = in.state;
    auto st1 = recompute_stats(data, s1, in.hyper), st2 = st1;
    Rng r1(trial), r2(trial);
    for (int sweep = 0; sweep < 20; ++sweep) {
      gibbs_sweep(data, s1, st1, in.hyper, 1.0, r1);
      oracle::always_tempered_sweep(data, s2, st2, in.hyper, 1.0, r2);
    }
    identical = identical && s1 == s2 && st1 == st2 && r1 == r2;
  }
  return {ends && identical,
          fmt("tau(0)=e %s, tau(500)=1 %s, tau=1 sweeps bit-identical on 50 instances %s",
              anneal_temperature(0, 500) == std::exp(1.0) ? "yes" : "no",
              anneal_temperature(500, 500) == 1.0 ? "yes" : "no", identical ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// every regular file under dir, keyed by name, with its bytes
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.emplace_back(e.path().filename().string(), slurp(e.path()));
  std::sort(files.begin(), files.end());
  return files;
}

Outcome cli_determinism() {
  const fs::path root = fs::path(TBM_ACCEPT_TMPDIR);
  fs::remove_all(root);
  const std::string messages =
      R"({"id":"1","sender":"ann","recipient":"bo","text":"Budget meeting moved to Friday"})"
      "\n"
      R"({"id":"2","sender":"bo","recipient":"cy","text":"Friday works; budget draft attached"})"
      "\n"
      R"({"id":"3","sender":"cy","recipient":"ann","text":"Draft looks fine, see you Friday"})"
      "\n";

  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"ingest", {"ingest", "--input", "@/in.jsonl", "--out", "@/c.corpus"}},
      {"generate",
       {"generate", "--nodes", "10", "--vocab", "20", "--communities", "2", "--topics", "2",
        "--message-length", "5", "--seed", "3", "--out", "@/g"}},
      {"fit",
       {"fit", "--corpus", "@/g.corpus", "--topics", "2", "--communities", "2", "--iters", "30",
        "--burnin", "20", "--thin", "5", "--chains", "2", "--seed", "4", "--out", "@/s"}},
      {"evaluate",
       {"evaluate", "--corpus", "@/g.corpus", "--topics", "2", "--communities", "2", "--iters",
        "30", "--burnin", "20", "--thin", "5", "--holdout", "0.2", "--seed", "6", "--task", "all",
        "--out", "@/rep"}},
      {"report", {"report", "--corpus", "@/g.corpus", "--samples", "@/s.0", "--out", "@/r"}},
  };

  std::vector<std::vector<std::pair<std::string, std::string>>> runs;
  std::vector<std::string> stdouts;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const fs::path dir = root / ("run" + std::to_string(attempt));
    fs::create_directories(dir);
    std::ofstream(dir / "in.jsonl", std::ios::binary) << messages;
    std::string out_all;
    for (const auto& [name, args] : commands) {
      std::vector<std::string> a;
      for (auto s : args) {
        if (s.rfind("@/", 0) == 0) s = (dir / s.substr(2)).string();
        a.push_back(s);
      }
      std::ostringstream out, err;
      const int code = cli::run_cli(a, out, err);
      if (code != 0) return {false, name + " failed: " + err.str()};
      // stdout may echo paths; strip the per-run directory before comparing
      std::string text = out.str();
      for (std::size_t p; (p = text.find(dir.string())) != std::string::npos;)
        text.replace(p, dir.string().size(), "@");
      out_all += text;
    }
    runs.push_back(snapshot(dir));
    stdouts.push_back(out_all);
  }
  const bool same_files = runs[0] == runs[1];
  const bool same_stdout = stdouts[0] == stdouts[1];
  return {same_files && same_stdout && runs[0].size() > 10,
          fmt("%zu output files byte-identical %s, stdout identical %s", runs[0].size(),
              same_files ? "yes" : "no", same_stdout ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Outcome topic_cross_validation() {
  const int S = 16, K = 2, V = 60;
  int hits = 0;
  std::string picks;
  for (int rep = 0; rep < 10; ++rep) {
    Hyperparams g = hyper(K, 3);
    g.alpha_lambda = 1.0;
    g.beta_lambda = 0.2;
    GenerateOptions o;
    o.communities = balanced(S, K);
    o.message_length = 10;
    const auto gen = forward_generate(g, S, V, std::uint64_t(300 + rep), o);
    const auto cv =
        cross_validate_topics(gen.corpus, {1, 3, 10}, 5, hyper(K, 3), chain(300, 250, 10, 50 + rep));
    hits += cv.chosen_T == 3;
    picks += fmt(" %d", cv.chosen_T);
  }
  return {hits >= 6, fmt("T=3 chosen in %d/10 runs; picks:", hits) + picks};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "block marginal vs quadrature", 10, conjugacy_vs_quadrature},
      {2, "per-topic count factorization", 1, per_topic_factorization},
      {3, "conditionals vs joint enumeration", 60, conditionals_vs_enumeration},
      {4, "Geweke forward vs successive", 300, geweke},
      {5, "synthetic community recovery", 600, synthetic_recovery},
      {6, "held-out predictive orderings", 1800, heldout_orderings},
      {7, "annealing schedule", 60, annealing_schedule},
      {8, "CLI determinism", 600, cli_determinism},
      {9, "topic-count cross-validation", 1200, topic_cross_validation},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool ok = o.pass && in_time;
    failures += !ok;
    std::printf("%s criterion %d: %s (%.1f s of %.0f s) %s\n", ok ? "PASS" : "FAIL", c.id, c.name,
                secs, c.budget_s, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
