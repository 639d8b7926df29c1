#pragma once

// Gibbs chain for the block models (Topic Blockmodel, CNT, Poisson-SBM):
// tempered single-site sweeps, log-scale Metropolis-Hastings moves on the
// hyperparameters, thinning, and the forward generative process.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "model.hpp"
#include "numeric.hpp"

namespace tbm {

enum class HyperName { Xi0 = 0, Alpha = 1, Beta = 2, Kappa = 3 };

inline constexpr std::array<HyperName, 4> kAllHypers = {HyperName::Xi0, HyperName::Alpha,
                                                        HyperName::Beta, HyperName::Kappa};

inline std::string_view to_string(HyperName h) {
  switch (h) {
    case HyperName::Xi0: return "xi0";
    case HyperName::Alpha: return "alpha_lambda";
    case HyperName::Beta: return "beta_lambda";
    case HyperName::Kappa: return "kappa";
  }
  return "?";
}

inline HyperName parse_hyper_name(std::string_view s) {
  for (auto h : kAllHypers)
    if (to_string(h) == s) return h;
  if (s == "alpha") return HyperName::Alpha;
  if (s == "beta") return HyperName::Beta;
  throw InvalidParam("unknown hyperparameter '" + std::string(s) + "'");
}

inline double& hyper_ref(Hyperparams& h, HyperName n) {
  switch (n) {
    case HyperName::Xi0: return h.xi0;
    case HyperName::Alpha: return h.alpha_lambda;
    case HyperName::Beta: return h.beta_lambda;
    case HyperName::Kappa: return h.kappa;
  }
  return h.xi0;
}

inline double hyper_value(const Hyperparams& h, HyperName n) {
  switch (n) {
    case HyperName::Xi0: return h.xi0;
    case HyperName::Alpha: return h.alpha_lambda;
    case HyperName::Beta: return h.beta_lambda;
    case HyperName::Kappa: return h.kappa;
  }
  return 0.0;
}

struct ChainConfig {
  int iterations = 1000;
  int burnin = 500;
  int thin = 10;
  std::uint64_t seed = 1;
  bool anneal = true;
  double mh_step = 0.1;
  std::vector<HyperName> sample_hypers{kAllHypers.begin(), kAllHypers.end()};

  void validate() const {
    if (iterations < 1) throw InvalidParam("iterations must be positive");
    if (burnin < 0 || burnin >= iterations) throw InvalidParam("need 0 <= burnin < iterations");
    if (thin < 1) throw InvalidParam("thin must be at least 1");
    if (!(mh_step >= 0)) throw InvalidParam("mh_step must be nonnegative");
  }

  bool operator==(const ChainConfig&) const = default;

  int num_retained() const { return (iterations - burnin) / thin; }
};

/// Annealing temperature e^{1 - m/burnin} during burn-in, 1 afterwards.
inline double anneal_temperature(int m, int burnin) {
  if (m >= burnin) return 1.0;
  return std::exp(1.0 - static_cast<double>(m) / burnin);
}

// ---------------------------------------------------------------------------
// sweeps

/// Resamples every token's topic (unless T == 1) and then every node's
/// community. Conditional weights are raised to 1/tau; tau == 1 is the exact
/// sampler.
inline void gibbs_sweep(const TrainingData& data, LatentState& state, SuffStats& stats,
                        const Hyperparams& h, double tau, Rng& rng,
                        BlockModel model = BlockModel::TopicBlock) {
  const bool tempered = tau != 1.0;
  const double inv_tau = 1.0 / tau;
  std::vector<double> w, scratch;

  if (stats.T > 1) {
    for (std::size_t i = 0; i < data.num_tokens(); ++i) {
      const int s = data.sender(i), r = data.recipient(i), word = data.word(i);
      stats.update_token(state.c, s, r, word, state.z[i], -1);
      topic_token_weights(stats, state.c[s], state.c[r], word, h, w);
      if (tempered)
        for (double& x : w) x = std::pow(x, inv_tau);
      const int t = sample_linear(w, rng);
      state.z[i] = t;
      stats.update_token(state.c, s, r, word, t, +1);
    }
  }

  if (stats.K > 1) {
    NodeProfile prof;
    for (int s = 0; s < stats.S; ++s) {
      stats.update_node(state.c, s, state.c[s], -1);
      community_log_weights(stats, state.c, s, h, model, prof, w);
      if (tempered)
        for (double& x : w) x *= inv_tau;
      const int k = sample_log(w, scratch, rng);
      state.c[s] = k;
      stats.update_node(state.c, s, k, +1);
    }
  }
}

// ---------------------------------------------------------------------------
// hyperparameter moves

inline constexpr double kHyperPriorShape = 1.0;
inline constexpr double kHyperPriorRate = 0.01;

inline double hyper_log_prior(double x) {
  return (kHyperPriorShape - 1.0) * std::log(x) - kHyperPriorRate * x;
}

struct MhOutcome {
  Hyperparams hyper;
  std::array<bool, 4> proposed{};
  std::array<bool, 4> accepted{};
};

/// The hyperparameters each block model's likelihood depends on.
inline bool model_uses(BlockModel model, HyperName n) {
  switch (model) {
    case BlockModel::TopicBlock: return true;
    case BlockModel::ClusteredNodeTopic: return n != HyperName::Beta;
    case BlockModel::PoissonSBM: return n != HyperName::Kappa;
  }
  return true;
}

/// Log acceptance ratio of moving hyperparameter `n` from h to h2:
/// change in joint log-probability, change in log prior, and the log(x'/x)
/// correction for the multiplicative proposal.
inline double mh_log_acceptance(const SuffStats& stats, const Hyperparams& h,
                                const Hyperparams& h2, HyperName n, BlockModel model) {
  const double x = hyper_value(h, n);
  const double x2 = hyper_value(h2, n);
  double delta = 0.0;
  switch (n) {
    case HyperName::Xi0:
      delta = communities_log_prob(stats.m, h2.xi0) - communities_log_prob(stats.m, h.xi0);
      break;
    case HyperName::Alpha:
    case HyperName::Beta:
      delta = blocks_log_prob(stats, h2, model) - blocks_log_prob(stats, h, model);
      break;
    case HyperName::Kappa:
      delta = words_log_prob(stats, h2.kappa) - words_log_prob(stats, h.kappa);
      break;
  }
  return delta + hyper_log_prior(x2) - hyper_log_prior(x) + std::log(x2 / x);
}

/// One random-walk move on log x for each selected hyperparameter in turn.
inline MhOutcome mh_hyper_step(const SuffStats& stats, const Hyperparams& hyper, double mh_step,
                               const std::vector<HyperName>& names, Rng& rng,
                               BlockModel model = BlockModel::TopicBlock) {
  MhOutcome out;
  out.hyper = hyper;
  for (auto n : kAllHypers) {
    if (std::find(names.begin(), names.end(), n) == names.end() || !model_uses(model, n))
      continue;
    const double eps =
        mh_step > 0 ? std::normal_distribution<double>(0.0, mh_step)(rng) : 0.0;
    Hyperparams prop = out.hyper;
    hyper_ref(prop, n) = hyper_ref(out.hyper, n) * std::exp(eps);
    const double log_a = mh_log_acceptance(stats, out.hyper, prop, n, model);
    const auto i = static_cast<std::size_t>(n);
    out.proposed[i] = true;
    if (std::log(uniform01(rng)) < log_a) {
      out.hyper = prop;
      out.accepted[i] = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// chain output

struct Sample {
  int iteration = 0;
  std::vector<int> c;
  Hyperparams hyper;
  double joint_log_prob = 0.0;
  std::vector<int> N_blk;        // [K,K,T]
  std::vector<int> M_tw;         // [T,V]
  std::vector<int> P_blk;        // [K,K]
  std::vector<int> group_topic;  // LDA [D,T] or ART [S*S,T]
  std::vector<int> z;            // kept in memory only

  bool operator==(const Sample&) const = default;
};

/// Which held-out set the chain was trained without.
struct HeldoutInfo {
  std::string kind = "none";  // none | documents | pairs | folds
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> message_ids;
  std::vector<NodePair> pairs;

  bool operator==(const HeldoutInfo&) const = default;
};

struct PosteriorSamples {
  ModelKind kind = ModelKind::TopicBlock;
  ChainConfig config;
  Hyperparams hyper_init;
  int num_nodes = 0;
  int vocab_size = 0;
  int num_groups = 0;
  std::string vocab_hash;
  HeldoutInfo heldout;
  std::vector<double> trace;  // joint log-probability after every sweep
  std::array<int, 4> accepted{};
  std::array<int, 4> proposed{};
  std::vector<Sample> samples;

  double acceptance_rate(HyperName n) const {
    const auto i = static_cast<std::size_t>(n);
    return proposed[i] ? static_cast<double>(accepted[i]) / proposed[i] : 0.0;
  }
};

using BaselineSamples = PosteriorSamples;

inline ModelKind kind_of(BlockModel m) {
  switch (m) {
    case BlockModel::TopicBlock: return ModelKind::TopicBlock;
    case BlockModel::ClusteredNodeTopic: return ModelKind::CNT;
    case BlockModel::PoissonSBM: return ModelKind::PoissonSBM;
  }
  return ModelKind::TopicBlock;
}

/// Runs `config.iterations` sweeps from a uniformly random state (or the
/// given communities with random topics). Burn-in
/// sweeps are tempered when `config.anneal` is set and keep the initial
/// hyperparameters; afterwards each sweep is followed by one MH move per
/// selected hyperparameter, and every thin-th sweep is retained.
inline PosteriorSamples run_chain(const TrainingData& data, const Hyperparams& hyper_init,
                                  const ChainConfig& config,
                                  BlockModel model = BlockModel::TopicBlock,
                                  const std::optional<std::vector<int>>& init_communities = {}) {
  config.validate();
  hyper_init.validate();
  if (model == BlockModel::PoissonSBM && hyper_init.T != 1)
    throw InvalidParam("the Poisson-SBM runs with a single topic");

  PosteriorSamples out;
  out.kind = kind_of(model);
  out.config = config;
  out.hyper_init = hyper_init;
  out.num_nodes = data.num_nodes();
  out.vocab_size = data.vocab_size();

  Rng rng(config.seed);
  Hyperparams hyper = hyper_init;
  LatentState state = random_state(data, hyper, rng);
  if (init_communities) {
    if (init_communities->size() != state.c.size())
      throw InvalidParam("initial communities must have one entry per node");
    for (int k : *init_communities)
      if (k < 0 || k >= hyper.K) throw InvalidParam("initial community out of range");
    state.c = *init_communities;
  }
  SuffStats stats = recompute_stats(data, state, hyper);

  out.trace.reserve(config.iterations);
  out.samples.reserve(config.num_retained());
  for (int m = 0; m < config.iterations; ++m) {
    const double tau = config.anneal ? anneal_temperature(m, config.burnin) : 1.0;
    gibbs_sweep(data, state, stats, hyper, tau, rng, model);
    if (m >= config.burnin) {
      auto mh = mh_hyper_step(stats, hyper, config.mh_step, config.sample_hypers, rng, model);
      hyper = mh.hyper;
      for (std::size_t i = 0; i < 4; ++i) {
        out.proposed[i] += mh.proposed[i];
        out.accepted[i] += mh.accepted[i];
      }
    }
    const double joint = joint_terms(stats, hyper, model).total();
    out.trace.push_back(joint);
    if (m >= config.burnin && (m - config.burnin + 1) % config.thin == 0) {
      Sample smp;
      smp.iteration = m;
      smp.c = state.c;
      smp.hyper = hyper;
      smp.joint_log_prob = joint;
      smp.N_blk = stats.N_blk;
      smp.M_tw = stats.M_tw;
      smp.P_blk = stats.P_blk;
      smp.z = state.z;
      out.samples.push_back(std::move(smp));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// forward generation

struct GenerateOptions {
  std::optional<std::vector<int>> communities;  // fix c instead of drawing phi and c
  std::optional<std::vector<double>> lambda;    // fix [K,K,T] rates instead of drawing
  int message_length = 0;  // > 0 splits each pair's words into messages of this size
};

struct TrueParameters {
  std::vector<double> phi;     // [K], empty when communities were fixed
  std::vector<double> lambda;  // [K,K,T]
  std::vector<double> eta;     // [T,V]
};

struct GeneratedCorpus {
  InteractionCorpus corpus;
  LatentState truth;  // z aligned with the corpus token order
  TrueParameters params;
};

/// Draws topics, community weights, memberships, block rates, per-pair
/// per-topic counts and words from the generative process. Nodes are
/// labelled n0..n{S-1}, words w0..w{V-1}; diagonal pairs are skipped and
/// each pair's words are shuffled before being cut into messages.
inline GeneratedCorpus forward_generate(const Hyperparams& h, int S, int V, Rng& rng,
                                        const GenerateOptions& opts = {}) {
  h.validate();
  if (S < 2) throw InvalidParam("need at least 2 nodes");
  if (V < 1) throw InvalidParam("need a nonempty vocabulary");
  const int K = h.K, T = h.T;

  GeneratedCorpus g;
  for (int s = 0; s < S; ++s) g.corpus.nodes.push_back("n" + std::to_string(s));
  for (int v = 0; v < V; ++v) g.corpus.vocabulary.tokens.push_back("w" + std::to_string(v));

  g.params.eta.reserve(static_cast<std::size_t>(T) * V);
  for (int t = 0; t < T; ++t) {
    auto row = dirichlet_draw(V, h.kappa, rng);
    g.params.eta.insert(g.params.eta.end(), row.begin(), row.end());
  }

  if (opts.communities) {
    if (opts.communities->size() != static_cast<std::size_t>(S))
      throw InvalidParam("fixed communities must have length S");
    g.truth.c = *opts.communities;
    for (int k : g.truth.c)
      if (k < 0 || k >= K) throw InvalidParam("fixed community out of range");
  } else {
    g.params.phi = dirichlet_draw(K, h.xi0, rng);
    g.truth.c.resize(S);
    for (int& k : g.truth.c) k = sample_linear(g.params.phi, rng);
  }

  if (opts.lambda) {
    if (opts.lambda->size() != static_cast<std::size_t>(K) * K * T)
      throw InvalidParam("fixed lambda must have K*K*T entries");
    g.params.lambda = *opts.lambda;
  } else {
    g.params.lambda.resize(static_cast<std::size_t>(K) * K * T);
    for (double& x : g.params.lambda) x = gamma_draw(h.alpha_lambda, h.beta_lambda, rng);
  }

  std::vector<std::pair<int, int>> items;  // (word, topic)
  std::size_t next_id = 0;
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < S; ++r) {
      if (s == r) continue;
      items.clear();
      const auto cell = (static_cast<std::size_t>(g.truth.c[s]) * K + g.truth.c[r]) * T;
      for (int t = 0; t < T; ++t) {
        const int n = poisson_draw(g.params.lambda[cell + t], rng);
        std::span<const double> eta_t(g.params.eta.data() + static_cast<std::size_t>(t) * V, V);
        for (int i = 0; i < n; ++i) items.emplace_back(sample_linear(eta_t, rng), t);
      }
      if (items.empty()) continue;
      std::shuffle(items.begin(), items.end(), rng);
      const std::size_t chunk =
          opts.message_length > 0 ? static_cast<std::size_t>(opts.message_length) : items.size();
      for (std::size_t b = 0; b < items.size(); b += chunk) {
        Message msg;
        msg.id = "m" + std::to_string(next_id++);
        msg.sender = s;
        msg.recipient = r;
        for (std::size_t i = b; i < std::min(items.size(), b + chunk); ++i) {
          msg.tokens.push_back(items[i].first);
          g.truth.z.push_back(items[i].second);
        }
        g.corpus.messages.push_back(std::move(msg));
      }
    }
  return g;
}

inline GeneratedCorpus forward_generate(const Hyperparams& h, int S, int V, std::uint64_t seed,
                                        const GenerateOptions& opts = {}) {
  Rng rng(seed);
  return forward_generate(h, S, V, rng, opts);
}

}  // namespace tbm
