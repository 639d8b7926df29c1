#pragma once

// Comparison models. CNT and the Poisson-SBM reuse the block sampler with a
// different block likelihood; LDA and ART are collapsed topic models whose
// topic mixtures belong to a message (LDA) or an ordered pair (ART).

#include <cstdint>
#include <optional>
#include <vector>

#include "model.hpp"
#include "sampler.hpp"

namespace tbm {

enum class GroupBy { Document, Pair };

/// Topic-count statistics of an LDA-style model with one mixture per group.
struct MixtureStats {
  int G = 0, T = 0, V = 0;
  std::vector<int> n_gt;  // [G,T]
  std::vector<int> M_tw;  // [T,V]
  std::vector<int> M_t;   // [T]

  std::size_t gt(int g, int t) const { return static_cast<std::size_t>(g) * T + t; }
  std::size_t tw(int t, int v) const { return static_cast<std::size_t>(t) * V + v; }

  void update(int g, int word, int t, int delta) {
    n_gt[gt(g, t)] += delta;
    M_tw[tw(t, word)] += delta;
    M_t[t] += delta;
  }

  bool operator==(const MixtureStats&) const = default;
};

/// Group index of every token: its message (Document) or s*S + r (Pair).
inline std::vector<int> token_groups(const TrainingData& data, GroupBy by, int& num_groups) {
  std::vector<int> g(data.num_tokens());
  if (by == GroupBy::Document) {
    num_groups = static_cast<int>(data.num_messages());
    for (std::size_t m = 0; m < data.num_messages(); ++m)
      for (std::size_t i = data.message_offset(m); i < data.message_offset(m + 1); ++i)
        g[i] = static_cast<int>(m);
  } else {
    const int S = data.num_nodes();
    num_groups = S * S;
    for (std::size_t i = 0; i < data.num_tokens(); ++i)
      g[i] = data.sender(i) * S + data.recipient(i);
  }
  return g;
}

inline MixtureStats recompute_mixture_stats(const TrainingData& data,
                                            const std::vector<int>& groups, int num_groups,
                                            const std::vector<int>& z, int T) {
  if (z.size() != data.num_tokens()) throw InconsistentState("topic vector length mismatch");
  MixtureStats st;
  st.G = num_groups;
  st.T = T;
  st.V = data.vocab_size();
  st.n_gt.assign(static_cast<std::size_t>(st.G) * T, 0);
  st.M_tw.assign(static_cast<std::size_t>(T) * st.V, 0);
  st.M_t.assign(T, 0);
  for (std::size_t i = 0; i < z.size(); ++i) st.update(groups[i], data.word(i), z[i], +1);
  return st;
}

inline void mixture_topic_weights(const MixtureStats& st, int g, int word, const Hyperparams& h,
                                  std::vector<double>& out) {
  out.resize(st.T);
  const double Vk = st.V * h.kappa;
  for (int t = 0; t < st.T; ++t)
    out[t] = (st.n_gt[st.gt(g, t)] + h.alpha_lambda) * (st.M_tw[st.tw(t, word)] + h.kappa) /
             (st.M_t[t] + Vk);
}

inline double mixture_groups_log_prob(const MixtureStats& st, double alpha) {
  double acc = 0.0;
  for (int g = 0; g < st.G; ++g)
    acc += dirichlet_multinomial_log(
        std::span<const int>(st.n_gt).subspan(static_cast<std::size_t>(g) * st.T, st.T), alpha);
  return acc;
}

inline double mixture_words_log_prob(const MixtureStats& st, double kappa) {
  double acc = 0.0;
  for (int t = 0; t < st.T; ++t)
    acc += dirichlet_multinomial_log(
        std::span<const int>(st.M_tw).subspan(static_cast<std::size_t>(t) * st.V, st.V), kappa);
  return acc;
}

/// log P(z, words | alpha, kappa) for the mixture model.
inline double mixture_joint_log_prob(const MixtureStats& st, const Hyperparams& h) {
  return mixture_groups_log_prob(st, h.alpha_lambda) + mixture_words_log_prob(st, h.kappa);
}

inline void mixture_sweep(const TrainingData& data, const std::vector<int>& groups,
                          std::vector<int>& z, MixtureStats& st, const Hyperparams& h,
                          double tau, Rng& rng) {
  if (st.T == 1) return;
  const bool tempered = tau != 1.0;
  const double inv_tau = 1.0 / tau;
  std::vector<double> w;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const int g = groups[i], word = data.word(i);
    st.update(g, word, z[i], -1);
    mixture_topic_weights(st, g, word, h, w);
    if (tempered)
      for (double& x : w) x = std::pow(x, inv_tau);
    z[i] = sample_linear(w, rng);
    st.update(g, word, z[i], +1);
  }
}

inline MhOutcome mixture_mh_step(const MixtureStats& st, const Hyperparams& hyper, double step,
                                 const std::vector<HyperName>& names, Rng& rng) {
  MhOutcome out;
  out.hyper = hyper;
  for (auto n : {HyperName::Alpha, HyperName::Kappa}) {
    if (std::find(names.begin(), names.end(), n) == names.end()) continue;
    const double eps = step > 0 ? std::normal_distribution<double>(0.0, step)(rng) : 0.0;
    Hyperparams prop = out.hyper;
    const double x = hyper_value(out.hyper, n);
    const double x2 = x * std::exp(eps);
    hyper_ref(prop, n) = x2;
    const double delta =
        n == HyperName::Alpha
            ? mixture_groups_log_prob(st, x2) - mixture_groups_log_prob(st, x)
            : mixture_words_log_prob(st, x2) - mixture_words_log_prob(st, x);
    const double log_a = delta + hyper_log_prior(x2) - hyper_log_prior(x) + std::log(x2 / x);
    const auto i = static_cast<std::size_t>(n);
    out.proposed[i] = true;
    if (std::log(uniform01(rng)) < log_a) {
      out.hyper = prop;
      out.accepted[i] = true;
    }
  }
  return out;
}

/// Same schedule as run_chain: random init, tempered burn-in, MH afterwards.
inline PosteriorSamples run_mixture_chain(const TrainingData& data, const Hyperparams& hyper_init,
                                          const ChainConfig& config, GroupBy by) {
  config.validate();
  hyper_init.validate();
  PosteriorSamples out;
  out.kind = by == GroupBy::Document ? ModelKind::LDA : ModelKind::ART;
  out.config = config;
  out.hyper_init = hyper_init;
  out.hyper_init.K = 1;
  out.num_nodes = data.num_nodes();
  out.vocab_size = data.vocab_size();

  int G = 0;
  const auto groups = token_groups(data, by, G);
  out.num_groups = G;
  Rng rng(config.seed);
  Hyperparams hyper = out.hyper_init;
  std::vector<int> z(data.num_tokens());
  for (int& t : z) t = uniform_index(hyper.T, rng);
  auto st = recompute_mixture_stats(data, groups, G, z, hyper.T);

  for (int m = 0; m < config.iterations; ++m) {
    const double tau = config.anneal ? anneal_temperature(m, config.burnin) : 1.0;
    mixture_sweep(data, groups, z, st, hyper, tau, rng);
    if (m >= config.burnin) {
      auto mh = mixture_mh_step(st, hyper, config.mh_step, config.sample_hypers, rng);
      hyper = mh.hyper;
      for (std::size_t i = 0; i < 4; ++i) {
        out.proposed[i] += mh.proposed[i];
        out.accepted[i] += mh.accepted[i];
      }
    }
    const double joint = mixture_joint_log_prob(st, hyper);
    out.trace.push_back(joint);
    if (m >= config.burnin && (m - config.burnin + 1) % config.thin == 0) {
      Sample smp;
      smp.iteration = m;
      smp.hyper = hyper;
      smp.joint_log_prob = joint;
      smp.M_tw = st.M_tw;
      smp.group_topic = st.n_gt;
      smp.z = z;
      out.samples.push_back(std::move(smp));
    }
  }
  return out;
}

inline BaselineSamples fit_lda(const TrainingData& data, int T, const Hyperparams& hyper,
                               const ChainConfig& config) {
  Hyperparams h = hyper;
  h.T = T;
  return run_mixture_chain(data, h, config, GroupBy::Document);
}

inline BaselineSamples fit_art(const TrainingData& data, int T, const Hyperparams& hyper,
                               const ChainConfig& config) {
  Hyperparams h = hyper;
  h.T = T;
  return run_mixture_chain(data, h, config, GroupBy::Pair);
}

inline BaselineSamples fit_cnt(const TrainingData& data, int K, int T, const Hyperparams& hyper,
                               const ChainConfig& config) {
  Hyperparams h = hyper;
  h.K = K;
  h.T = T;
  return run_chain(data, h, config, BlockModel::ClusteredNodeTopic);
}

inline BaselineSamples fit_poisson_sbm(const TrainingData& data, int K, const Hyperparams& hyper,
                                       const ChainConfig& config) {
  Hyperparams h = hyper;
  h.K = K;
  h.T = 1;
  return run_chain(data, h, config, BlockModel::PoissonSBM);
}

inline PosteriorSamples fit_topic_blockmodel(
    const TrainingData& data, int K, int T, const Hyperparams& hyper, const ChainConfig& config,
    const std::optional<std::vector<int>>& init_communities = {}) {
  Hyperparams h = hyper;
  h.K = K;
  h.T = T;
  return run_chain(data, h, config, BlockModel::TopicBlock, init_communities);
}

/// Dispatches on model kind; K is ignored by LDA/ART and T by the Poisson-SBM.
inline PosteriorSamples fit_model(ModelKind kind, const TrainingData& data, int K, int T,
                                  const Hyperparams& hyper, const ChainConfig& config,
                                  const std::optional<std::vector<int>>& init_communities = {}) {
  switch (kind) {
    case ModelKind::TopicBlock:
      return fit_topic_blockmodel(data, K, T, hyper, config, init_communities);
    case ModelKind::LDA: return fit_lda(data, T, hyper, config);
    case ModelKind::ART: return fit_art(data, T, hyper, config);
    case ModelKind::CNT: {
      Hyperparams h = hyper;
      h.K = K;
      h.T = T;
      return run_chain(data, h, config, BlockModel::ClusteredNodeTopic, init_communities);
    }
    case ModelKind::PoissonSBM: {
      Hyperparams h = hyper;
      h.K = K;
      h.T = 1;
      return run_chain(data, h, config, BlockModel::PoissonSBM, init_communities);
    }
  }
  throw InvalidParam("unknown model");
}

}  // namespace tbm
