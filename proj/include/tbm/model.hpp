#pragma once

// Collapsed Topic Blockmodel: latent state, sufficient statistics, exact
// single-site conditionals and the joint log-probability they derive from.
//
// The community weights, block rates, block topic proportions and topic-word
// distributions are integrated out. The state is the community vector c and
// one topic per training token z. The joint over (c, z, words) is
//
//   DirMult(c; xi0)
//   + sum_{k,l,t} log NB-marginal of {n_{s,r,t} : c_s=k, c_r=l, (s,r) observed}
//   + sum_{(s,r)} [ sum_t log n_{s,r,t}! - log n_{s,r}! ]      (token order)
//   + sum_t DirMult(words of topic t; kappa)
//
// The bracketed order term turns the unordered per-topic counts of the
// gamma-Poisson form into a probability over per-token topic sequences, which
// is what the token sweep samples.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "errors.hpp"
#include "numeric.hpp"

namespace tbm {

struct Hyperparams {
  int K = 1;
  int T = 1;
  double xi0 = 1.0;
  double alpha_lambda = 1.0;
  double beta_lambda = 1.0;
  double kappa = 1.0;

  void validate() const {
    if (K < 1 || T < 1) throw InvalidParam("K and T must be at least 1");
    if (!(xi0 > 0) || !(alpha_lambda > 0) || !(beta_lambda > 0) || !(kappa > 0))
      throw InvalidParam("hyperparameters must be positive");
  }

  bool operator==(const Hyperparams&) const = default;
};

/// Which likelihood the community structure is scored with.
enum class BlockModel {
  TopicBlock,          // gamma-Poisson per (block, topic) plus words
  ClusteredNodeTopic,  // Dirichlet-multinomial topic split per block plus words
  PoissonSBM,          // gamma-Poisson on pair totals (T = 1), words ignored
};

enum class ModelKind { TopicBlock, LDA, ART, CNT, PoissonSBM };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::TopicBlock: return "tbm";
    case ModelKind::LDA: return "lda";
    case ModelKind::ART: return "art";
    case ModelKind::CNT: return "cnt";
    case ModelKind::PoissonSBM: return "psbm";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::TopicBlock, ModelKind::LDA, ModelKind::ART, ModelKind::CNT,
                 ModelKind::PoissonSBM})
    if (to_string(k) == s) return k;
  throw InvalidParam("unknown model '" + std::string(s) + "'");
}

/// Flattened training tokens plus the observed-pair mask.
class TrainingData {
 public:
  TrainingData(const InteractionCorpus& corpus, const std::vector<NodePair>& unobserved = {})
      : S_(corpus.num_nodes()), V_(corpus.vocab_size()) {
    corpus.validate();
    observed_.assign(static_cast<std::size_t>(S_) * S_, 1);
    for (int s = 0; s < S_; ++s) observed_[static_cast<std::size_t>(s) * S_ + s] = 0;
    for (const auto& p : unobserved) {
      if (p.sender < 0 || p.sender >= S_ || p.recipient < 0 || p.recipient >= S_)
        throw InvalidParam("unobserved pair out of range");
      observed_[static_cast<std::size_t>(p.sender) * S_ + p.recipient] = 0;
    }
    message_offsets_.reserve(corpus.messages.size() + 1);
    message_offsets_.push_back(0);
    for (const auto& m : corpus.messages) {
      if (!observed(m.sender, m.recipient))
        throw InconsistentState("message '" + m.id + "' lies on an unobserved pair");
      for (int w : m.tokens) {
        words_.push_back(w);
        senders_.push_back(m.sender);
        recipients_.push_back(m.recipient);
      }
      message_offsets_.push_back(words_.size());
    }
  }

  int num_nodes() const { return S_; }
  int vocab_size() const { return V_; }
  std::size_t num_tokens() const { return words_.size(); }
  std::size_t num_messages() const { return message_offsets_.size() - 1; }

  int word(std::size_t i) const { return words_[i]; }
  int sender(std::size_t i) const { return senders_[i]; }
  int recipient(std::size_t i) const { return recipients_[i]; }

  /// Token range [offset(m), offset(m+1)) of message m.
  std::size_t message_offset(std::size_t m) const { return message_offsets_[m]; }

  bool observed(int s, int r) const {
    return observed_[static_cast<std::size_t>(s) * S_ + r] != 0;
  }
  const std::vector<std::uint8_t>& observed_mask() const { return observed_; }

 private:
  int S_, V_;
  std::vector<int> words_, senders_, recipients_;
  std::vector<std::size_t> message_offsets_;
  std::vector<std::uint8_t> observed_;
};

/// Community per node and topic per training token (token order of TrainingData).
struct LatentState {
  std::vector<int> c;
  std::vector<int> z;

  bool operator==(const LatentState&) const = default;
};

inline void validate_state(const TrainingData& data, const LatentState& state,
                           const Hyperparams& hyper) {
  if (state.c.size() != static_cast<std::size_t>(data.num_nodes()))
    throw InconsistentState("community vector length does not match node count");
  if (state.z.size() != data.num_tokens())
    throw InconsistentState("topic vector length does not match token count");
  for (int k : state.c)
    if (k < 0 || k >= hyper.K) throw InconsistentState("community index out of range");
  for (int t : state.z)
    if (t < 0 || t >= hyper.T) throw InconsistentState("topic index out of range");
}

inline LatentState random_state(const TrainingData& data, const Hyperparams& hyper, Rng& rng) {
  LatentState st;
  st.c.resize(data.num_nodes());
  for (int& k : st.c) k = uniform_index(hyper.K, rng);
  st.z.resize(data.num_tokens());
  for (int& t : st.z) t = uniform_index(hyper.T, rng);
  return st;
}

// ---------------------------------------------------------------------------
// sufficient statistics

struct SuffStats {
  int S = 0, K = 0, T = 0, V = 0;
  std::vector<int> m;        // [K] community sizes
  std::vector<int> N_blk;    // [K,K,T] tokens by block and topic
  std::vector<int> M_tw;     // [T,V]
  std::vector<int> M_t;      // [T]
  std::vector<int> n_pair;   // [S,S,T]
  std::vector<int> P_blk;    // [K,K] observed ordered pairs per block
  std::vector<double> logfact;  // [K,K,T] sum of log n_{s,r,t}! over the block's pairs
  std::vector<std::uint8_t> obs_pairs;  // [S,S]

  std::size_t blk(int k, int l) const { return static_cast<std::size_t>(k) * K + l; }
  std::size_t blk(int k, int l, int t) const { return blk(k, l) * T + t; }
  std::size_t pair(int s, int r) const { return static_cast<std::size_t>(s) * S + r; }
  std::size_t pair(int s, int r, int t) const { return pair(s, r) * T + t; }
  std::size_t tw(int t, int v) const { return static_cast<std::size_t>(t) * V + v; }

  bool observed(int s, int r) const { return obs_pairs[pair(s, r)] != 0; }

  long total_tokens() const {
    long n = 0;
    for (int x : M_t) n += x;
    return n;
  }

  /// Adds (delta = +1) or removes (delta = -1) one token of pair (s, r) in topic t.
  void update_token(const std::vector<int>& c, int s, int r, int word, int t, int delta) {
    const auto b = blk(c[s], c[r], t);
    const auto p = pair(s, r, t);
    if (delta > 0) {
      logfact[b] += std::log(static_cast<double>(n_pair[p] + 1));
    } else {
      logfact[b] -= std::log(static_cast<double>(n_pair[p]));
    }
    n_pair[p] += delta;
    N_blk[b] += delta;
    M_tw[tw(t, word)] += delta;
    M_t[t] += delta;
  }

  /// Moves node s out of (delta = -1) or into (delta = +1) community k.
  /// c[r] for r != s must hold the current communities; c[s] is not read.
  void update_node(const std::vector<int>& c, int s, int k, int delta) {
    m[k] += delta;
    for (int r = 0; r < S; ++r) {
      if (r == s) continue;
      if (observed(s, r)) move_pair(s, r, blk(k, c[r]), delta);
      if (observed(r, s)) move_pair(r, s, blk(c[r], k), delta);
    }
  }

  bool operator==(const SuffStats&) const = default;

 private:
  void move_pair(int s, int r, std::size_t cell, int delta) {
    P_blk[cell] += delta;
    for (int t = 0; t < T; ++t) {
      const int n = n_pair[pair(s, r, t)];
      if (n == 0) continue;
      N_blk[cell * T + t] += delta * n;
      logfact[cell * T + t] += delta * std::lgamma(n + 1.0);
    }
  }
};

/// Builds every statistic from scratch; the reference for incremental updates.
inline SuffStats recompute_stats(const TrainingData& data, const LatentState& state,
                                 const Hyperparams& hyper) {
  validate_state(data, state, hyper);
  SuffStats st;
  st.S = data.num_nodes();
  st.K = hyper.K;
  st.T = hyper.T;
  st.V = data.vocab_size();
  const auto S = static_cast<std::size_t>(st.S), K = static_cast<std::size_t>(st.K),
             T = static_cast<std::size_t>(st.T), V = static_cast<std::size_t>(st.V);
  st.m.assign(K, 0);
  st.N_blk.assign(K * K * T, 0);
  st.M_tw.assign(T * V, 0);
  st.M_t.assign(T, 0);
  st.n_pair.assign(S * S * T, 0);
  st.P_blk.assign(K * K, 0);
  st.logfact.assign(K * K * T, 0.0);
  st.obs_pairs = data.observed_mask();

  for (int k : state.c) ++st.m[k];
  for (std::size_t i = 0; i < data.num_tokens(); ++i) {
    const int s = data.sender(i), r = data.recipient(i), t = state.z[i];
    ++st.n_pair[st.pair(s, r, t)];
    ++st.N_blk[st.blk(state.c[s], state.c[r], t)];
    ++st.M_tw[st.tw(t, data.word(i))];
    ++st.M_t[t];
  }
  for (int s = 0; s < st.S; ++s)
    for (int r = 0; r < st.S; ++r) {
      if (!st.observed(s, r)) continue;
      ++st.P_blk[st.blk(state.c[s], state.c[r])];
      for (int t = 0; t < st.T; ++t) {
        const int n = st.n_pair[st.pair(s, r, t)];
        if (n > 1) st.logfact[st.blk(state.c[s], state.c[r], t)] += std::lgamma(n + 1.0);
      }
    }
  return st;
}

/// Field-wise comparison allowing rounding drift in the accumulated log-factorials.
inline bool stats_consistent(const SuffStats& a, const SuffStats& b, double tol = 1e-8) {
  if (a.S != b.S || a.K != b.K || a.T != b.T || a.V != b.V || a.m != b.m ||
      a.N_blk != b.N_blk || a.M_tw != b.M_tw || a.M_t != b.M_t || a.n_pair != b.n_pair ||
      a.P_blk != b.P_blk || a.obs_pairs != b.obs_pairs || a.logfact.size() != b.logfact.size())
    return false;
  for (std::size_t i = 0; i < a.logfact.size(); ++i)
    if (std::abs(a.logfact[i] - b.logfact[i]) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// closed-form marginals

/// log of the integral over lambda of prod_i Poisson(counts_i; lambda) Gamma(lambda; shape, rate).
inline double block_topic_log_marginal(std::span<const int> counts, double alpha, double beta) {
  if (!(alpha > 0) || !(beta > 0)) throw InvalidParam("gamma shape and rate must be positive");
  if (counts.empty()) return 0.0;
  double n = 0.0, lf = 0.0;
  for (int x : counts) {
    n += x;
    lf += std::lgamma(x + 1.0);
  }
  const double P = static_cast<double>(counts.size());
  return alpha * std::log(beta) - std::lgamma(alpha) + std::lgamma(alpha + n) -
         (alpha + n) * std::log(beta + P) - lf;
}

/// log probability of one particular sequence with the given category counts
/// under a symmetric Dirichlet(alpha) prior.
inline double dirichlet_multinomial_log(std::span<const int> counts, double alpha) {
  const double D = static_cast<double>(counts.size());
  double n = 0.0, acc = 0.0;
  for (int x : counts) {
    n += x;
    if (x) acc += std::lgamma(x + alpha) - std::lgamma(alpha);
  }
  return acc + std::lgamma(D * alpha) - std::lgamma(n + D * alpha);
}

/// Components of the joint log-probability; each depends on a disjoint
/// subset of the hyperparameters.
struct JointTerms {
  double communities = 0.0;  // xi0
  double blocks = 0.0;       // alpha_lambda, beta_lambda
  double counts = 0.0;       // no hyperparameters
  double words = 0.0;        // kappa

  double total() const { return communities + blocks + counts + words; }
};

namespace detail {
inline double gamma_poisson_cell(double N, double P, double alpha, double beta) {
  if (N == 0 && P == 0) return 0.0;
  return alpha * std::log(beta) - std::lgamma(alpha) + std::lgamma(alpha + N) -
         (alpha + N) * std::log(beta + P);
}
}  // namespace detail

inline double communities_log_prob(std::span<const int> m, double xi0) {
  return dirichlet_multinomial_log(m, xi0);
}

inline double blocks_log_prob(const SuffStats& st, const Hyperparams& h, BlockModel model) {
  double acc = 0.0;
  for (int k = 0; k < st.K; ++k)
    for (int l = 0; l < st.K; ++l) {
      const auto cell = st.blk(k, l);
      if (model == BlockModel::ClusteredNodeTopic) {
        acc += dirichlet_multinomial_log(
            std::span<const int>(st.N_blk).subspan(cell * st.T, st.T), h.alpha_lambda);
      } else {
        for (int t = 0; t < st.T; ++t)
          acc += detail::gamma_poisson_cell(st.N_blk[cell * st.T + t], st.P_blk[cell],
                                            h.alpha_lambda, h.beta_lambda);
      }
    }
  return acc;
}

inline double words_log_prob(const SuffStats& st, double kappa) {
  double acc = 0.0;
  for (int t = 0; t < st.T; ++t)
    acc += dirichlet_multinomial_log(std::span<const int>(st.M_tw).subspan(
                                         static_cast<std::size_t>(t) * st.V, st.V),
                                     kappa);
  return acc;
}

/// Hyperparameter-free count terms: minus the per-block log-factorials, plus
/// the token-order term. Together: -sum over observed pairs of log n_{s,r}!.
inline double counts_log_prob(const SuffStats& st, BlockModel model) {
  if (model == BlockModel::ClusteredNodeTopic) return 0.0;
  double lf = 0.0;
  for (double x : st.logfact) lf += x;
  double order = 0.0;
  for (int s = 0; s < st.S; ++s)
    for (int r = 0; r < st.S; ++r) {
      if (!st.observed(s, r)) continue;
      int n = 0;
      for (int t = 0; t < st.T; ++t) {
        const int x = st.n_pair[st.pair(s, r, t)];
        n += x;
        if (x > 1) order += std::lgamma(x + 1.0);
      }
      if (n > 1) order -= std::lgamma(n + 1.0);
    }
  return order - lf;
}

inline JointTerms joint_terms(const SuffStats& st, const Hyperparams& h,
                              BlockModel model = BlockModel::TopicBlock) {
  JointTerms j;
  j.communities = communities_log_prob(st.m, h.xi0);
  j.blocks = blocks_log_prob(st, h, model);
  j.counts = counts_log_prob(st, model);
  if (model != BlockModel::PoissonSBM) j.words = words_log_prob(st, h.kappa);
  return j;
}

/// log P(c, z, words | hyper) with all continuous parameters integrated out.
inline double joint_log_prob(const TrainingData& data, const LatentState& state,
                             const Hyperparams& hyper,
                             BlockModel model = BlockModel::TopicBlock) {
  return joint_terms(recompute_stats(data, state, hyper), hyper, model).total();
}

// ---------------------------------------------------------------------------
// single-site conditionals

/// Unnormalized topic weights for a token of `word` in block (k, l); stats
/// must exclude the token. Shared by the Topic Blockmodel and CNT.
inline void topic_token_weights(const SuffStats& st, int k, int l, int word,
                                const Hyperparams& h, std::vector<double>& out) {
  out.resize(st.T);
  const double Vk = st.V * h.kappa;
  const auto base = st.blk(k, l) * st.T;
  for (int t = 0; t < st.T; ++t)
    out[t] = (st.N_blk[base + t] + h.alpha_lambda) * (st.M_tw[st.tw(t, word)] + h.kappa) /
             (st.M_t[t] + Vk);
}

inline std::vector<double> topic_token_conditional(int k, int l, int word, const SuffStats& st,
                                                   const Hyperparams& h) {
  std::vector<double> p;
  topic_token_weights(st, k, l, word, h, p);
  double total = 0.0;
  for (double x : p) total += x;
  for (double& x : p) x /= total;
  return p;
}

/// Per-node contribution to blocks, grouped by the other endpoint's community.
struct NodeProfile {
  std::vector<int> out_counts, in_counts;  // [K,T]
  std::vector<int> out_pairs, in_pairs;    // [K]
};

namespace detail {

inline void build_profile(const SuffStats& st, const std::vector<int>& c, int s,
                          NodeProfile& prof) {
  const auto KT = static_cast<std::size_t>(st.K) * st.T;
  prof.out_counts.assign(KT, 0);
  prof.in_counts.assign(KT, 0);
  prof.out_pairs.assign(st.K, 0);
  prof.in_pairs.assign(st.K, 0);
  for (int r = 0; r < st.S; ++r) {
    if (r == s) continue;
    const int j = c[r];
    if (st.observed(s, r)) {
      ++prof.out_pairs[j];
      for (int t = 0; t < st.T; ++t)
        prof.out_counts[static_cast<std::size_t>(j) * st.T + t] += st.n_pair[st.pair(s, r, t)];
    }
    if (st.observed(r, s)) {
      ++prof.in_pairs[j];
      for (int t = 0; t < st.T; ++t)
        prof.in_counts[static_cast<std::size_t>(j) * st.T + t] += st.n_pair[st.pair(r, s, t)];
    }
  }
}

/// Change in the block term of `cell` when `add` (per topic) and `add_pairs`
/// observed pairs join it. Hyperparameter-free factorial terms are omitted
/// because they do not depend on the candidate community.
inline double cell_delta(const SuffStats& st, std::size_t cell, const int* add, int add_pairs,
                         const Hyperparams& h, BlockModel model) {
  if (add_pairs == 0) return 0.0;
  const double a = h.alpha_lambda;
  double delta = 0.0, N = 0.0, A = 0.0;
  for (int t = 0; t < st.T; ++t) {
    const int base = st.N_blk[cell * st.T + t];
    N += base;
    if (add[t] == 0) continue;
    A += add[t];
    delta += std::lgamma(a + base + add[t]) - std::lgamma(a + base);
  }
  const double Ta = st.T * a;
  if (model == BlockModel::ClusteredNodeTopic) {
    if (A == 0) return 0.0;
    return delta - std::lgamma(Ta + N + A) + std::lgamma(Ta + N);
  }
  const double P = st.P_blk[cell];
  return delta - (Ta + N + A) * std::log(h.beta_lambda + P + add_pairs) +
         (Ta + N) * std::log(h.beta_lambda + P);
}

}  // namespace detail

/// Unnormalized log weights over communities for node s; stats must exclude
/// s (its size and every pair it participates in). When s joins k, outgoing
/// counts to community j enter block (k, j), incoming counts enter (j, k), and
/// for j = k both enter the single self-block (k, k) together.
inline void community_log_weights(const SuffStats& st, const std::vector<int>& c, int s,
                                  const Hyperparams& h, BlockModel model, NodeProfile& prof,
                                  std::vector<double>& out) {
  detail::build_profile(st, c, s, prof);
  out.assign(st.K, 0.0);
  std::vector<int> both(st.T);
  for (int k = 0; k < st.K; ++k) {
    double lw = std::log(st.m[k] + h.xi0);
    for (int j = 0; j < st.K; ++j) {
      const int* out_j = prof.out_counts.data() + static_cast<std::size_t>(j) * st.T;
      const int* in_j = prof.in_counts.data() + static_cast<std::size_t>(j) * st.T;
      if (j != k) {
        lw += detail::cell_delta(st, st.blk(k, j), out_j, prof.out_pairs[j], h, model);
        lw += detail::cell_delta(st, st.blk(j, k), in_j, prof.in_pairs[j], h, model);
      } else {
        for (int t = 0; t < st.T; ++t) both[t] = out_j[t] + in_j[t];
        lw += detail::cell_delta(st, st.blk(k, k), both.data(),
                                 prof.out_pairs[k] + prof.in_pairs[k], h, model);
      }
    }
    out[k] = lw;
  }
}

inline std::vector<double> community_conditional(int s, const SuffStats& stats_minus_s,
                                                 const LatentState& state,
                                                 const Hyperparams& h,
                                                 BlockModel model = BlockModel::TopicBlock) {
  NodeProfile prof;
  std::vector<double> w;
  community_log_weights(stats_minus_s, state.c, s, h, model, prof, w);
  normalize_log_weights(w);
  return w;
}

// ---------------------------------------------------------------------------
// posterior means

struct PointEstimates {
  int K = 0, T = 0, V = 0;
  std::vector<double> theta_hat;   // [K,K,T]
  std::vector<double> eta_hat;     // [T,V]
  std::vector<double> lambda_hat;  // [K,K,T], expected words per ordered pair

  double theta(int k, int l, int t) const {
    return theta_hat[(static_cast<std::size_t>(k) * K + l) * T + t];
  }
  double eta(int t, int v) const { return eta_hat[static_cast<std::size_t>(t) * V + v]; }
  double lambda(int k, int l, int t) const {
    return lambda_hat[(static_cast<std::size_t>(k) * K + l) * T + t];
  }
  double lambda_total(int k, int l) const {
    double acc = 0.0;
    for (int t = 0; t < T; ++t) acc += lambda(k, l, t);
    return acc;
  }
};

/// Posterior means from raw block/topic counts; used both on live stats and
/// on counts restored from a samples file.
inline PointEstimates point_estimates(int K, int T, int V, std::span<const int> N_blk,
                                      std::span<const int> M_tw, std::span<const int> P_blk,
                                      const Hyperparams& h) {
  PointEstimates pe;
  pe.K = K;
  pe.T = T;
  pe.V = V;
  pe.theta_hat.resize(N_blk.size());
  pe.lambda_hat.resize(N_blk.size());
  for (int b = 0; b < K * K; ++b) {
    double tot = 0.0;
    for (int t = 0; t < T; ++t) tot += N_blk[static_cast<std::size_t>(b) * T + t];
    for (int t = 0; t < T; ++t) {
      const auto i = static_cast<std::size_t>(b) * T + t;
      pe.theta_hat[i] = (N_blk[i] + h.alpha_lambda) / (tot + T * h.alpha_lambda);
      pe.lambda_hat[i] = (N_blk[i] + h.alpha_lambda) / (P_blk[b] + h.beta_lambda);
    }
  }
  pe.eta_hat.resize(M_tw.size());
  for (int t = 0; t < T; ++t) {
    double tot = 0.0;
    for (int v = 0; v < V; ++v) tot += M_tw[static_cast<std::size_t>(t) * V + v];
    for (int v = 0; v < V; ++v) {
      const auto i = static_cast<std::size_t>(t) * V + v;
      pe.eta_hat[i] = (M_tw[i] + h.kappa) / (tot + V * h.kappa);
    }
  }
  return pe;
}

inline PointEstimates point_estimates(const SuffStats& st, const Hyperparams& h) {
  return point_estimates(st.K, st.T, st.V, st.N_blk, st.M_tw, st.P_blk, h);
}

}  // namespace tbm
