#pragma once

// Held-out predictive evaluation: document text, recipient, sender and
// recipient, and edge counts, each averaged over retained samples by
// log-mean-exp; topic-count cross-validation; adjusted Rand index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "baselines.hpp"
#include "corpus.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "sampler.hpp"

namespace tbm {

enum class Task { Text, Recipient, SenderRecipient, EdgeCount };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::Text: return "text";
    case Task::Recipient: return "recipient";
    case Task::SenderRecipient: return "pair";
    case Task::EdgeCount: return "counts";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  for (auto t : {Task::Text, Task::Recipient, Task::SenderRecipient, Task::EdgeCount})
    if (to_string(t) == s) return t;
  throw InvalidParam("unknown task '" + std::string(s) + "'");
}

struct EvalReport {
  Task task = Task::Text;
  std::string model;
  double total_log_predictive = 0.0;
  std::vector<std::pair<std::string, double>> per_item;
  double mc_standard_error = 0.0;
};

/// Which likelihood factors enter recipient and pair scoring.
struct ScoringFactors {
  bool text = true;
  bool count = true;
};

inline ScoringFactors default_factors(ModelKind kind) {
  switch (kind) {
    case ModelKind::TopicBlock: return {true, true};
    case ModelKind::PoissonSBM: return {false, true};
    case ModelKind::CNT:
    case ModelKind::ART:
    case ModelKind::LDA: return {true, false};
  }
  return {true, true};
}

/// Word-type counts of a token sequence, sorted by word id.
inline std::vector<std::pair<int, int>> bag_of_words(std::span<const int> tokens) {
  std::map<int, int> counts;
  for (int w : tokens) ++counts[w];
  return {counts.begin(), counts.end()};
}

/// Point-estimate view of one retained sample.
class SamplePredictive {
 public:
  SamplePredictive(const PosteriorSamples& ps, const Sample& smp)
      : kind_(ps.kind), S_(ps.num_nodes), V_(ps.vocab_size), hyper_(smp.hyper), c_(smp.c) {
    const int T = hyper_.T;
    T_ = T;
    if (smp.M_tw.size() != static_cast<std::size_t>(T) * V_)
      throw InconsistentState("sample topic-word matrix has the wrong size");
    if (kind_ == ModelKind::LDA || kind_ == ModelKind::ART) {
      pe_ = point_estimates(0, T, V_, {}, smp.M_tw, {}, hyper_);
      if (kind_ == ModelKind::ART) {
        if (smp.group_topic.size() != static_cast<std::size_t>(S_) * S_ * T)
          throw InconsistentState("ART sample has the wrong pair-topic size");
        mixture_.resize(smp.group_topic.size());
        for (int g = 0; g < S_ * S_; ++g) {
          double tot = 0.0;
          for (int t = 0; t < T; ++t) tot += smp.group_topic[static_cast<std::size_t>(g) * T + t];
          for (int t = 0; t < T; ++t) {
            const auto i = static_cast<std::size_t>(g) * T + t;
            mixture_[i] = (smp.group_topic[i] + hyper_.alpha_lambda) /
                          (tot + T * hyper_.alpha_lambda);
          }
        }
      } else {
        mixture_.assign(T, 1.0 / T);
      }
    } else {
      K_ = hyper_.K;
      if (c_.size() != static_cast<std::size_t>(S_))
        throw InconsistentState("sample community vector has the wrong length");
      if (smp.N_blk.size() != static_cast<std::size_t>(K_) * K_ * T ||
          smp.P_blk.size() != static_cast<std::size_t>(K_) * K_)
        throw InconsistentState("sample block tensors have the wrong size");
      pe_ = point_estimates(K_, T, V_, smp.N_blk, smp.M_tw, smp.P_blk, hyper_);
      block_tokens_.assign(static_cast<std::size_t>(K_) * K_, 0.0);
      for (int b = 0; b < K_ * K_; ++b)
        for (int t = 0; t < T; ++t)
          block_tokens_[b] += smp.N_blk[static_cast<std::size_t>(b) * T + t];
      block_pairs_.assign(smp.P_blk.begin(), smp.P_blk.end());
    }
  }

  ModelKind kind() const { return kind_; }
  int num_nodes() const { return S_; }
  bool is_block_model() const { return kind_ != ModelKind::LDA && kind_ != ModelKind::ART; }
  const PointEstimates& estimates() const { return pe_; }

  /// Topic mixture governing words sent from s to r.
  const double* mixture(int s, int r) const {
    switch (kind_) {
      case ModelKind::LDA: return mixture_.data();
      case ModelKind::ART:
        return mixture_.data() + (static_cast<std::size_t>(s) * S_ + r) * T_;
      default:
        return pe_.theta_hat.data() + (static_cast<std::size_t>(c_[s]) * K_ + c_[r]) * T_;
    }
  }

  /// sum_i log sum_t mixture(s,r)_t eta_t(w_i), with the words given as a bag.
  double text_log_lik(int s, int r, const std::vector<std::pair<int, int>>& bag) const {
    const double* mix = mixture(s, r);
    double acc = 0.0;
    for (auto [w, n] : bag) {
      double p = 0.0;
      for (int t = 0; t < T_; ++t) p += mix[t] * pe_.eta(t, w);
      acc += n * std::log(p);
    }
    return acc;
  }

  /// log Poisson(n; total posterior-mean rate of block (c_s, c_r)).
  double count_log_poisson(int s, int r, long n) const {
    return log_poisson(n, pe_.lambda_total(c_[s], c_[r]));
  }

  /// Negative-binomial posterior predictive of a held-out pair's word count.
  double count_log_predictive(int s, int r, long n) const {
    const auto b = static_cast<std::size_t>(c_[s]) * K_ + c_[r];
    const double a = T_ * hyper_.alpha_lambda + block_tokens_[b];
    const double rate = hyper_.beta_lambda + block_pairs_[b];
    const double dn = static_cast<double>(n);
    return std::lgamma(a + dn) - std::lgamma(a) - std::lgamma(dn + 1.0) +
           a * std::log(rate / (rate + 1.0)) + dn * std::log(1.0 / (rate + 1.0));
  }

 private:
  ModelKind kind_;
  int S_, V_, K_ = 0, T_ = 0;
  Hyperparams hyper_;
  std::vector<int> c_;
  PointEstimates pe_;
  std::vector<double> mixture_;
  std::vector<double> block_tokens_, block_pairs_;
};

/// All retained samples of a chain, ready for scoring.
class PosteriorPredictive {
 public:
  explicit PosteriorPredictive(const PosteriorSamples& ps) : kind_(ps.kind), S_(ps.num_nodes) {
    if (ps.samples.empty()) throw InvalidParam("no retained samples");
    for (const auto& s : ps.samples) samples_.emplace_back(ps, s);
    unobserved_.insert(ps.heldout.pairs.begin(), ps.heldout.pairs.end());
  }

  ModelKind kind() const { return kind_; }
  int num_nodes() const { return S_; }
  const std::vector<SamplePredictive>& samples() const { return samples_; }
  bool was_held_out(NodePair p) const { return unobserved_.contains(p); }

  void check_node(int s) const {
    if (s < 0 || s >= S_) throw UnknownNode("node index " + std::to_string(s) + " not in model");
  }

 private:
  ModelKind kind_;
  int S_;
  std::vector<SamplePredictive> samples_;
  std::set<NodePair> unobserved_;
};

// ---------------------------------------------------------------------------
// uncertainty

/// Nonparametric bootstrap standard error of the sum of per-item scores.
inline double bootstrap_standard_error(const std::vector<double>& items, int resamples = 1000,
                                       std::uint64_t seed = 0) {
  if (items.size() < 2) return 0.0;
  Rng rng(seed);
  const int n = static_cast<int>(items.size());
  double mean = 0.0, m2 = 0.0;
  for (int b = 0; b < resamples; ++b) {
    double tot = 0.0;
    for (int i = 0; i < n; ++i) tot += items[uniform_index(n, rng)];
    const double d = tot - mean;
    mean += d / (b + 1);
    m2 += d * (tot - mean);
  }
  return std::sqrt(m2 / (resamples - 1));
}

inline EvalReport make_report(Task task, ModelKind kind,
                              std::vector<std::pair<std::string, double>> items) {
  EvalReport rep;
  rep.task = task;
  rep.model = std::string(to_string(kind));
  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& [id, v] : items) {
    rep.total_log_predictive += v;
    scores.push_back(v);
  }
  rep.per_item = std::move(items);
  rep.mc_standard_error = bootstrap_standard_error(scores);
  return rep;
}

// ---------------------------------------------------------------------------
// task 1: text of held-out documents given sender and recipient

inline double document_text_score(const PosteriorPredictive& pp, const Message& d) {
  pp.check_node(d.sender);
  pp.check_node(d.recipient);
  const auto bag = bag_of_words(d.tokens);
  std::vector<double> per_sample;
  per_sample.reserve(pp.samples().size());
  for (const auto& smp : pp.samples())
    per_sample.push_back(smp.text_log_lik(d.sender, d.recipient, bag));
  return log_mean_exp(per_sample);
}

inline EvalReport heldout_text_loglik(const PosteriorPredictive& pp,
                                      const std::vector<Message>& docs) {
  std::vector<std::pair<std::string, double>> items;
  items.reserve(docs.size());
  for (const auto& d : docs) items.emplace_back(d.id, document_text_score(pp, d));
  return make_report(Task::Text, pp.kind(), std::move(items));
}

inline EvalReport heldout_text_loglik(const PosteriorSamples& ps,
                                      const std::vector<Message>& docs) {
  return heldout_text_loglik(PosteriorPredictive(ps), docs);
}

// ---------------------------------------------------------------------------
// tasks 2 and 3: recipient, and sender plus recipient

namespace detail {
inline void require_network(ModelKind kind) {
  if (kind == ModelKind::LDA)
    throw InvalidParam("LDA has no network component and cannot attribute recipients");
}

/// log weight of pair (s, r) for one sample under the selected factors.
inline double pair_log_weight(const SamplePredictive& smp, int s, int r,
                              const std::vector<std::pair<int, int>>& bag, long n_total,
                              ScoringFactors f) {
  double lw = 0.0;
  if (f.count) lw += smp.count_log_poisson(s, r, n_total);
  if (f.text) lw += smp.text_log_lik(s, r, bag);
  return lw;
}
}  // namespace detail

/// Distribution over recipients (length S, zero at the sender), uniform prior
/// over the S-1 candidates, averaged over samples after per-sample
/// normalization.
inline std::vector<double> recipient_posterior(const PosteriorPredictive& pp, int sender,
                                               std::span<const int> tokens, long n_total,
                                               ScoringFactors f) {
  detail::require_network(pp.kind());
  pp.check_node(sender);
  const int S = pp.num_nodes();
  const auto bag = bag_of_words(tokens);
  std::vector<double> out(S, 0.0), lw(S);
  for (const auto& smp : pp.samples()) {
    for (int r = 0; r < S; ++r)
      lw[r] = r == sender ? -std::numeric_limits<double>::infinity()
                          : detail::pair_log_weight(smp, sender, r, bag, n_total, f);
    normalize_log_weights(lw);
    for (int r = 0; r < S; ++r) out[r] += lw[r];
  }
  for (double& x : out) x /= static_cast<double>(pp.samples().size());
  return out;
}

inline std::vector<double> recipient_posterior(const PosteriorPredictive& pp, int sender,
                                               std::span<const int> tokens, long n_total) {
  return recipient_posterior(pp, sender, tokens, n_total, default_factors(pp.kind()));
}

/// Distribution over ordered pairs, flattened s*S + r, zero on the diagonal.
inline std::vector<double> sender_recipient_posterior(const PosteriorPredictive& pp,
                                                      std::span<const int> tokens, long n_total,
                                                      ScoringFactors f) {
  detail::require_network(pp.kind());
  const int S = pp.num_nodes();
  const auto bag = bag_of_words(tokens);
  const auto SS = static_cast<std::size_t>(S) * S;
  std::vector<double> out(SS, 0.0), lw(SS);
  for (const auto& smp : pp.samples()) {
    for (int s = 0; s < S; ++s)
      for (int r = 0; r < S; ++r)
        lw[static_cast<std::size_t>(s) * S + r] =
            s == r ? -std::numeric_limits<double>::infinity()
                   : detail::pair_log_weight(smp, s, r, bag, n_total, f);
    normalize_log_weights(lw);
    for (std::size_t i = 0; i < SS; ++i) out[i] += lw[i];
  }
  for (double& x : out) x /= static_cast<double>(pp.samples().size());
  return out;
}

inline std::vector<double> sender_recipient_posterior(const PosteriorPredictive& pp,
                                                      std::span<const int> tokens,
                                                      long n_total) {
  return sender_recipient_posterior(pp, tokens, n_total, default_factors(pp.kind()));
}

inline EvalReport recipient_task(const PosteriorPredictive& pp, const std::vector<Message>& docs,
                                 ScoringFactors f) {
  std::vector<std::pair<std::string, double>> items;
  for (const auto& d : docs) {
    pp.check_node(d.recipient);
    const auto p = recipient_posterior(pp, d.sender, d.tokens,
                                       static_cast<long>(d.tokens.size()), f);
    items.emplace_back(d.id, std::log(p[d.recipient]));
  }
  return make_report(Task::Recipient, pp.kind(), std::move(items));
}

inline EvalReport recipient_task(const PosteriorPredictive& pp,
                                 const std::vector<Message>& docs) {
  return recipient_task(pp, docs, default_factors(pp.kind()));
}

inline EvalReport sender_recipient_task(const PosteriorPredictive& pp,
                                        const std::vector<Message>& docs, ScoringFactors f) {
  std::vector<std::pair<std::string, double>> items;
  const int S = pp.num_nodes();
  for (const auto& d : docs) {
    pp.check_node(d.sender);
    pp.check_node(d.recipient);
    const auto p =
        sender_recipient_posterior(pp, d.tokens, static_cast<long>(d.tokens.size()), f);
    items.emplace_back(d.id, std::log(p[static_cast<std::size_t>(d.sender) * S + d.recipient]));
  }
  return make_report(Task::SenderRecipient, pp.kind(), std::move(items));
}

inline EvalReport sender_recipient_task(const PosteriorPredictive& pp,
                                        const std::vector<Message>& docs) {
  return sender_recipient_task(pp, docs, default_factors(pp.kind()));
}

// ---------------------------------------------------------------------------
// task 4: word counts of held-out pairs

/// Total tokens per ordered pair in `corpus`, flattened s*S + r.
inline std::vector<long> pair_totals(const InteractionCorpus& corpus) {
  const int S = corpus.num_nodes();
  std::vector<long> n(static_cast<std::size_t>(S) * S, 0);
  for (const auto& m : corpus.messages)
    n[static_cast<std::size_t>(m.sender) * S + m.recipient] += static_cast<long>(m.tokens.size());
  return n;
}

inline double edge_count_score(const PosteriorPredictive& pp, NodePair p, long n) {
  std::vector<double> per_sample;
  per_sample.reserve(pp.samples().size());
  for (const auto& smp : pp.samples())
    per_sample.push_back(smp.count_log_predictive(p.sender, p.recipient, n));
  return log_mean_exp(per_sample);
}

inline EvalReport edge_count_loglik(const PosteriorPredictive& pp,
                                    const std::vector<NodePair>& heldout_pairs,
                                    const InteractionCorpus& corpus) {
  if (pp.kind() != ModelKind::TopicBlock && pp.kind() != ModelKind::PoissonSBM)
    throw InvalidParam("only count models predict edge counts");
  const auto totals = pair_totals(corpus);
  const int S = corpus.num_nodes();
  std::vector<std::pair<std::string, double>> items;
  for (const auto& p : heldout_pairs) {
    pp.check_node(p.sender);
    pp.check_node(p.recipient);
    if (!pp.was_held_out(p)) throw PairNotHeldOut(p.sender, p.recipient);
    const long n = totals[static_cast<std::size_t>(p.sender) * S + p.recipient];
    items.emplace_back(corpus.nodes[p.sender] + "->" + corpus.nodes[p.recipient],
                       edge_count_score(pp, p, n));
  }
  return make_report(Task::EdgeCount, pp.kind(), std::move(items));
}

// ---------------------------------------------------------------------------
// choosing T

struct CvResult {
  int chosen_T = 0;
  std::vector<std::pair<int, double>> scores;  // (T, mean held-out text log-likelihood)
};

/// Document-level k-fold cross-validation of the Topic Blockmodel's T;
/// folds come from a permutation seeded by config.seed. Ties go to the
/// smaller T.
inline CvResult cross_validate_topics(const InteractionCorpus& corpus,
                                      std::vector<int> candidates, int folds,
                                      const Hyperparams& hyper, const ChainConfig& config) {
  if (candidates.empty()) throw InvalidParam("no candidate topic counts");
  if (folds < 2) throw InvalidParam("need at least 2 folds");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const std::size_t M = corpus.messages.size();
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(M);
  for (std::size_t i = 0; i < M; ++i) fold_of[order[i]] = static_cast<int>(i % folds);

  CvResult res;
  double best = -std::numeric_limits<double>::infinity();
  for (int T : candidates) {
    double acc = 0.0;
    for (int f = 0; f < folds; ++f) {
      InteractionCorpus train;
      train.nodes = corpus.nodes;
      train.vocabulary = corpus.vocabulary;
      std::vector<Message> held;
      for (std::size_t i = 0; i < M; ++i)
        (fold_of[i] == f ? held : train.messages).push_back(corpus.messages[i]);
      ChainConfig cfg = config;
      cfg.seed = config.seed + 1000003ULL * static_cast<std::uint64_t>(f + 1);
      const auto ps = fit_topic_blockmodel(TrainingData(train), hyper.K, T, hyper, cfg);
      acc += heldout_text_loglik(ps, held).total_log_predictive;
    }
    const double mean = acc / folds;
    res.scores.emplace_back(T, mean);
    if (mean > best) {
      best = mean;
      res.chosen_T = T;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// partition agreement

inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  auto choose2 = [](double n) { return n * (n - 1.0) / 2.0; };
  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [k, n] : joint) sum_joint += choose2(static_cast<double>(n));
  for (const auto& [k, n] : ra) sum_a += choose2(static_cast<double>(n));
  for (const auto& [k, n] : rb) sum_b += choose2(static_cast<double>(n));
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace tbm
