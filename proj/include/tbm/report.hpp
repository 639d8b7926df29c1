#pragma once

// Static artifacts for a single retained sample: the node-by-node block
// intensity matrix and the leading topics of each community pair.

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "model.hpp"
#include "sampler.hpp"

namespace tbm {

/// Node indices sorted by community, then by label.
inline std::vector<int> block_order(const std::vector<int>& c,
                                    const std::vector<std::string>& labels) {
  std::vector<int> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (c[a] != c[b]) return c[a] < c[b];
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    return a < b;
  });
  return order;
}

/// Indices of the n largest entries, larger first; ties to the lower index.
inline std::vector<int> top_indices(std::span<const double> values, int n) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return values[a] > values[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(n, 0))));
  return idx;
}

struct IntensityMatrix {
  std::vector<int> order;       // node index of each row/column
  std::vector<double> values;   // [S,S] in `order`
};

/// Total posterior-mean rate of block (c_s, c_r) for every ordered pair.
inline IntensityMatrix intensity_matrix(const Sample& smp, int V,
                                        const std::vector<std::string>& labels) {
  const auto& h = smp.hyper;
  const auto pe = point_estimates(h.K, h.T, V, smp.N_blk, smp.M_tw, smp.P_blk, h);
  IntensityMatrix im;
  im.order = block_order(smp.c, labels);
  const std::size_t S = im.order.size();
  im.values.resize(S * S);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j)
      im.values[i * S + j] = pe.lambda_total(smp.c[im.order[i]], smp.c[im.order[j]]);
  return im;
}

inline void write_intensity_csv(const IntensityMatrix& im, const std::vector<std::string>& labels,
                                std::ostream& out) {
  const std::size_t S = im.order.size();
  out << "node";
  for (int s : im.order) out << ',' << labels[s];
  out << '\n';
  const auto prec = out.precision(17);
  for (std::size_t i = 0; i < S; ++i) {
    out << labels[im.order[i]];
    for (std::size_t j = 0; j < S; ++j) out << ',' << im.values[i * S + j];
    out << '\n';
  }
  out.precision(prec);
}

/// For each community pair with observed pairs: its top topics by block
/// proportion, each listed with its most probable words.
inline void write_topic_table(const Sample& smp, const InteractionCorpus& corpus, int top_topics,
                              int top_words, std::ostream& out) {
  const auto& h = smp.hyper;
  const int V = corpus.vocab_size();
  const auto pe = point_estimates(h.K, h.T, V, smp.N_blk, smp.M_tw, smp.P_blk, h);
  std::vector<std::vector<std::string>> members(h.K);
  for (int s : block_order(smp.c, corpus.nodes)) members[smp.c[s]].push_back(corpus.nodes[s]);

  auto join = [](const std::vector<std::string>& xs) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : " ") + x;
    return s;
  };
  for (int k = 0; k < h.K; ++k)
    for (int l = 0; l < h.K; ++l) {
      if (smp.P_blk[static_cast<std::size_t>(k) * h.K + l] == 0) continue;
      out << "community " << k << " -> " << l << "  [" << join(members[k]) << "] -> ["
          << join(members[l]) << "]  rate " << pe.lambda_total(k, l) << '\n';
      std::span<const double> theta(
          pe.theta_hat.data() + (static_cast<std::size_t>(k) * h.K + l) * h.T, h.T);
      for (int t : top_indices(theta, top_topics)) {
        std::span<const double> eta(pe.eta_hat.data() + static_cast<std::size_t>(t) * V, V);
        std::vector<std::string> words;
        for (int v : top_indices(eta, top_words)) words.push_back(corpus.vocabulary.tokens[v]);
        out << "  topic " << t << " (" << theta[t] << "): " << join(words) << '\n';
      }
    }
}

}  // namespace tbm
