#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "tbm/report.hpp"

using namespace tbm;

namespace {

Sample make_sample(const InteractionCorpus& corpus, const LatentState& state, Hyperparams h) {
  TrainingData data(corpus);
  const auto st = recompute_stats(data, state, h);
  Sample s;
  s.c = state.c;
  s.hyper = h;
  s.N_blk = st.N_blk;
  s.M_tw = st.M_tw;
  s.P_blk = st.P_blk;
  return s;
}

InteractionCorpus corpus4() {
  InteractionCorpus c;
  c.nodes = {"dan", "amy", "cat", "bob"};
  c.vocabulary.tokens = {"w0", "w1", "w2", "w3", "w4"};
  c.messages = {{"m0", 0, 1, {0, 0, 1, 4}}, {"m1", 1, 2, {2, 3}}, {"m2", 2, 0, {4, 4, 4}},
                {"m3", 3, 1, {1}},          {"m4", 2, 3, {0, 3}}};
  return c;
}

Hyperparams hp(int K, int T) {
  Hyperparams h;
  h.K = K;
  h.T = T;
  h.alpha_lambda = 0.5;
  h.beta_lambda = 2.0;
  h.kappa = 0.2;
  return h;
}

}  // namespace

TEST(Report, SingleBlockSingleTopicIsConstant) {
  const auto c = corpus4();
  const auto smp = make_sample(c, {{0, 0, 0, 0}, std::vector<int>(12, 0)}, hp(1, 1));
  const auto im = intensity_matrix(smp, 5, c.nodes);
  // 12 tokens over 12 ordered pairs: (12 + 0.5) / (12 + 2)
  for (double v : im.values) EXPECT_DOUBLE_EQ(v, 12.5 / 14.0);
  std::ostringstream out;
  write_topic_table(smp, c, 3, 2, out);
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("topic 0"), std::string::npos);
  EXPECT_EQ(text.find("topic 1"), std::string::npos);
}

TEST(Report, MatrixIsBlockConstantAndOrdered) {
  const auto c = corpus4();
  const std::vector<int> comm{1, 0, 1, 0};
  const LatentState state{comm, {0, 1, 0, 1, 1, 0, 1, 1, 0, 1, 0, 0}};
  const auto smp = make_sample(c, state, hp(2, 2));
  const auto im = intensity_matrix(smp, 5, c.nodes);
  // community 0 first (amy, bob), then community 1 (cat, dan)
  EXPECT_EQ(im.order, (std::vector<int>{1, 3, 2, 0}));
  const std::size_t S = 4;
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j)
      for (std::size_t i2 = 0; i2 < S; ++i2)
        for (std::size_t j2 = 0; j2 < S; ++j2)
          if (comm[im.order[i]] == comm[im.order[i2]] && comm[im.order[j]] == comm[im.order[j2]]) {
            EXPECT_EQ(im.values[i * S + j], im.values[i2 * S + j2]);
          }
  std::ostringstream out;
  write_intensity_csv(im, c.nodes, out);
  std::istringstream lines(out.str());
  std::string header, row;
  std::getline(lines, header);
  EXPECT_EQ(header, "node,amy,bob,cat,dan");
  std::vector<std::string> labels;
  while (std::getline(lines, row)) labels.push_back(row.substr(0, row.find(',')));
  EXPECT_EQ(labels, (std::vector<std::string>{"amy", "bob", "cat", "dan"}));
}

TEST(Report, TopWordsMatchAnIndependentSort) {
  const auto c = corpus4();
  const LatentState state{{0, 0, 1, 1}, {0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 0, 1}};
  const auto h = hp(2, 2);
  const auto smp = make_sample(c, state, h);
  for (int t = 0; t < 2; ++t) {
    // eta row from raw counts, then a full sort keyed on (-value, index)
    std::vector<std::pair<double, int>> row;
    double tot = 0;
    for (int v = 0; v < 5; ++v) tot += smp.M_tw[t * 5 + v];
    for (int v = 0; v < 5; ++v) row.push_back({-(smp.M_tw[t * 5 + v] + h.kappa) / (tot + 5 * h.kappa), v});
    std::sort(row.begin(), row.end());
    const auto pe = point_estimates(2, 2, 5, smp.N_blk, smp.M_tw, smp.P_blk, h);
    std::span<const double> eta(pe.eta_hat.data() + t * 5, 5);
    const auto top = top_indices(eta, 3);
    ASSERT_EQ(top.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(top[i], row[i].second);
  }
}

TEST(Report, TopIndicesBreakTiesTowardLowerIndex) {
  const std::vector<double> v{0.2, 0.5, 0.2, 0.5, 0.1};
  EXPECT_EQ(top_indices(v, 4), (std::vector<int>{1, 3, 0, 2}));
  EXPECT_EQ(top_indices(v, 10).size(), 5u);
  EXPECT_TRUE(top_indices(v, 0).empty());
}

TEST(Report, TopicTableListsObservedCommunityPairs) {
  const auto c = corpus4();
  const LatentState state{{0, 0, 1, 1}, std::vector<int>(12, 0)};
  const auto smp = make_sample(c, state, hp(2, 1));
  std::ostringstream out;
  write_topic_table(smp, c, 1, 2, out);
  const auto text = out.str();
  EXPECT_NE(text.find("community 0 -> 0  [amy dan] -> [amy dan]"), std::string::npos);
  EXPECT_NE(text.find("community 1 -> 1  [bob cat] -> [bob cat]"), std::string::npos);
  // the single topic's two most frequent words over all 12 tokens: w4 (4), w0 (3)
  EXPECT_NE(text.find("topic 0 (1): w4 w0"), std::string::npos);
}
