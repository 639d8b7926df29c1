#pragma once

// Interaction corpora: tokenization, ingestion with frequency and degree
// filtering, held-out splits, and the line-oriented corpus file format.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "numeric.hpp"

namespace tbm {

struct Vocabulary {
  std::vector<std::string> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Vocabulary&) const = default;
};

struct Message {
  std::string id;
  int sender = 0;
  int recipient = 0;
  std::vector<int> tokens;

  bool operator==(const Message&) const = default;
};

struct NodePair {
  int sender = 0;
  int recipient = 0;

  auto operator<=>(const NodePair&) const = default;
};

struct InteractionCorpus {
  std::vector<std::string> nodes;
  Vocabulary vocabulary;
  std::vector<Message> messages;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int vocab_size() const { return vocabulary.size(); }

  std::size_t num_tokens() const {
    std::size_t n = 0;
    for (const auto& m : messages) n += m.tokens.size();
    return n;
  }

  int node_index(std::string_view label) const {
    for (int i = 0; i < num_nodes(); ++i)
      if (nodes[i] == label) return i;
    throw UnknownNode("unknown node '" + std::string(label) + "'");
  }

  /// Throws InconsistentState when indices are out of range or S < 2.
  void validate() const {
    if (num_nodes() < 2) throw InconsistentState("corpus needs at least 2 nodes");
    std::unordered_set<std::string> seen;
    for (const auto& t : vocabulary.tokens)
      if (!seen.insert(t).second) throw InconsistentState("duplicate token '" + t + "'");
    const int S = num_nodes(), V = vocab_size();
    for (const auto& m : messages) {
      if (m.sender < 0 || m.sender >= S || m.recipient < 0 || m.recipient >= S)
        throw InconsistentState("message '" + m.id + "' has an out-of-range node");
      if (m.sender == m.recipient)
        throw InconsistentState("message '" + m.id + "' is a self-message");
      for (int w : m.tokens)
        if (w < 0 || w >= V)
          throw InconsistentState("message '" + m.id + "' has an out-of-range token");
    }
  }

  bool operator==(const InteractionCorpus&) const = default;
};

struct PreprocessConfig {
  std::unordered_set<std::string> stopwords;
  std::size_t min_count = 0;
  std::size_t max_count = static_cast<std::size_t>(-1);
  bool lowercase = true;
  std::size_t min_node_degree = 0;
};

/// A raw interaction before tokenization.
struct RawMessage {
  std::string id;
  std::string sender;
  std::string recipient;
  std::string text;
};

struct ScriptLine {
  std::string scene;
  std::string speaker;
  std::string text;
};

struct Split {
  InteractionCorpus train;
  std::vector<Message> heldout_documents;
  std::vector<NodePair> heldout_pairs;
};

// ---------------------------------------------------------------------------
// tokenization and ingestion

namespace detail {
inline bool is_word_byte(unsigned char ch) { return std::isalnum(ch) || ch >= 0x80; }
}  // namespace detail

/// Splits on runs of ASCII non-alphanumerics (bytes >= 0x80 count as word
/// characters so UTF-8 letters survive), optionally lowercases, drops stopwords.
inline std::vector<std::string> tokenize(std::string_view raw_text,
                                         const PreprocessConfig& config) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !config.stopwords.contains(cur)) out.push_back(cur);
    cur.clear();
  };
  for (unsigned char ch : raw_text) {
    if (detail::is_word_byte(ch)) {
      cur.push_back(config.lowercase && ch < 0x80 ? static_cast<char>(std::tolower(ch))
                                                  : static_cast<char>(ch));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

/// Builds an integer-encoded corpus. Self-messages are dropped; word
/// frequencies are counted over the whole stopword-filtered input and
/// words outside [min_count, max_count] removed; nodes below
/// min_node_degree (messages sent plus received) are removed together with
/// their messages until nothing changes; finally words whose surviving
/// frequency fell below min_count are removed, so the output is a fixed
/// point of ingestion. Nodes and words are numbered by first occurrence.
inline InteractionCorpus ingest_corpus(const std::vector<RawMessage>& raw,
                                       const PreprocessConfig& config) {
  if (config.min_count > config.max_count)
    throw InvalidParam("min_count must not exceed max_count");

  struct Tokenized {
    const RawMessage* src;
    std::string id;
    std::vector<std::string> words;
  };
  std::vector<Tokenized> msgs;
  msgs.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& m = raw[i];
    if (m.sender == m.recipient) continue;
    msgs.push_back({&m, m.id.empty() ? std::to_string(i) : m.id, tokenize(m.text, config)});
  }

  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& m : msgs)
    for (const auto& w : m.words) ++freq[w];
  auto in_band = [&](const std::string& w) {
    const auto f = freq[w];
    return f >= config.min_count && f <= config.max_count;
  };
  for (auto& m : msgs) std::erase_if(m.words, [&](const std::string& w) { return !in_band(w); });

  // node degree fixed point
  std::vector<bool> alive(msgs.size(), true);
  for (bool changed = true; changed;) {
    changed = false;
    std::unordered_map<std::string, std::size_t> degree;
    for (std::size_t i = 0; i < msgs.size(); ++i) {
      if (!alive[i]) continue;
      ++degree[msgs[i].src->sender];
      ++degree[msgs[i].src->recipient];
    }
    for (std::size_t i = 0; i < msgs.size(); ++i) {
      if (!alive[i]) continue;
      if (degree[msgs[i].src->sender] < config.min_node_degree ||
          degree[msgs[i].src->recipient] < config.min_node_degree) {
        alive[i] = false;
        changed = true;
      }
    }
  }

  std::unordered_map<std::string, std::size_t> surviving;
  for (std::size_t i = 0; i < msgs.size(); ++i)
    if (alive[i])
      for (const auto& w : msgs[i].words) ++surviving[w];

  InteractionCorpus corpus;
  std::unordered_map<std::string, int> node_ids, word_ids;
  auto node_id = [&](const std::string& label) {
    auto [it, inserted] = node_ids.try_emplace(label, corpus.num_nodes());
    if (inserted) corpus.nodes.push_back(label);
    return it->second;
  };
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    if (!alive[i]) continue;
    Message out;
    out.id = msgs[i].id;
    out.sender = node_id(msgs[i].src->sender);
    out.recipient = node_id(msgs[i].src->recipient);
    for (const auto& w : msgs[i].words) {
      if (surviving[w] < config.min_count) continue;
      auto [it, inserted] = word_ids.try_emplace(w, corpus.vocab_size());
      if (inserted) corpus.vocabulary.tokens.push_back(w);
      out.tokens.push_back(it->second);
    }
    corpus.messages.push_back(std::move(out));
  }
  if (corpus.messages.empty()) throw EmptyCorpus();
  return corpus;
}

/// Each speech after the first in a scene becomes a message from its
/// speaker to the previous speaker.
inline std::vector<RawMessage> script_to_messages(const std::vector<ScriptLine>& script) {
  std::vector<RawMessage> out;
  for (std::size_t i = 1; i < script.size(); ++i) {
    if (script[i].scene != script[i - 1].scene) continue;
    out.push_back({std::to_string(i), script[i].speaker, script[i - 1].speaker, script[i].text});
  }
  return out;
}

/// Reconstructs raw messages whose text is the space-joined vocabulary words.
inline std::vector<RawMessage> decode_messages(const InteractionCorpus& corpus) {
  std::vector<RawMessage> out;
  out.reserve(corpus.messages.size());
  for (const auto& m : corpus.messages) {
    std::string text;
    for (int w : m.tokens) {
      if (!text.empty()) text.push_back(' ');
      text += corpus.vocabulary.tokens[w];
    }
    out.push_back({m.id, corpus.nodes[m.sender], corpus.nodes[m.recipient], std::move(text)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// held-out splits

namespace detail {
inline void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw InvalidFraction(f);
}

/// First `n` entries of a seeded permutation of [0, size), sorted.
inline std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n,
                                               std::uint64_t seed) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}
}  // namespace detail

inline Split split_documents(const InteractionCorpus& corpus, double fraction,
                             std::uint64_t seed) {
  detail::check_fraction(fraction);
  const std::size_t M = corpus.messages.size();
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(M)));
  const auto picked = detail::sample_indices(M, n, seed);

  Split split;
  split.train.nodes = corpus.nodes;
  split.train.vocabulary = corpus.vocabulary;
  std::size_t next = 0;
  for (std::size_t i = 0; i < M; ++i) {
    if (next < picked.size() && picked[next] == i) {
      split.heldout_documents.push_back(corpus.messages[i]);
      ++next;
    } else {
      split.train.messages.push_back(corpus.messages[i]);
    }
  }
  return split;
}

/// All ordered pairs (s != r) in row-major order.
inline std::vector<NodePair> all_ordered_pairs(int S) {
  std::vector<NodePair> pairs;
  pairs.reserve(static_cast<std::size_t>(S) * (S - 1));
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < S; ++r)
      if (s != r) pairs.push_back({s, r});
  return pairs;
}

inline Split split_pairs(const InteractionCorpus& corpus, double fraction, std::uint64_t seed) {
  detail::check_fraction(fraction);
  const int S = corpus.num_nodes();
  const auto pairs = all_ordered_pairs(S);
  const auto n =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
  const auto picked = detail::sample_indices(pairs.size(), n, seed);

  Split split;
  split.train.nodes = corpus.nodes;
  split.train.vocabulary = corpus.vocabulary;
  std::vector<bool> held(static_cast<std::size_t>(S) * S, false);
  for (auto i : picked) {
    split.heldout_pairs.push_back(pairs[i]);
    held[static_cast<std::size_t>(pairs[i].sender) * S + pairs[i].recipient] = true;
  }
  for (const auto& m : corpus.messages)
    if (!held[static_cast<std::size_t>(m.sender) * S + m.recipient])
      split.train.messages.push_back(m);
  return split;
}

/// Messages of `corpus` that belong to the given pairs, in corpus order.
inline std::vector<Message> messages_of_pairs(const InteractionCorpus& corpus,
                                              const std::vector<NodePair>& pairs) {
  std::set<NodePair> wanted(pairs.begin(), pairs.end());
  std::vector<Message> out;
  for (const auto& m : corpus.messages)
    if (wanted.contains({m.sender, m.recipient})) out.push_back(m);
  return out;
}

// ---------------------------------------------------------------------------
// corpus file format
//
//   nodes S vocab V messages M
//   <S node labels>
//   <V tokens>
//   <M lines: id \t sender \t recipient \t space-joined token ids>

namespace detail {
inline void check_field(const std::string& s, const char* what) {
  if (s.find_first_of("\t\n\r") != std::string::npos)
    throw InvalidParam(std::string(what) + " '" + s + "' contains a tab or newline");
}
}  // namespace detail

inline void write_corpus(const InteractionCorpus& corpus, std::ostream& out) {
  out << "nodes " << corpus.num_nodes() << " vocab " << corpus.vocab_size() << " messages "
      << corpus.messages.size() << '\n';
  for (const auto& n : corpus.nodes) {
    detail::check_field(n, "node label");
    out << n << '\n';
  }
  for (const auto& t : corpus.vocabulary.tokens) {
    if (t.empty() || t.find_first_of(" \t\n\r") != std::string::npos)
      throw InvalidParam("token '" + t + "' is empty or contains whitespace");
    out << t << '\n';
  }
  for (const auto& m : corpus.messages) {
    detail::check_field(m.id, "message id");
    out << m.id << '\t' << m.sender << '\t' << m.recipient << '\t';
    for (std::size_t i = 0; i < m.tokens.size(); ++i) {
      if (i) out << ' ';
      out << m.tokens[i];
    }
    out << '\n';
  }
}

inline void write_corpus(const InteractionCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_corpus(corpus, out);
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace detail {
inline long parse_index(const std::string& s, std::size_t line, long bound, const char* what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw FormatError(line, std::string("bad ") + what + " '" + s + "'");
  }
  if (used != s.size()) throw FormatError(line, std::string("bad ") + what + " '" + s + "'");
  if (v < 0 || v >= bound)
    throw FormatError(line, std::string(what) + " " + s + " out of range");
  return v;
}
}  // namespace detail

inline InteractionCorpus read_corpus(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw FormatError(1, "missing header");
  std::istringstream hdr(line);
  std::string k1, k2, k3;
  long S = -1, V = -1, M = -1;
  if (!(hdr >> k1 >> S >> k2 >> V >> k3 >> M) || k1 != "nodes" || k2 != "vocab" ||
      k3 != "messages" || S < 0 || V < 0 || M < 0)
    throw FormatError(1, "expected 'nodes S vocab V messages M'");

  InteractionCorpus corpus;
  auto next_line = [&](const char* what) {
    ++lineno;
    if (!std::getline(in, line)) throw FormatError(lineno, std::string("missing ") + what);
  };
  for (long i = 0; i < S; ++i) {
    next_line("node label");
    corpus.nodes.push_back(line);
  }
  for (long i = 0; i < V; ++i) {
    next_line("vocabulary token");
    if (line.empty()) throw FormatError(lineno, "empty token");
    corpus.vocabulary.tokens.push_back(line);
  }
  for (long i = 0; i < M; ++i) {
    next_line("message");
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1)
      fields.push_back(line.substr(start, pos - start));
    fields.push_back(line.substr(start));
    if (fields.size() != 4) throw FormatError(lineno, "expected 4 tab-separated fields");
    Message m;
    m.id = fields[0];
    m.sender = static_cast<int>(detail::parse_index(fields[1], lineno, S, "sender"));
    m.recipient = static_cast<int>(detail::parse_index(fields[2], lineno, S, "recipient"));
    if (m.sender == m.recipient) throw FormatError(lineno, "self-message");
    std::istringstream toks(fields[3]);
    for (std::string t; toks >> t;)
      m.tokens.push_back(static_cast<int>(detail::parse_index(t, lineno, V, "token id")));
    corpus.messages.push_back(std::move(m));
  }
  ++lineno;
  if (std::getline(in, line) && !line.empty()) throw FormatError(lineno, "trailing content");
  try {
    corpus.validate();
  } catch (const InconsistentState& e) {
    throw FormatError(lineno, e.what());
  }
  return corpus;
}

inline InteractionCorpus read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_corpus(in);
}

/// Stable identity of a vocabulary (FNV-1a over newline-joined tokens), hex.
inline std::string vocab_hash(const Vocabulary& vocab) {
  std::uint64_t h = fnv1a("");
  for (const auto& t : vocab.tokens) {
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

// ---------------------------------------------------------------------------
// raw inputs

namespace detail {
template <typename F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw FormatError(lineno, "expected a JSON object");
    f(obj, lineno);
  }
}

inline std::string string_field(const nlohmann::json& obj, const char* key, std::size_t line,
                                bool required = true) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw FormatError(line, std::string("missing field \"") + key + "\"");
    return {};
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw FormatError(line, std::string("field \"") + key + "\" must be a string");
}
}  // namespace detail

/// JSON-lines with "id", "sender", "recipient", "text"; unknown fields ignored.
inline std::vector<RawMessage> read_messages_jsonl(std::istream& in) {
  std::vector<RawMessage> out;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj, std::size_t line) {
    out.push_back({detail::string_field(obj, "id", line, false),
                   detail::string_field(obj, "sender", line),
                   detail::string_field(obj, "recipient", line),
                   detail::string_field(obj, "text", line)});
  });
  return out;
}

/// JSON-lines with "scene", "speaker", "text".
inline std::vector<ScriptLine> read_script_jsonl(std::istream& in) {
  std::vector<ScriptLine> out;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj, std::size_t line) {
    out.push_back({detail::string_field(obj, "scene", line),
                   detail::string_field(obj, "speaker", line),
                   detail::string_field(obj, "text", line)});
  });
  return out;
}

/// One stopword per line; blank lines skipped.
inline std::unordered_set<std::string> read_stopwords(std::istream& in) {
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace tbm
