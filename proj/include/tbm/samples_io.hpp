#pragma once

// JSON-lines sample files: one header object (model kind, chain config,
// initial hyperparameters, held-out set, trace), then one object per
// retained sample with flattened count tensors and their dimensions.

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "sampler.hpp"

namespace tbm {

namespace detail {

inline nlohmann::json hyper_to_json(const Hyperparams& h) {
  return {{"K", h.K},
          {"T", h.T},
          {"xi0", h.xi0},
          {"alpha_lambda", h.alpha_lambda},
          {"beta_lambda", h.beta_lambda},
          {"kappa", h.kappa}};
}

inline Hyperparams hyper_from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.K = j.at("K").get<int>();
  h.T = j.at("T").get<int>();
  h.xi0 = j.at("xi0").get<double>();
  h.alpha_lambda = j.at("alpha_lambda").get<double>();
  h.beta_lambda = j.at("beta_lambda").get<double>();
  h.kappa = j.at("kappa").get<double>();
  return h;
}

inline nlohmann::json tensor_to_json(const std::vector<int>& data, std::vector<int> dims) {
  return {{"dims", std::move(dims)}, {"data", data}};
}

inline std::vector<int> tensor_from_json(const nlohmann::json& j, std::size_t line) {
  const auto dims = j.at("dims").get<std::vector<long>>();
  auto data = j.at("data").get<std::vector<int>>();
  long n = 1;
  for (long d : dims) n *= d;
  if (n != static_cast<long>(data.size())) throw FormatError(line, "tensor size mismatch");
  return data;
}

}  // namespace detail

inline void write_samples(const PosteriorSamples& ps, std::ostream& out) {
  using nlohmann::json;
  const auto& h = ps.hyper_init;
  json cfg = {{"iterations", ps.config.iterations}, {"burnin", ps.config.burnin},
              {"thin", ps.config.thin},             {"seed", ps.config.seed},
              {"anneal", ps.config.anneal},         {"mh_step", ps.config.mh_step}};
  json names = json::array();
  for (auto n : ps.config.sample_hypers) names.push_back(std::string(to_string(n)));
  cfg["sample_hypers"] = names;

  json pairs = json::array();
  for (const auto& p : ps.heldout.pairs) pairs.push_back({p.sender, p.recipient});
  json acceptance = json::object();
  for (auto n : kAllHypers) {
    const auto i = static_cast<std::size_t>(n);
    acceptance[std::string(to_string(n))] = {ps.accepted[i], ps.proposed[i]};
  }
  json header = {{"format", "tbm-samples"},
                 {"version", 1},
                 {"kind", std::string(to_string(ps.kind))},
                 {"num_nodes", ps.num_nodes},
                 {"vocab_size", ps.vocab_size},
                 {"num_groups", ps.num_groups},
                 {"vocab_hash", ps.vocab_hash},
                 {"config", cfg},
                 {"hyper_init", detail::hyper_to_json(h)},
                 {"heldout",
                  {{"kind", ps.heldout.kind},
                   {"fraction", ps.heldout.fraction},
                   {"seed", ps.heldout.seed},
                   {"message_ids", ps.heldout.message_ids},
                   {"pairs", pairs}}},
                 {"acceptance", acceptance},
                 {"trace", ps.trace},
                 {"num_samples", ps.samples.size()}};
  out << header.dump() << '\n';

  for (const auto& s : ps.samples) {
    const int K = s.hyper.K, T = s.hyper.T;
    json line = {{"iteration", s.iteration},
                 {"c", s.c},
                 {"hyper", detail::hyper_to_json(s.hyper)},
                 {"joint_log_prob", s.joint_log_prob},
                 {"M_tw", detail::tensor_to_json(s.M_tw, {T, ps.vocab_size})}};
    if (!s.N_blk.empty()) {
      line["N_blk"] = detail::tensor_to_json(s.N_blk, {K, K, T});
      line["P"] = detail::tensor_to_json(s.P_blk, {K, K});
    }
    if (!s.group_topic.empty())
      line["group_topic"] = detail::tensor_to_json(s.group_topic, {ps.num_groups, T});
    out << line.dump() << '\n';
  }
}

inline void write_samples(const PosteriorSamples& ps, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_samples(ps, out);
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline PosteriorSamples read_samples(std::istream& in) {
  using nlohmann::json;
  PosteriorSamples ps;
  std::string line;
  std::size_t lineno = 1;
  auto parse = [&](std::size_t ln) {
    try {
      return json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(ln, std::string("malformed JSON: ") + e.what());
    }
  };
  if (!std::getline(in, line)) throw FormatError(1, "missing header");
  try {
    const json hdr = parse(1);
    if (hdr.value("format", "") != "tbm-samples") throw FormatError(1, "not a samples file");
    ps.kind = parse_model_kind(hdr.at("kind").get<std::string>());
    ps.num_nodes = hdr.at("num_nodes").get<int>();
    ps.vocab_size = hdr.at("vocab_size").get<int>();
    ps.num_groups = hdr.at("num_groups").get<int>();
    ps.vocab_hash = hdr.at("vocab_hash").get<std::string>();
    const auto& cfg = hdr.at("config");
    ps.config.iterations = cfg.at("iterations").get<int>();
    ps.config.burnin = cfg.at("burnin").get<int>();
    ps.config.thin = cfg.at("thin").get<int>();
    ps.config.seed = cfg.at("seed").get<std::uint64_t>();
    ps.config.anneal = cfg.at("anneal").get<bool>();
    ps.config.mh_step = cfg.at("mh_step").get<double>();
    ps.config.sample_hypers.clear();
    for (const auto& n : cfg.at("sample_hypers"))
      ps.config.sample_hypers.push_back(parse_hyper_name(n.get<std::string>()));
    ps.hyper_init = detail::hyper_from_json(hdr.at("hyper_init"));
    const auto& ho = hdr.at("heldout");
    ps.heldout.kind = ho.at("kind").get<std::string>();
    ps.heldout.fraction = ho.at("fraction").get<double>();
    ps.heldout.seed = ho.at("seed").get<std::uint64_t>();
    ps.heldout.message_ids = ho.at("message_ids").get<std::vector<std::string>>();
    for (const auto& p : ho.at("pairs"))
      ps.heldout.pairs.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    for (auto n : kAllHypers) {
      const auto& a = hdr.at("acceptance").at(std::string(to_string(n)));
      ps.accepted[static_cast<std::size_t>(n)] = a.at(0).get<int>();
      ps.proposed[static_cast<std::size_t>(n)] = a.at(1).get<int>();
    }
    ps.trace = hdr.at("trace").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError(1, std::string("bad header: ") + e.what());
  } catch (const InvalidParam& e) {
    throw FormatError(1, e.what());
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse(lineno);
    try {
      Sample s;
      s.iteration = j.at("iteration").get<int>();
      s.c = j.at("c").get<std::vector<int>>();
      s.hyper = detail::hyper_from_json(j.at("hyper"));
      s.joint_log_prob = j.at("joint_log_prob").get<double>();
      s.M_tw = detail::tensor_from_json(j.at("M_tw"), lineno);
      if (j.contains("N_blk")) {
        s.N_blk = detail::tensor_from_json(j.at("N_blk"), lineno);
        s.P_blk = detail::tensor_from_json(j.at("P"), lineno);
      }
      if (j.contains("group_topic"))
        s.group_topic = detail::tensor_from_json(j.at("group_topic"), lineno);
      ps.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw FormatError(lineno, std::string("bad sample: ") + e.what());
    }
  }
  return ps;
}

inline PosteriorSamples read_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_samples(in);
}

}  // namespace tbm
