#include "hypersample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hypersample/ops.hpp"
#include "hypersample/rng.hpp"

namespace hypersample {

SamplerMode parse_sampler_mode(std::string_view s) {
  if (s == "adaptive") return SamplerMode::adaptive;
  if (s == "random") return SamplerMode::random;
  if (s == "full") return SamplerMode::full;
  throw ValidationError("unknown sampler mode \"" + std::string(s) + "\" (expected adaptive, random or full)");
}

std::string_view to_string(SamplerMode m) {
  switch (m) {
    case SamplerMode::adaptive: return "adaptive";
    case SamplerMode::random: return "random";
    case SamplerMode::full: return "full";
  }
  return "?";
}

PolicyObjective parse_policy_objective(std::string_view s) {
  if (s == "variance") return PolicyObjective::variance;
  if (s == "trajectory_balance") return PolicyObjective::trajectory_balance;
  throw ValidationError("unknown policy objective \"" + std::string(s) + "\" (expected variance or trajectory_balance)");
}

std::string_view to_string(PolicyObjective o) {
  return o == PolicyObjective::variance ? "variance" : "trajectory_balance";
}

std::size_t policy_input_dim(std::size_t feature_dim) { return 3 * feature_dim + 1; }

PolicyParams init_policy(std::size_t feature_dim, std::size_t hidden, std::uint64_t seed) {
  const std::size_t schema[] = {policy_input_dim(feature_dim), hidden, 1};
  PolicyParams p{init_glorot(schema, derive_seed(seed, {0x9011C7}))};
  for (double& w : p.net.layers.back().weight.values()) w = 0.0;
  return p;
}

Matrix policy_inputs(const ExpandedGraph& g, const Matrix& h0, std::span<const PairId> candidates,
                     const FrontierSet& frontier) {
  const std::size_t d = h0.cols();
  const double max_deg = std::max<double>(1.0, static_cast<double>(g.max_degree()));
  Matrix in(candidates.size(), policy_input_dim(d));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const PairId c = candidates[i];
    if (c >= h0.rows()) throw ShapeError("policy_inputs: missing feature row for pair " + std::to_string(c));
    auto row = in.row(i);
    const auto own = h0.row(c);
    std::copy(own.begin(), own.end(), row.begin());
    std::size_t count = 0;
    for (PairId q : g.neighbors(c)) {
      if (!frontier.contains(q)) continue;
      const auto f = h0.row(q);
      for (std::size_t j = 0; j < d; ++j) row[d + j] += f[j];
      ++count;
    }
    if (count > 0)
      for (std::size_t j = 0; j < d; ++j) row[d + j] /= static_cast<double>(count);
    const auto members = g.same_edge_neighbors(c);
    for (std::size_t j = 0; j < d; ++j) row[2 * d + j] = own[j];
    for (PairId q : members) {
      const auto f = h0.row(q);
      for (std::size_t j = 0; j < d; ++j) row[2 * d + j] += f[j];
    }
    for (std::size_t j = 0; j < d; ++j) row[2 * d + j] /= static_cast<double>(members.size() + 1);
    row[3 * d] = static_cast<double>(g.degree(c)) / max_deg;
  }
  return in;
}

std::vector<double> policy_logits(const PolicyParams& policy, const Matrix& inputs) {
  const Matrix out = mlp_forward(policy.net, inputs);
  return {out.values().begin(), out.values().end()};
}

std::vector<double> policy_scores(const PolicyParams& policy, const ExpandedGraph& g, const Matrix& h0,
                                  std::span<const PairId> candidates, const FrontierSet& frontier) {
  if (candidates.empty()) throw ValidationError("policy_scores: empty candidate list");
  std::vector<double> p = policy_logits(policy, policy_inputs(g, h0, candidates, frontier));
  for (double& v : p) v = ops::sigmoid(v);
  return p;
}

namespace {

// Marks the k largest keys (ties to the lower index) and scores the choice
// under the factorized Bernoulli model of `logits`.
LayerSelection select_by_keys(std::span<const double> logits, std::span<const double> keys, std::size_t k) {
  if (k == 0) throw ValidationError("sample_layer: k must be >= 1");
  const std::size_t n = logits.size();
  LayerSelection sel;
  sel.chosen.assign(n, 0);
  if (n <= k) {
    std::fill(sel.chosen.begin(), sel.chosen.end(), 1);
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return keys[a] > keys[b] || (keys[a] == keys[b] && a < b); });
    for (std::size_t i = 0; i < k; ++i) sel.chosen[order[i]] = 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    sel.log_pf += sel.chosen[i] ? ops::log_sigmoid(logits[i]) : ops::log_one_minus_sigmoid(logits[i]);
  return sel;
}

}  // namespace

LayerSelection sample_layer(std::span<const double> logits, std::size_t k, std::uint64_t seed) {
  std::vector<double> keys(logits.size());
  if (logits.size() > k) {
    Rng rng(seed);
    for (std::size_t i = 0; i < logits.size(); ++i) keys[i] = logits[i] - std::log(-std::log(uniform_open01(rng)));
  }
  return select_by_keys(logits, keys, k);
}

LayerSelection top_k_layer(std::span<const double> logits, std::size_t k) { return select_by_keys(logits, logits, k); }

LayerSelection sample_layer_from_probs(std::span<const double> probs, std::size_t k, std::uint64_t seed) {
  std::vector<double> logits(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0 && probs[i] < 1.0)) throw ValidationError("inclusion probabilities must lie in (0, 1)");
    logits[i] = std::log(probs[i]) - std::log1p(-probs[i]);
  }
  return sample_layer(logits, k, seed);
}

std::vector<std::uint8_t> random_sample_layer(std::size_t num_candidates, std::size_t k, std::uint64_t seed) {
  std::vector<std::uint8_t> chosen(num_candidates, 0);
  if (num_candidates <= k) {
    std::fill(chosen.begin(), chosen.end(), 1);
    return chosen;
  }
  Rng rng(seed);
  std::vector<std::size_t> idx(num_candidates);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, num_candidates - i));
    std::swap(idx[i], idx[j]);
    chosen[idx[i]] = 1;
  }
  return chosen;
}

double Trajectory::log_pf() const {
  double s = 0.0;
  for (const auto& st : steps) s += st.log_pf;
  return s;
}

SampledComputation build_computation_subgraph(const ExpandedGraph& g, const Matrix& h0, std::span<const PairId> targets,
                                              const SubgraphRequest& req, const PolicyParams* policy) {
  if (targets.empty()) throw ValidationError("build_computation_subgraph: no targets");
  if (req.layers == 0) throw ValidationError("build_computation_subgraph: layers must be >= 1");
  if (req.mode == SamplerMode::adaptive && policy == nullptr) {
    throw ValidationError("adaptive sampling needs a policy");
  }

  SampledComputation out;
  FrontierSet in_graph(g.num_pairs());
  std::vector<PairId> nodes;
  for (PairId p : targets) {
    if (p >= g.num_pairs()) throw ValidationError("target pair out of range");
    if (!in_graph.contains(p)) {
      in_graph.insert(p);
      nodes.push_back(p);
    }
  }
  std::vector<std::size_t> hop_sizes{nodes.size()};
  std::size_t layer_begin = 0;
  std::vector<std::uint32_t> candidate_mark(g.num_pairs(), 0);

  const bool unlimited = req.k == 0 || req.mode == SamplerMode::full;
  for (std::size_t hop = 1; hop <= req.layers; ++hop) {
    TrajectoryStep step;
    // Discovery order: newest-hop order, then stored neighbor order.
    for (std::size_t i = layer_begin; i < nodes.size(); ++i) {
      for (PairId q : g.neighbors(nodes[i])) {
        if (in_graph.contains(q) || candidate_mark[q] == hop) continue;
        candidate_mark[q] = static_cast<std::uint32_t>(hop);
        step.candidates.push_back(q);
      }
    }

    const std::size_t n = step.candidates.size();
    const std::uint64_t hop_seed = derive_seed(req.seed, {hop});
    if (n == 0) {
      // nothing to add
    } else if (unlimited || n <= req.k) {
      step.chosen.assign(n, 1);
    } else if (req.mode == SamplerMode::random) {
      step.chosen = random_sample_layer(n, req.k, hop_seed);
    }
    if (req.mode == SamplerMode::adaptive && n > 0) {
      if (hop == 1 && req.first_hop != nullptr) {
        if (req.first_hop->candidates != step.candidates) {
          throw ValidationError("first_hop was scored for different targets");
        }
        step.inputs = req.first_hop->inputs;
        step.logits = req.first_hop->logits;
      } else {
        step.inputs = policy_inputs(g, h0, step.candidates, in_graph);
        step.logits = policy_logits(*policy, step.inputs);
      }
      const std::size_t budget = unlimited ? n : req.k;
      LayerSelection sel = req.greedy ? top_k_layer(step.logits, budget) : sample_layer(step.logits, budget, hop_seed);
      step.chosen = std::move(sel.chosen);
      step.log_pf = sel.log_pf;
    }

    layer_begin = nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!step.chosen[i]) continue;
      nodes.push_back(step.candidates[i]);
      in_graph.insert(step.candidates[i]);
    }
    hop_sizes.push_back(nodes.size());
    out.trajectory.steps.push_back(std::move(step));
  }

  out.subgraph = assemble_subgraph(g, std::move(nodes), std::move(hop_sizes), req.weights);
  return out;
}

double reward(double classifier_loss, double tau) { return std::exp(log_reward(classifier_loss, tau)); }

double log_reward(double classifier_loss, double tau) {
  if (!(tau > 0.0)) throw ValidationError("reward temperature tau must be > 0");
  return -classifier_loss / tau;
}

double zeta(const Trajectory& t) {
  if (!t.log_reward) throw ValidationError("zeta: trajectory has no reward");
  return *t.log_reward + t.log_pb() - t.log_pf();
}

double variance_loss(std::span<const double> zetas) {
  if (zetas.size() < 2) throw ValidationError("variance_loss needs at least two trajectories");
  double mean = 0.0;
  for (double z : zetas) mean += z;
  mean /= static_cast<double>(zetas.size());
  double s = 0.0;
  for (double z : zetas) s += (z - mean) * (z - mean);
  return s / static_cast<double>(zetas.size());
}

double trajectory_balance_loss(const Trajectory& t, double log_z) {
  if (!t.log_reward) throw ValidationError("trajectory_balance_loss: trajectory has no reward");
  const double r = log_z + t.log_pf() - *t.log_reward - t.log_pb();
  return r * r;
}

Var policy_objective(Tape& tape, const ParamVars& policy, std::span<const Trajectory> batch, PolicyObjective objective,
                     std::optional<Var> log_z) {
  if (objective == PolicyObjective::variance && batch.size() < 2) {
    throw ValidationError("variance objective needs at least two trajectories");
  }
  if (objective == PolicyObjective::trajectory_balance && !log_z) {
    throw ValidationError("trajectory-balance objective needs a logZ parameter");
  }
  std::size_t rows = 0, cols = 0;
  for (const auto& tr : batch) {
    if (!tr.log_reward) throw ValidationError("policy_objective: trajectory has no reward");
    for (const auto& st : tr.steps) {
      rows += st.inputs.rows();
      if (st.inputs.rows() > 0) cols = st.inputs.cols();
    }
  }
  Matrix log_r(batch.size(), 1);
  for (std::size_t s = 0; s < batch.size(); ++s) log_r(s, 0) = *batch[s].log_reward;

  Var log_pf;
  if (rows == 0) {
    log_pf = tape.constant(Matrix(batch.size(), 1));
  } else {
    // Trajectories of one root batch share their hop-1 inputs, so identical
    // blocks are scored once and their logits gathered back per row.
    std::vector<const Matrix*> unique;
    std::vector<std::size_t> unique_offset;
    std::size_t unique_rows = 0;
    SparseRows gather;
    std::vector<std::uint8_t> chosen;
    std::vector<std::uint32_t> segment;
    chosen.reserve(rows);
    segment.reserve(rows);
    for (std::size_t s = 0; s < batch.size(); ++s) {
      for (const auto& st : batch[s].steps) {
        if (st.inputs.rows() == 0) continue;
        std::size_t u = 0;
        while (u < unique.size() && !(unique[u]->rows() == st.inputs.rows() &&
                                      std::equal(st.inputs.values().begin(), st.inputs.values().end(),
                                                 unique[u]->values().begin())))
          ++u;
        if (u == unique.size()) {
          unique.push_back(&st.inputs);
          unique_offset.push_back(unique_rows);
          unique_rows += st.inputs.rows();
        }
        for (std::size_t i = 0; i < st.inputs.rows(); ++i) {
          gather.push(static_cast<std::uint32_t>(unique_offset[u] + i), 1.0);
          gather.finish_row();
        }
        chosen.insert(chosen.end(), st.chosen.begin(), st.chosen.end());
        segment.insert(segment.end(), st.inputs.rows(), static_cast<std::uint32_t>(s));
      }
    }
    gather.num_cols = unique_rows;
    Matrix inputs(unique_rows, cols);
    for (std::size_t u = 0; u < unique.size(); ++u)
      std::copy(unique[u]->values().begin(), unique[u]->values().end(), inputs.data() + unique_offset[u] * cols);
    const Var unique_logits = mlp_forward(tape, policy, tape.constant(std::move(inputs)));
    const Var logits = ops::sparse_neighbor_aggregate(tape, unique_logits, std::move(gather));
    log_pf = ops::bernoulli_log_prob(tape, logits, chosen, segment, batch.size());
  }

  if (objective == PolicyObjective::variance) {
    // zeta_s = log R_s - log P_F(s); log P_B = 0.
    return ops::variance(tape, ops::add_constant(tape, ops::scale(tape, log_pf, -1.0), log_r));
  }
  Matrix neg_log_r = log_r;
  for (double& v : neg_log_r.values()) v = -v;
  const Var ones = tape.constant(Matrix(batch.size(), 1, 1.0));
  const Var residual = ops::add_constant(tape, ops::add(tape, ops::matmul(tape, ones, *log_z), log_pf), neg_log_r);
  return ops::mean_square(tape, residual);
}

double bernoulli_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

EntropyStats entropy_stats(std::span<const double> probs) {
  EntropyStats s;
  s.count = probs.size();
  if (probs.empty()) return s;
  std::vector<double> h(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) h[i] = bernoulli_entropy(probs[i]);
  for (double v : h) s.mean += v;
  s.mean /= static_cast<double>(h.size());
  double var = 0.0;
  for (double v : h) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(h.size()));
  return s;
}

}  // namespace hypersample
