#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hypersample/expansion.hpp"
#include "hypersample/models.hpp"
#include "hypersample/tape.hpp"

namespace hypersample {

enum class SamplerMode { adaptive, random, full };
enum class PolicyObjective { variance, trajectory_balance };

SamplerMode parse_sampler_mode(std::string_view s);
std::string_view to_string(SamplerMode m);
PolicyObjective parse_policy_objective(std::string_view s);
std::string_view to_string(PolicyObjective o);

/// Per-candidate scoring network. Input row for candidate c is
///   [ h0(c) | mean h0 over c's neighbors already in the subgraph |
///     mean h0 over the members of c's hyperedge, c included | deg(c) / max_deg ]
/// and the single output is the inclusion log-odds.
struct PolicyParams {
  ModelParams net;
};

std::size_t policy_input_dim(std::size_t feature_dim);

/// Glorot hidden layer and a zero output layer, so every initial p_i is 0.5.
PolicyParams init_policy(std::size_t feature_dim, std::size_t hidden, std::uint64_t seed);

/// Membership of pairs already placed in the subgraph, for context lookups.
class FrontierSet {
 public:
  explicit FrontierSet(std::size_t num_pairs) : rank_(num_pairs, kAbsent) {}
  void insert(PairId p) {
    if (rank_[p] == kAbsent) {
      rank_[p] = static_cast<std::uint32_t>(members_.size());
      members_.push_back(p);
    }
  }
  bool contains(PairId p) const { return rank_[p] != kAbsent; }
  const std::vector<PairId>& members() const noexcept { return members_; }

 private:
  static constexpr std::uint32_t kAbsent = 0xFFFFFFFFu;
  std::vector<std::uint32_t> rank_;
  std::vector<PairId> members_;
};

Matrix policy_inputs(const ExpandedGraph& g, const Matrix& h0, std::span<const PairId> candidates,
                     const FrontierSet& frontier);

/// Inclusion log-odds per input row.
std::vector<double> policy_logits(const PolicyParams& policy, const Matrix& inputs);

/// Inclusion probabilities p_i = logistic(logit_i), one per candidate.
std::vector<double> policy_scores(const PolicyParams& policy, const ExpandedGraph& g, const Matrix& h0,
                                  std::span<const PairId> candidates, const FrontierSet& frontier);

struct LayerSelection {
  std::vector<std::uint8_t> chosen;  // one flag per candidate
  double log_pf = 0.0;
};

/// Chooses all candidates when there are at most k, otherwise the k largest
/// logit + Gumbel keys (ties to the lower index). log_pf is the factorized
/// Bernoulli likelihood: sum of log p over chosen plus log(1-p) over rejected.
LayerSelection sample_layer(std::span<const double> logits, std::size_t k, std::uint64_t seed);
/// Deterministic variant: the k largest logits.
LayerSelection top_k_layer(std::span<const double> logits, std::size_t k);
/// Same as sample_layer with inclusion probabilities instead of logits.
LayerSelection sample_layer_from_probs(std::span<const double> probs, std::size_t k, std::uint64_t seed);

/// Uniform choice of min(k, n) of n candidates without replacement.
std::vector<std::uint8_t> random_sample_layer(std::size_t num_candidates, std::size_t k, std::uint64_t seed);

struct TrajectoryStep {
  std::vector<PairId> candidates;
  std::vector<std::uint8_t> chosen;
  Matrix inputs;                // policy inputs; empty outside adaptive mode
  std::vector<double> logits;   // empty outside adaptive mode
  double log_pf = 0.0;
};

/// One sampled computation graph seen as a sequence of per-hop states.
/// The state carries its whole history, so the state graph is a tree and
/// log P_B is identically zero.
struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::optional<double> log_reward;
  std::uint64_t root_batch = 0;

  double log_pf() const;
  double log_pb() const noexcept { return 0.0; }
};

struct SampledComputation {
  LayeredSubgraph subgraph;
  Trajectory trajectory;
};

struct SubgraphRequest {
  std::size_t layers = 2;
  std::size_t k = 8;  // nodes added per hop; 0 means unlimited
  SamplerMode mode = SamplerMode::adaptive;
  AggregationWeights weights{};
  std::uint64_t seed = 0;
  bool greedy = false;  // adaptive mode: keep the k most probable candidates
  // Adaptive mode: hop-1 step from an earlier call with the same targets and
  // policy. Its candidates, inputs and logits are reused; it must outlive the call.
  const TrajectoryStep* first_hop = nullptr;
};

/// Expands the target pairs hop by hop. At hop l the candidates are the
/// neighbors of the nodes added at hop l-1 that are not yet in the subgraph,
/// in discovery order; the sampler keeps up to k of them.
SampledComputation build_computation_subgraph(const ExpandedGraph& g, const Matrix& h0, std::span<const PairId> targets,
                                              const SubgraphRequest& req, const PolicyParams* policy);

/// R = exp(-loss / tau).
double reward(double classifier_loss, double tau);
double log_reward(double classifier_loss, double tau);

/// zeta = log R + sum log P_B - sum log P_F.
double zeta(const Trajectory& t);

/// mean((zeta_s - mean zeta)^2); needs at least two trajectories.
double variance_loss(std::span<const double> zetas);

/// (logZ + sum log P_F - log R - sum log P_B)^2.
double trajectory_balance_loss(const Trajectory& t, double log_z);

/// Differentiable policy objective over a batch of trajectories sharing one
/// root. `log_z` is only read for the trajectory-balance objective. Returns
/// the 1x1 loss.
Var policy_objective(Tape& tape, const ParamVars& policy, std::span<const Trajectory> batch, PolicyObjective objective,
                     std::optional<Var> log_z);

struct EntropyStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
  std::size_t epoch = 0;
};

/// Bernoulli entropy in nats with 0 ln 0 = 0.
double bernoulli_entropy(double p);
/// Population mean and standard deviation of the per-probability entropies.
EntropyStats entropy_stats(std::span<const double> probs);

}  // namespace hypersample
