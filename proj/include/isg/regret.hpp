#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "isg/classic.hpp"
#include "isg/model.hpp"

namespace isg {

// Sequence of joint actions kept as running sufficient statistics:
// per-node +1 counts and, per edge, counts of the four ordered action
// pairs. For small runs the full joint-count map is retained as well;
// it is dropped automatically once n > 25 or rounds > 10^6.
struct PlayHistory {
  static constexpr int kMaxJointNodes = 25;
  static constexpr long kMaxJointRounds = 1000000;

  int n = 0;
  long rounds = 0;
  std::vector<long> plus_counts;
  // Per edge, counts indexed by 2*(u is +1) + (v is +1):
  // [0] (-,-)  [1] (-,+)  [2] (+,-)  [3] (+,+)
  std::vector<std::array<long, 4>> pair_counts;
  bool has_joint = true;
  std::unordered_map<std::uint64_t, long> joint_counts;  // bit i set <=> x_i = +1

  explicit PlayHistory(const IsingModel& model);
  PlayHistory() = default;

  void record(const IsingModel& model, const Assignment& x);
  Marginals empirical_marginals() const;
};

enum class RegretKind { external, swap };
enum class StepKind { decaying, constant };

struct MwuConfig {
  RegretKind regret_kind = RegretKind::external;
  StepKind step_kind = StepKind::decaying;  // decaying: eta_t = sqrt(ln 2 / t)
  double eta = 0.01;                        // used when step_kind == constant
  long iters = 100000;
};

// Affine map of a raw payoff onto [0, 1] given the player's payoff
// range R_i (model.payoff_range): (raw + R) / (2R). Constant-payoff
// players (R = 0) sit at 1/2. Affine per player, so it never changes
// which action maximizes a player's conditional expected payoff.
inline double normalize_payoff(double raw, double range) {
  return range > 0.0 ? (raw + range) / (2.0 * range) : 0.5;
}

// Stationary +1-probability of the two-state chain whose columns are
// the sub-instance strategies of the swap-regret reduction; s_plus and
// s_minus are the +1-probabilities played after recommendations +1 and
// -1. The degenerate chain (both states absorbing) resolves to the
// uniform fixed point.
double swap_stationary_plus(double s_plus, double s_minus);

// Multiplicative-weights play in the induced game. Every player updates
// simultaneously from the realized joint action, with payoffs affinely
// normalized to [0, 1] by the per-player range R_i. The swap-regret
// variant runs two sub-instances per player (one per recommended
// action) and plays the stationary distribution of the 2x2 chain they
// define, splitting realized payoffs back by that distribution.
//
// If `checkpoints` is given (ascending round counts), a snapshot of the
// history is appended to *snapshots after each listed round.
std::pair<PlayHistory, Marginals> mwu_run(const IsingModel& model, const MwuConfig& cfg,
                                          std::uint64_t seed,
                                          const std::vector<long>& checkpoints = {},
                                          std::vector<PlayHistory>* snapshots = nullptr);

// Regret matching adapted to inference: the probability of switching
// the previous action equals the positively-truncated time-averaged
// regret of the single possible switch (on [0,1]-normalized payoffs),
// and the suggested probability of playing +1 is damped toward 1/2:
//   p <- 0.99 p + 0.01 * 0.5.
std::pair<PlayHistory, Marginals> regret_matching_run(const IsingModel& model, long iters,
                                                      std::uint64_t seed);

struct RegretReport {
  std::vector<double> external;     // per player, best fixed action gain
  std::vector<double> swap_regret;  // per player, best action-remap gain
  double epsilon_cce = 0.0;         // max(0, max external)
  double epsilon_ce = 0.0;          // max(0, max swap)
  bool normalized = false;          // values divided by 2 R_i when set
};

// Average deviation gains of the empirical play, computed from the
// per-edge action-pair counts alone (no joint table needed).
RegretReport empirical_regret(const IsingModel& model, const PlayHistory& history,
                              bool normalized = false);

// Enumeration-checkable equilibrium certificate of an explicit joint
// distribution q over {-1,+1}^n (state bit i set <=> x_i = +1), n <= 12.
// Entropies are in nats. For any q with epsilon_ce ~ 0 the cross-entropy
// and KL inequalities below must hold with nonnegative slack.
struct CeCertificate {
  double log_z = 0.0;
  double cross_entropy = 0.0;  // H(q, P)
  double entropy = 0.0;        // H(q)
  double kl = 0.0;             // KL(q || P)
  double epsilon_ce = 0.0;     // max(0, best unconditional deviation gain)
  double max_deviation_gain = 0.0;
  // Per player i: min over fixed actions a of H(delta_a q_{-i}, P), and
  // its slack against H(q, P).
  std::vector<double> cross_entropy_rhs;
  std::vector<double> cross_entropy_slack;
  // Per player i: the same condition routed through KL divergences,
  //   KL(q||P) <= [min_{q_i'} KL(q_i' q_{-i} || P) + H(q_i')] - H(q_{i|-i}).
  std::vector<double> kl_rhs;
  std::vector<double> kl_slack;
};

CeCertificate ce_variational_certificate(const IsingModel& model, const std::vector<double>& q);

// E_{Qhat}[Psi] + H(Qhat) <= ln Z, evaluated at the empirical joint
// distribution of the history. Requires the joint-count map.
double log_z_lower_bound(const IsingModel& model, const PlayHistory& history);

// History file round-trip (little-endian binary), for the certify CLI.
void save_history(const PlayHistory& history, const std::string& path);
PlayHistory load_history(const std::string& path);

}  // namespace isg
