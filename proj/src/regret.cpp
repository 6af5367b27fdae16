#include "isg/regret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "isg/rng.hpp"

namespace isg {

namespace {

double local_field(const IsingModel& model, const Assignment& x, int i) {
  double field = model.biases()[i];
  for (auto [j, k] : model.neighbors(i)) field += model.edges()[k].w * x[j];
  return field;
}

}  // namespace

PlayHistory::PlayHistory(const IsingModel& model)
    : n(model.num_nodes()),
      plus_counts(model.num_nodes(), 0),
      pair_counts(model.num_edges(), {0, 0, 0, 0}),
      has_joint(model.num_nodes() <= kMaxJointNodes) {}

void PlayHistory::record(const IsingModel& model, const Assignment& x) {
  ++rounds;
  for (int i = 0; i < n; ++i)
    if (x[i] == 1) ++plus_counts[i];
  for (int k = 0; k < model.num_edges(); ++k) {
    const Edge& e = model.edges()[k];
    int idx = 2 * (x[e.u] == 1) + (x[e.v] == 1);
    ++pair_counts[k][idx];
  }
  if (has_joint) {
    if (rounds > kMaxJointRounds) {
      has_joint = false;
      joint_counts.clear();
    } else {
      std::uint64_t key = 0;
      for (int i = 0; i < n; ++i)
        if (x[i] == 1) key |= std::uint64_t{1} << i;
      ++joint_counts[key];
    }
  }
}

Marginals PlayHistory::empirical_marginals() const {
  Marginals out;
  out.converged = true;
  out.iterations_used = rounds;
  out.p_plus.resize(n);
  for (int i = 0; i < n; ++i)
    out.p_plus[i] = rounds > 0 ? static_cast<double>(plus_counts[i]) / rounds : 0.5;
  return out;
}

double swap_stationary_plus(double s_plus, double s_minus) {
  double den = (1.0 - s_plus) + s_minus;
  return den > 0.0 ? s_minus / den : 0.5;
}

std::pair<PlayHistory, Marginals> mwu_run(const IsingModel& model, const MwuConfig& cfg,
                                          std::uint64_t seed,
                                          const std::vector<long>& checkpoints,
                                          std::vector<PlayHistory>* snapshots) {
  if (cfg.iters < 1) throw std::invalid_argument("mwu_run: iters must be >= 1");
  if (cfg.step_kind == StepKind::constant && !(cfg.eta > 0.0 && cfg.eta < 1.0))
    throw std::invalid_argument("mwu_run: constant eta must be in (0, 1)");

  const int n = model.num_nodes();
  const bool swap = cfg.regret_kind == RegretKind::swap;

  Rng rng = Rng(seed).stream("play");

  // prob[i]: probability of playing +1. For the swap variant, sub[i][a]
  // is the +1-probability of the sub-instance fed by recommendation a
  // (a = 0 for -1, a = 1 for +1); prob[i] is the stationary point of the
  // chain whose columns those strategies form.
  std::vector<double> prob(n, 0.5);
  std::vector<std::array<double, 2>> sub;  // [0] fed by rec -1, [1] by rec +1
  if (swap) sub.assign(n, {0.5, 0.5});

  PlayHistory history(model);
  Assignment x(n);
  std::size_t next_cp = 0;

  for (long t = 1; t <= cfg.iters; ++t) {
    for (int i = 0; i < n; ++i) x[i] = rng.uniform() < prob[i] ? +1 : -1;
    history.record(model, x);

    const double eta =
        cfg.step_kind == StepKind::decaying ? std::sqrt(std::log(2.0) / t) : cfg.eta;

    for (int i = 0; i < n; ++i) {
      const double field = local_field(model, x, i);
      const double r = model.payoff_range(i);
      const double pay_plus = normalize_payoff(field, r);
      const double pay_minus = normalize_payoff(-field, r);
      if (!swap) {
        double f_plus = 1.0 - eta * (1.0 - pay_plus);
        double f_minus = 1.0 - eta * (1.0 - pay_minus);
        double w_plus = prob[i] * f_plus;
        double w_minus = (1.0 - prob[i]) * f_minus;
        prob[i] = w_plus / (w_plus + w_minus);
      } else {
        double pi_plus = prob[i];
        for (int a = 0; a < 2; ++a) {
          double share = a == 1 ? pi_plus : 1.0 - pi_plus;
          double f_plus = 1.0 - eta * (1.0 - share * pay_plus);
          double f_minus = 1.0 - eta * (1.0 - share * pay_minus);
          double w_plus = sub[i][a] * f_plus;
          double w_minus = (1.0 - sub[i][a]) * f_minus;
          sub[i][a] = w_plus / (w_plus + w_minus);
        }
        prob[i] = swap_stationary_plus(sub[i][1], sub[i][0]);
      }
    }

    if (snapshots && next_cp < checkpoints.size() && t == checkpoints[next_cp]) {
      snapshots->push_back(history);
      ++next_cp;
    }
  }

  Marginals marg = history.empirical_marginals();
  return {std::move(history), std::move(marg)};
}

std::pair<PlayHistory, Marginals> regret_matching_run(const IsingModel& model, long iters,
                                                      std::uint64_t seed) {
  if (iters < 1) throw std::invalid_argument("regret_matching_run: iters must be >= 1");
  const int n = model.num_nodes();

  Rng rng(seed);
  Rng init_rng = rng.stream("init");
  Rng play_rng = rng.stream("play");

  Assignment x(n);
  for (int& s : x) s = init_rng.spin();

  // cum[i][a]: summed normalized payoff gain of having switched away
  // from action a (a = 0 for -1, a = 1 for +1) over the rounds where a
  // was played. Divided by t it is the time-averaged regret.
  std::vector<std::array<double, 2>> cum(n, {0.0, 0.0});

  PlayHistory history(model);
  for (long t = 1; t <= iters; ++t) {
    history.record(model, x);
    for (int i = 0; i < n; ++i) {
      const double field = local_field(model, x, i);
      const double r = model.payoff_range(i);
      const double played = normalize_payoff(x[i] * field, r);
      const double other = normalize_payoff(-x[i] * field, r);
      cum[i][x[i] == 1] += other - played;
    }
    if (t == iters) break;
    for (int i = 0; i < n; ++i) {
      double regret = cum[i][x[i] == 1] / static_cast<double>(t);
      double switch_p = std::clamp(regret, 0.0, 1.0);
      double p_plus = x[i] == 1 ? 1.0 - switch_p : switch_p;
      p_plus = 0.99 * p_plus + 0.01 * 0.5;
      x[i] = play_rng.uniform() < p_plus ? +1 : -1;
    }
  }

  Marginals marg = history.empirical_marginals();
  return {std::move(history), std::move(marg)};
}

RegretReport empirical_regret(const IsingModel& model, const PlayHistory& history,
                              bool normalized) {
  if (history.rounds < 1) throw std::invalid_argument("empirical_regret: empty history");
  const int n = model.num_nodes();
  const double T = static_cast<double>(history.rounds);

  // s[i][a] = sum over rounds where player i played a of the local field
  // b_i + sum_j w_ij x_j; all deviation gains follow from it.
  std::vector<std::array<double, 2>> s(n, {0.0, 0.0});
  for (int i = 0; i < n; ++i) {
    s[i][0] = model.biases()[i] * static_cast<double>(history.rounds - history.plus_counts[i]);
    s[i][1] = model.biases()[i] * static_cast<double>(history.plus_counts[i]);
  }
  for (int k = 0; k < model.num_edges(); ++k) {
    const Edge& e = model.edges()[k];
    const auto& c = history.pair_counts[k];
    // counts: [0] (-,-)  [1] (-,+)  [2] (+,-)  [3] (+,+)
    s[e.u][1] += e.w * static_cast<double>(c[3] - c[2]);
    s[e.u][0] += e.w * static_cast<double>(c[1] - c[0]);
    s[e.v][1] += e.w * static_cast<double>(c[3] - c[1]);
    s[e.v][0] += e.w * static_cast<double>(c[2] - c[0]);
  }

  RegretReport out;
  out.normalized = normalized;
  out.external.resize(n);
  out.swap_regret.resize(n);
  for (int i = 0; i < n; ++i) {
    // Gain per round of the remap a -> a' is (a' - a) * field, so the
    // conditional sums are +-2 s[i][a] / T.
    double d_minus_to_plus = 2.0 * s[i][0] / T;
    double d_plus_to_minus = -2.0 * s[i][1] / T;
    double external = std::max(d_minus_to_plus, d_plus_to_minus);
    double swap_r = std::max(0.0, d_minus_to_plus) + std::max(0.0, d_plus_to_minus);
    if (normalized) {
      double r = model.payoff_range(i);
      double scale = r > 0.0 ? 1.0 / (2.0 * r) : 0.0;
      external *= scale;
      swap_r *= scale;
    }
    out.external[i] = external;
    out.swap_regret[i] = swap_r;
  }
  out.epsilon_cce = std::max(0.0, *std::max_element(out.external.begin(), out.external.end()));
  out.epsilon_ce =
      std::max(0.0, *std::max_element(out.swap_regret.begin(), out.swap_regret.end()));
  return out;
}

CeCertificate ce_variational_certificate(const IsingModel& model, const std::vector<double>& q) {
  const int n = model.num_nodes();
  if (n > 12) throw std::invalid_argument("ce_variational_certificate: n must be <= 12");
  const std::size_t states = std::size_t{1} << n;
  if (q.size() != states)
    throw std::invalid_argument("ce_variational_certificate: q must have 2^n entries");
  double total = 0.0;
  for (double p : q) {
    if (p < 0.0) throw std::invalid_argument("ce_variational_certificate: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("ce_variational_certificate: q is not normalized");

  Assignment x(n);
  std::vector<double> psi(states);
  for (std::size_t s = 0; s < states; ++s) {
    for (int i = 0; i < n; ++i) x[i] = (s >> i) & 1 ? +1 : -1;
    psi[s] = potential(model, x);
  }
  double psi_max = *std::max_element(psi.begin(), psi.end());
  double zsum = 0.0;
  for (double v : psi) zsum += std::exp(v - psi_max);
  const double log_z = psi_max + std::log(zsum);

  CeCertificate cert;
  cert.log_z = log_z;

  double e_psi = 0.0, ent = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    e_psi += q[s] * psi[s];
    if (q[s] > 0.0) ent -= q[s] * std::log(q[s]);
  }
  cert.cross_entropy = log_z - e_psi;
  cert.entropy = ent;
  cert.kl = cert.cross_entropy - cert.entropy;

  cert.cross_entropy_rhs.resize(n);
  cert.cross_entropy_slack.resize(n);
  cert.kl_rhs.resize(n);
  cert.kl_slack.resize(n);
  cert.max_deviation_gain = -std::numeric_limits<double>::infinity();

  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    // H(delta_a q_{-i}, P) for both fixed actions, plus the deviation
    // gains of the two constant remaps, in one pass over states.
    double h_fix[2] = {0.0, 0.0};  // index: a = -1, a = +1
    double gain[2] = {0.0, 0.0};   // playing a, deviating to -a
    double h_marg = 0.0;           // H(q_{-i})
    for (std::size_t rest = 0; rest < states; ++rest) {
      if (rest & bit) continue;
      const std::size_t s_minus = rest, s_plus = rest | bit;
      const double q_minus = q[s_minus], q_plus = q[s_plus];
      const double qm = q_minus + q_plus;
      h_fix[0] += qm * (log_z - psi[s_minus]);
      h_fix[1] += qm * (log_z - psi[s_plus]);
      // M_i(a, x_{-i}) differences equal Psi differences
      gain[0] += q_minus * (psi[s_plus] - psi[s_minus]);
      gain[1] += q_plus * (psi[s_minus] - psi[s_plus]);
      if (qm > 0.0) h_marg -= qm * std::log(qm);
    }
    cert.max_deviation_gain = std::max({cert.max_deviation_gain, gain[0], gain[1]});
    cert.cross_entropy_rhs[i] = std::min(h_fix[0], h_fix[1]);
    cert.cross_entropy_slack[i] = cert.cross_entropy_rhs[i] - cert.cross_entropy;
    // min over q_i' of KL(q_i' q_{-i} || P) + H(q_i') is attained at a
    // fixed action and equals the cross-entropy minimum minus H(q_{-i}).
    double h_cond = cert.entropy - h_marg;  // H(q_{i|-i})
    cert.kl_rhs[i] = (cert.cross_entropy_rhs[i] - h_marg) - h_cond;
    cert.kl_slack[i] = cert.kl_rhs[i] - cert.kl;
  }
  cert.epsilon_ce = std::max(0.0, cert.max_deviation_gain);
  return cert;
}

double log_z_lower_bound(const IsingModel& model, const PlayHistory& history) {
  if (history.rounds < 1) throw std::invalid_argument("log_z_lower_bound: empty history");
  if (!history.has_joint)
    throw std::invalid_argument(
        "log_z_lower_bound: joint counts were dropped (run too large); refusing to approximate");
  const double T = static_cast<double>(history.rounds);
  const int n = history.n;

  Assignment x(n);
  double e_psi = 0.0, ent = 0.0;
  for (const auto& [key, count] : history.joint_counts) {
    for (int i = 0; i < n; ++i) x[i] = (key >> i) & 1 ? +1 : -1;
    const double p = static_cast<double>(count) / T;
    e_psi += p * potential(model, x);
    ent -= p * std::log(p);
  }
  return e_psi + ent;
}

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  unsigned char buf[sizeof(T)];
  auto u = static_cast<std::uint64_t>(v);
  for (std::size_t b = 0; b < sizeof(T); ++b) buf[b] = static_cast<unsigned char>(u >> (8 * b));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("history file truncated");
  std::uint64_t u = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) u |= std::uint64_t{buf[b]} << (8 * b);
  return static_cast<T>(u);
}

constexpr std::uint32_t kHistoryMagic = 0x48475349;  // "ISGH"

}  // namespace

void save_history(const PlayHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  put<std::uint32_t>(out, kHistoryMagic);
  put<std::uint32_t>(out, 1);  // version
  put<std::uint32_t>(out, static_cast<std::uint32_t>(history.n));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(history.rounds));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(history.pair_counts.size()));
  put<std::uint32_t>(out, history.has_joint ? 1 : 0);
  for (long c : history.plus_counts) put<std::uint64_t>(out, static_cast<std::uint64_t>(c));
  for (const auto& pc : history.pair_counts)
    for (long c : pc) put<std::uint64_t>(out, static_cast<std::uint64_t>(c));
  if (history.has_joint) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(history.joint_counts.size()));
    // Sorted so the file is a pure function of the history.
    std::vector<std::pair<std::uint64_t, long>> entries(history.joint_counts.begin(),
                                                        history.joint_counts.end());
    std::sort(entries.begin(), entries.end());
    for (const auto& [key, count] : entries) {
      put<std::uint64_t>(out, key);
      put<std::uint64_t>(out, static_cast<std::uint64_t>(count));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

PlayHistory load_history(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open history file: " + path);
  if (get<std::uint32_t>(in) != kHistoryMagic) throw std::runtime_error("bad history magic");
  if (get<std::uint32_t>(in) != 1) throw std::runtime_error("unsupported history version");
  PlayHistory h;
  h.n = static_cast<int>(get<std::uint32_t>(in));
  h.rounds = static_cast<long>(get<std::uint64_t>(in));
  const auto num_edges = get<std::uint32_t>(in);
  h.has_joint = get<std::uint32_t>(in) != 0;
  h.plus_counts.resize(h.n);
  for (long& c : h.plus_counts) c = static_cast<long>(get<std::uint64_t>(in));
  h.pair_counts.resize(num_edges);
  for (auto& pc : h.pair_counts)
    for (long& c : pc) c = static_cast<long>(get<std::uint64_t>(in));
  if (h.has_joint) {
    auto entries = get<std::uint64_t>(in);
    for (std::uint64_t e = 0; e < entries; ++e) {
      std::uint64_t key = get<std::uint64_t>(in);
      h.joint_counts[key] = static_cast<long>(get<std::uint64_t>(in));
    }
  }
  return h;
}

}  // namespace isg
