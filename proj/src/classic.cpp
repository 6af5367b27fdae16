#include "isg/classic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "isg/rng.hpp"

namespace isg {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Messages feed logarithms; keep them away from exactly 0 and 1.
constexpr double kMsgFloor = 1e-15;

double clamp_msg(double p) { return std::min(1.0 - kMsgFloor, std::max(kMsgFloor, p)); }

double lse2(double a, double b) {
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Directed messages stored as probabilities of +1:
// msg[2k] = edges[k].u -> edges[k].v, msg[2k+1] = the reverse.
struct MsgView {
  const IsingModel& model;
  const std::vector<double>& msg;
  double incoming(int j, int edge_id) const {  // message j -> other endpoint
    return msg[2 * edge_id + (model.edges()[edge_id].u == j ? 0 : 1)];
  }
};

// Plain sum-product update for message u -> v across edge k:
//   m(x_v) ~ sum_{x_u} exp(b_u x_u + w x_u x_v) prod_{j in N(u)\v} m_{j->u}(x_u)
double bp_propose(const MsgView& in, int k, bool reverse) {
  const Edge& e = in.model.edges()[k];
  int from = reverse ? e.v : e.u;
  int to = reverse ? e.u : e.v;
  double a_plus = in.model.biases()[from];
  double a_minus = -in.model.biases()[from];
  for (auto [j, ke] : in.model.neighbors(from)) {
    if (j == to) continue;
    double p = in.incoming(j, ke);
    a_plus += std::log(p);
    a_minus += std::log1p(-p);
  }
  double l_plus = lse2(a_plus + e.w, a_minus - e.w);
  double l_minus = lse2(a_plus - e.w, a_minus + e.w);
  return 1.0 / (1.0 + std::exp(l_minus - l_plus));
}

double bp_belief(const MsgView& in, int i) {
  double l_plus = in.model.biases()[i];
  double l_minus = -in.model.biases()[i];
  for (auto [j, ke] : in.model.neighbors(i)) {
    double p = in.incoming(j, ke);
    l_plus += std::log(p);
    l_minus += std::log1p(-p);
  }
  return 1.0 / (1.0 + std::exp(l_minus - l_plus));
}

// Tree-reweighted update with one constant edge-appearance probability:
// the pairwise exponent is scaled by 1/rho, incoming messages enter with
// exponent rho, and the opposite message on the updated edge with
// exponent rho - 1.
double trw_propose(const MsgView& in, double rho, int k, bool reverse) {
  const Edge& e = in.model.edges()[k];
  int from = reverse ? e.v : e.u;
  int to = reverse ? e.u : e.v;
  double a_plus = in.model.biases()[from];
  double a_minus = -in.model.biases()[from];
  for (auto [j, ke] : in.model.neighbors(from)) {
    if (j == to) continue;
    double p = in.incoming(j, ke);
    a_plus += rho * std::log(p);
    a_minus += rho * std::log1p(-p);
  }
  {
    double p = in.msg[2 * k + (reverse ? 0 : 1)];  // message to -> from
    a_plus += (rho - 1.0) * std::log(p);
    a_minus += (rho - 1.0) * std::log1p(-p);
  }
  const double we = e.w / rho;
  double l_plus = lse2(a_plus + we, a_minus - we);
  double l_minus = lse2(a_plus - we, a_minus + we);
  return 1.0 / (1.0 + std::exp(l_minus - l_plus));
}

double trw_belief(const MsgView& in, double rho, int i) {
  double l_plus = in.model.biases()[i];
  double l_minus = -in.model.biases()[i];
  for (auto [j, ke] : in.model.neighbors(i)) {
    double p = in.incoming(j, ke);
    l_plus += rho * std::log(p);
    l_minus += rho * std::log1p(-p);
  }
  return 1.0 / (1.0 + std::exp(l_minus - l_plus));
}

// Simultaneous double-buffered rounds with damped smoothing
//   new = damping * old + (1 - damping) * proposed
// and convergence on the max absolute message change.
void validate_spec(const IterationSpec& spec) {
  if (spec.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (spec.tolerance < 0.0) throw std::invalid_argument("tolerance must be nonnegative");
  if (spec.damping < 0.0 || spec.damping > 1.0)
    throw std::invalid_argument("damping must be in [0, 1]");
}

Marginals run_rounds(const IsingModel& model, const IterationSpec& spec, std::uint64_t seed,
                     MessageTrace* trace, const std::vector<double>* init,
                     const std::function<double(const MsgView&, int, bool)>& propose,
                     const std::function<double(const MsgView&, int)>& belief) {
  validate_spec(spec);
  const int n = model.num_nodes();
  const int m = model.num_edges();

  std::vector<double> msg(2 * static_cast<std::size_t>(m));
  if (init) {
    if (init->size() != msg.size())
      throw std::invalid_argument("message init has wrong length");
    msg = *init;
    for (double& p : msg) p = clamp_msg(p);
  } else {
    Rng rng = Rng(seed).stream("messages");
    for (double& p : msg) p = 0.5 + rng.uniform(-1e-3, 1e-3);
  }

  Marginals out;
  out.converged = (m == 0);
  std::vector<double> next(msg.size());
  long it = 0;
  for (; it < spec.max_iters && m > 0; ++it) {
    MsgView view{model, msg};
    double delta = 0.0;
    for (int k = 0; k < m; ++k) {
      for (int dir = 0; dir < 2; ++dir) {
        double prop = clamp_msg(propose(view, k, dir == 1));
        double updated = spec.damping * msg[2 * k + dir] + (1.0 - spec.damping) * prop;
        delta = std::max(delta, std::abs(updated - msg[2 * k + dir]));
        next[2 * k + dir] = updated;
      }
    }
    msg.swap(next);
    if (trace) trace->rounds.push_back(msg);
    out.final_delta = delta;
    if (delta <= spec.tolerance) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations_used = it;

  MsgView view{model, msg};
  out.p_plus.resize(n);
  for (int i = 0; i < n; ++i) out.p_plus[i] = belief(view, i);
  return out;
}

}  // namespace

Marginals baseline(const IsingModel& model) {
  Marginals out;
  out.p_plus.assign(model.num_nodes(), 0.5);
  out.converged = true;
  return out;
}

Marginals mean_field(const IsingModel& model, const IterationSpec& spec, std::uint64_t seed,
                     const std::vector<double>* init) {
  validate_spec(spec);
  const int n = model.num_nodes();
  std::vector<double> q(n);
  if (init) {
    if (static_cast<int>(init->size()) != n)
      throw std::invalid_argument("mean_field init has wrong length");
    q = *init;
  } else {
    Rng rng = Rng(seed).stream("init");
    for (double& v : q) v = rng.uniform();
  }

  Marginals out;
  out.converged = false;
  long it = 0;
  for (; it < spec.max_iters; ++it) {
    double delta = 0.0;
    for (int i = 0; i < n; ++i) {
      double field = model.biases()[i];
      for (auto [j, k] : model.neighbors(i)) field += model.edges()[k].w * (2.0 * q[j] - 1.0);
      double updated = sigmoid(2.0 * field);
      delta = std::max(delta, std::abs(updated - q[i]));
      q[i] = updated;
    }
    out.final_delta = delta;
    if (delta <= spec.tolerance) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations_used = it;
  out.p_plus = std::move(q);
  return out;
}

Marginals belief_prop(const IsingModel& model, const IterationSpec& spec, std::uint64_t seed,
                      MessageTrace* trace, const std::vector<double>* init) {
  return run_rounds(
      model, spec, seed, trace, init,
      [](const MsgView& v, int k, bool rev) { return bp_propose(v, k, rev); },
      [](const MsgView& v, int i) { return bp_belief(v, i); });
}

Marginals trw(const IsingModel& model, double rho, const IterationSpec& spec, std::uint64_t seed,
              MessageTrace* trace, const std::vector<double>* init) {
  if (!(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("trw: rho must be in (0, 1]");
  return run_rounds(
      model, spec, seed, trace, init,
      [rho](const MsgView& v, int k, bool rev) { return trw_propose(v, rho, k, rev); },
      [rho](const MsgView& v, int i) { return trw_belief(v, rho, i); });
}

Marginals gibbs(const IsingModel& model, long iters, double burn_in_fraction, std::uint64_t seed,
                const Assignment* init) {
  if (iters < 1) throw std::invalid_argument("gibbs: iters must be >= 1");
  if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
    throw std::invalid_argument("gibbs: burn_in_fraction must be in [0, 1)");
  const int n = model.num_nodes();

  Rng rng(seed);
  Rng init_rng = rng.stream("init");
  Rng sweep_rng = rng.stream("sweeps");

  Assignment x(n);
  if (init) {
    validate_assignment(model, *init);
    x = *init;
  } else {
    for (int& s : x) s = init_rng.spin();
  }

  const long burn = static_cast<long>(static_cast<double>(iters) * burn_in_fraction);
  std::vector<long> plus(n, 0);
  for (long t = 0; t < iters; ++t) {
    for (int i = 0; i < n; ++i) {
      double field = model.biases()[i];
      for (auto [j, k] : model.neighbors(i)) field += model.edges()[k].w * x[j];
      x[i] = sweep_rng.uniform() < sigmoid(2.0 * field) ? +1 : -1;
    }
    if (t >= burn) {
      for (int i = 0; i < n; ++i)
        if (x[i] == 1) ++plus[i];
    }
  }

  Marginals out;
  out.converged = true;
  out.iterations_used = iters;
  const long kept = iters - burn;
  out.p_plus.resize(n);
  for (int i = 0; i < n; ++i)
    out.p_plus[i] = static_cast<double>(plus[i]) / static_cast<double>(kept);
  return out;
}

}  // namespace isg
