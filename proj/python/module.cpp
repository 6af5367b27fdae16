#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "isg/classic.hpp"
#include "isg/exact.hpp"
#include "isg/experiment.hpp"
#include "isg/fp.hpp"
#include "isg/mnist.hpp"
#include "isg/model_io.hpp"
#include "isg/regret.hpp"
#include "isg/stats.hpp"

namespace py = pybind11;
using namespace isg;

namespace {

ModelClass make_class(const std::string& name, double w, double q) {
  if (name == "mixed") return MixedClass{w};
  if (name == "attractive") return AttractiveClass{w};
  if (name == "sign") return SignProbClass{w, q};
  throw std::invalid_argument("unknown model class: " + name);
}

MwuConfig make_mwu_config(const std::string& regret, const std::string& step, double eta,
                          long iters) {
  MwuConfig cfg;
  if (regret == "external")
    cfg.regret_kind = RegretKind::external;
  else if (regret == "swap")
    cfg.regret_kind = RegretKind::swap;
  else
    throw std::invalid_argument("regret must be 'external' or 'swap'");
  if (step == "decaying")
    cfg.step_kind = StepKind::decaying;
  else if (step == "constant")
    cfg.step_kind = StepKind::constant;
  else
    throw std::invalid_argument("step must be 'decaying' or 'constant'");
  cfg.eta = eta;
  cfg.iters = iters;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Approximate marginal inference in Ising models via game dynamics";

  py::class_<Edge>(m, "Edge")
      .def(py::init<int, int, double>(), py::arg("u"), py::arg("v"), py::arg("w"))
      .def_readonly("u", &Edge::u)
      .def_readonly("v", &Edge::v)
      .def_readonly("w", &Edge::w);

  py::class_<IsingModel>(m, "IsingModel")
      .def(py::init([](int n, const std::vector<std::tuple<int, int, double>>& edges,
                       const std::vector<double>& biases, std::optional<int> grid_d) {
             std::vector<Edge> es;
             es.reserve(edges.size());
             for (const auto& [u, v, w] : edges) es.push_back({u, v, w});
             return IsingModel(n, std::move(es), biases, grid_d);
           }),
           py::arg("n"), py::arg("edges"), py::arg("biases"), py::arg("grid_d") = std::nullopt)
      .def_property_readonly("n", &IsingModel::num_nodes)
      .def_property_readonly("num_edges", &IsingModel::num_edges)
      .def_property_readonly("grid_d", &IsingModel::grid_dim)
      .def_property_readonly("biases", &IsingModel::biases)
      .def_property_readonly(
          "edges",
          [](const IsingModel& mdl) {
            std::vector<std::tuple<int, int, double>> out;
            for (const Edge& e : mdl.edges()) out.emplace_back(e.u, e.v, e.w);
            return out;
          })
      .def("payoff_range", &IsingModel::payoff_range)
      .def("is_connected", &IsingModel::is_connected);

  py::class_<SpanningTree>(m, "SpanningTree")
      .def(py::init([](std::vector<int> ids) { return SpanningTree{std::move(ids)}; }))
      .def_readonly("edge_ids", &SpanningTree::edge_ids);

  py::class_<Marginals>(m, "Marginals")
      .def_readonly("p_plus", &Marginals::p_plus)
      .def_readonly("converged", &Marginals::converged)
      .def_readonly("iterations_used", &Marginals::iterations_used)
      .def_readonly("final_delta", &Marginals::final_delta);

  py::class_<ExactResult>(m, "ExactResult")
      .def_readonly("marginals", &ExactResult::marginals)
      .def_readonly("log_z", &ExactResult::log_z);

  py::class_<PlayHistory>(m, "PlayHistory")
      .def_readonly("rounds", &PlayHistory::rounds)
      .def_readonly("plus_counts", &PlayHistory::plus_counts)
      .def_readonly("has_joint", &PlayHistory::has_joint);

  py::class_<RegretReport>(m, "RegretReport")
      .def_readonly("external", &RegretReport::external)
      .def_readonly("swap_regret", &RegretReport::swap_regret)
      .def_readonly("epsilon_cce", &RegretReport::epsilon_cce)
      .def_readonly("epsilon_ce", &RegretReport::epsilon_ce)
      .def_readonly("normalized", &RegretReport::normalized);

  py::class_<CeCertificate>(m, "CeCertificate")
      .def_readonly("log_z", &CeCertificate::log_z)
      .def_readonly("cross_entropy", &CeCertificate::cross_entropy)
      .def_readonly("entropy", &CeCertificate::entropy)
      .def_readonly("kl", &CeCertificate::kl)
      .def_readonly("epsilon_ce", &CeCertificate::epsilon_ce)
      .def_readonly("cross_entropy_slack", &CeCertificate::cross_entropy_slack)
      .def_readonly("kl_slack", &CeCertificate::kl_slack);

  py::class_<FpState>(m, "FpState")
      .def_readonly("rounds", &FpState::rounds)
      .def_readonly("mu_hat", &FpState::mu_hat)
      .def_readonly("s_draws", &FpState::s_draws)
      .def_readonly("assignments", &FpState::assignments);

  m.def("build_grid", [](int d) {
    std::vector<std::tuple<int, int, double>> out;
    for (const Edge& e : build_grid(d)) out.emplace_back(e.u, e.v, e.w);
    return out;
  });
  m.def(
      "generate_model",
      [](int d, const std::string& cls, double w, double q, std::uint64_t seed) {
        return generate_model(d, make_class(cls, w, q), seed);
      },
      py::arg("d"), py::arg("model_class"), py::arg("w"), py::arg("q") = 0.5, py::arg("seed") = 0);
  m.def("load_model", &load_model);
  m.def("save_model", &save_model);
  m.def("potential", &potential);
  m.def("restricted_potential", &restricted_potential);
  m.def("local_payoff", &local_payoff);

  m.def("brute_force", &brute_force, py::arg("model"), py::arg("max_nodes") = 25);
  m.def("transfer_matrix", &transfer_matrix, py::arg("model"), py::arg("max_dim") = 16);
  m.def("exact_auto", &exact_auto);

  m.def("baseline", &baseline);
  m.def(
      "mean_field",
      [](const IsingModel& mdl, long max_iters, double tol, std::uint64_t seed) {
        return mean_field(mdl, {max_iters, tol, 0.0}, seed);
      },
      py::arg("model"), py::arg("max_iters") = 1000000, py::arg("tol") = 1e-5,
      py::arg("seed") = 0);
  m.def(
      "belief_prop",
      [](const IsingModel& mdl, long max_iters, double tol, double damping, std::uint64_t seed) {
        return belief_prop(mdl, {max_iters, tol, damping}, seed);
      },
      py::arg("model"), py::arg("max_iters") = 100000, py::arg("tol") = 1e-7,
      py::arg("damping") = 0.5, py::arg("seed") = 0);
  m.def(
      "trw",
      [](const IsingModel& mdl, double rho, long max_iters, double tol, double damping,
         std::uint64_t seed) { return trw(mdl, rho, {max_iters, tol, damping}, seed); },
      py::arg("model"), py::arg("rho") = 0.55, py::arg("max_iters") = 100000,
      py::arg("tol") = 1e-7, py::arg("damping") = 0.5, py::arg("seed") = 0);
  m.def(
      "gibbs",
      [](const IsingModel& mdl, long iters, double burn_in_fraction, std::uint64_t seed) {
        return gibbs(mdl, iters, burn_in_fraction, seed);
      },
      py::arg("model"), py::arg("iters"), py::arg("burn_in_fraction") = 0.1, py::arg("seed") = 0);

  m.def(
      "mwu_run",
      [](const IsingModel& mdl, const std::string& regret, const std::string& step, double eta,
         long iters, std::uint64_t seed) {
        return mwu_run(mdl, make_mwu_config(regret, step, eta, iters), seed);
      },
      py::arg("model"), py::arg("regret") = "external", py::arg("step") = "decaying",
      py::arg("eta") = 0.01, py::arg("iters") = 100000, py::arg("seed") = 0);
  m.def("regret_matching_run", &regret_matching_run, py::arg("model"), py::arg("iters") = 100000,
        py::arg("seed") = 0);
  m.def("empirical_regret", &empirical_regret, py::arg("model"), py::arg("history"),
        py::arg("normalized") = false);
  m.def("ce_variational_certificate", &ce_variational_certificate);
  m.def("log_z_lower_bound", &log_z_lower_bound);

  m.def("max_spanning_tree", &max_spanning_tree);
  m.def("tree_map", &tree_map);
  m.def(
      "fp_run",
      [](const IsingModel& mdl, int rounds, const std::string& variant, std::uint64_t seed) {
        if (variant != "ce" && variant != "msne")
          throw std::invalid_argument("variant must be 'ce' or 'msne'");
        return fp_run(mdl, rounds, variant == "ce" ? FpVariant::ce : FpVariant::msne, seed);
      },
      py::arg("model"), py::arg("m") = 15, py::arg("variant") = "ce", py::arg("seed") = 0);
  m.def("fp_log_z_bound", &fp_log_z_bound);

  m.def("marginal_error",
        py::overload_cast<const std::vector<double>&, const std::vector<double>&>(
            &marginal_error));
  m.def(
      "paired_z_test",
      [](const std::vector<double>& a, const std::vector<double>& b, double alpha) {
        ZTestResult r = paired_z_test(a, b, alpha);
        const char* d = r.decision == ZDecision::better
                            ? "better"
                            : r.decision == ZDecision::worse ? "worse" : "indistinguishable";
        return py::make_tuple(d, r.z, r.p_value, r.degenerate);
      },
      py::arg("a"), py::arg("b"), py::arg("alpha") = 0.05);
  m.def("bootstrap_ci", &bootstrap_ci, py::arg("samples"), py::arg("B") = 100,
        py::arg("alpha") = 0.05, py::arg("seed") = 0);
}
