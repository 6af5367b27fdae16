#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "isg/errors.hpp"
#include "isg/exact.hpp"
#include "isg/experiment.hpp"
#include "isg/fp.hpp"
#include "isg/mnist.hpp"
#include "isg/model_io.hpp"
#include "isg/regret.hpp"
#include "isg/rng.hpp"

namespace fs = std::filesystem;
using namespace isg;

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_marginals_csv(const std::string& path, const Marginals& m, const std::string& algo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# algorithm=" << algo << " converged=" << (m.converged ? 1 : 0)
      << " iterations=" << m.iterations_used << " final_delta=" << fmt_real(m.final_delta)
      << "\n";
  out << "node,p_plus\n";
  for (std::size_t i = 0; i < m.p_plus.size(); ++i)
    out << i << ',' << fmt_real(m.p_plus[i]) << '\n';
}

std::string spins_to_string(const Assignment& x) {
  std::string s;
  s.reserve(x.size());
  for (int v : x) s += v == 1 ? '+' : '-';
  return s;
}

void write_fp_trace(const std::string& path, const FpState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "x1 " << spins_to_string(state.assignments[0]) << '\n';
  for (int l = 1; l <= state.rounds; ++l) {
    out << "l=" << l << " s=" << state.s_draws[l - 1] << " T=";
    const auto& ids = state.trees[l - 1].edge_ids;
    for (std::size_t k = 0; k < ids.size(); ++k) out << (k ? "," : "") << ids[k];
    out << " x=" << spins_to_string(state.assignments[l]) << '\n';
  }
}

std::string find_idx_file(const std::string& dir, const std::string& base) {
  for (const char* suffix : {"", ".gz"}) {
    fs::path p = fs::path(dir) / (base + suffix);
    if (fs::exists(p)) return p.string();
  }
  throw std::runtime_error("MNIST file not found: " + base + "[.gz] under " + dir);
}

int cmd_generate(int d, const std::string& cls, double w, double q, std::uint64_t seed,
                 const std::string& out) {
  ModelClass mc = cls == "mixed"       ? ModelClass(MixedClass{w})
                  : cls == "attractive" ? ModelClass(AttractiveClass{w})
                                        : ModelClass(SignProbClass{w, q});
  IsingModel model = generate_model(d, mc, seed);
  save_model(model, out);
  std::cout << "wrote " << out << " (n=" << model.num_nodes() << ", " << model.num_edges()
            << " edges)\n";
  return 0;
}

int cmd_exact(const std::string& model_path, const std::string& method, const std::string& out) {
  IsingModel model = load_model(model_path);
  ExactResult r;
  if (method == "brute")
    r = brute_force(model);
  else if (method == "transfer")
    r = transfer_matrix(model);
  else
    r = exact_auto(model);
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + out);
  os << "# log_z=" << fmt_real(r.log_z) << "\n";
  os << "node,p_plus\n";
  for (std::size_t i = 0; i < r.marginals.size(); ++i)
    os << i << ',' << fmt_real(r.marginals[i]) << '\n';
  std::cout << "log_z=" << fmt_real(r.log_z) << "\n";
  return 0;
}

int cmd_certify(const std::string& model_path, const std::string& history_path,
                const std::string& out_path) {
  IsingModel model = load_model(model_path);
  PlayHistory history = load_history(history_path);
  if (history.n != model.num_nodes() ||
      history.pair_counts.size() != static_cast<std::size_t>(model.num_edges()))
    throw std::runtime_error("history does not match the model");

  RegretReport raw = empirical_regret(model, history, false);
  RegretReport norm = empirical_regret(model, history, true);

  std::ostringstream out;
  out << "rounds: " << history.rounds << "\n";
  out << "epsilon_cce (raw): " << fmt_real(raw.epsilon_cce)
      << "   normalized: " << fmt_real(norm.epsilon_cce) << "\n";
  out << "epsilon_ce  (raw): " << fmt_real(raw.epsilon_ce)
      << "   normalized: " << fmt_real(norm.epsilon_ce) << "\n";
  out << "player  external_raw    swap_raw        external_norm   swap_norm\n";
  for (int i = 0; i < history.n; ++i) {
    char line[200];
    std::snprintf(line, sizeof(line), "%5d  %14.8g  %14.8g  %14.8g  %14.8g\n", i,
                  raw.external[i], raw.swap_regret[i], norm.external[i], norm.swap_regret[i]);
    out << line;
  }

  if (history.has_joint) {
    out << "log_z_lower_bound: " << fmt_real(log_z_lower_bound(model, history)) << "\n";
    if (model.num_nodes() <= 12) {
      // Certificate of the empirical joint distribution.
      std::vector<double> q(std::size_t{1} << model.num_nodes(), 0.0);
      for (const auto& [key, count] : history.joint_counts)
        q[key] = static_cast<double>(count) / history.rounds;
      CeCertificate cert = ce_variational_certificate(model, q);
      out << "empirical distribution certificate:\n";
      out << "  epsilon_ce: " << fmt_real(cert.epsilon_ce) << "\n";
      out << "  cross_entropy: " << fmt_real(cert.cross_entropy)
          << "  kl: " << fmt_real(cert.kl) << "  log_z: " << fmt_real(cert.log_z) << "\n";
      double min_slack3 = 1e300, min_slack4 = 1e300;
      for (int i = 0; i < model.num_nodes(); ++i) {
        min_slack3 = std::min(min_slack3, cert.cross_entropy_slack[i]);
        min_slack4 = std::min(min_slack4, cert.kl_slack[i]);
      }
      out << "  min cross-entropy slack: " << fmt_real(min_slack3)
          << "  min KL slack: " << fmt_real(min_slack4) << "\n";
    }
  } else {
    out << "log_z_lower_bound: unavailable (joint counts dropped)\n";
  }

  if (out_path.empty() || out_path == "-") {
    std::cout << out.str();
  } else {
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
    os << out.str();
  }
  return 0;
}

int cmd_mnist_build(const std::string& data_dir, const std::string& out_dir, int count,
                    double noise, double threshold, double weight_scale, int digit,
                    std::uint64_t seed) {
  ImageSet train = parse_idx_images(
      read_file_maybe_gzip(find_idx_file(data_dir, "train-images-idx3-ubyte")));
  train.labels =
      parse_idx_labels(read_file_maybe_gzip(find_idx_file(data_dir, "train-labels-idx1-ubyte")));
  ImageSet test =
      parse_idx_images(read_file_maybe_gzip(find_idx_file(data_dir, "t10k-images-idx3-ubyte")));
  test.labels =
      parse_idx_labels(read_file_maybe_gzip(find_idx_file(data_dir, "t10k-labels-idx1-ubyte")));
  if (static_cast<int>(train.labels.size()) != train.count ||
      static_cast<int>(test.labels.size()) != test.count)
    throw std::runtime_error("label counts do not match image counts");

  std::vector<BWImage> training;
  for (int i = 0; i < train.count; ++i) {
    if (digit >= 0 && train.labels[i] != digit) continue;
    training.push_back(binarize(train, i, threshold));
  }
  if (training.empty()) throw std::runtime_error("no training images after digit filter");
  LearnedParams params = learn_params(training, weight_scale);

  long nonneg = 0;
  for (double w : params.weights)
    if (w >= 0.0) ++nonneg;
  std::cout << "learned " << params.weights.size() << " edge weights from " << training.size()
            << " images; " << nonneg << " are >= 0\n";

  std::vector<int> candidates;
  for (int i = 0; i < test.count; ++i)
    if (digit < 0 || test.labels[i] == digit) candidates.push_back(i);
  if (static_cast<int>(candidates.size()) < count)
    throw std::runtime_error("not enough test images for the requested count");
  Rng pick = Rng(seed).stream("select");
  pick.shuffle(candidates);
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());

  fs::create_directories(out_dir);
  std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
  manifest << "model_file,test_index,label\n";
  for (int idx : candidates) {
    BWImage clean = binarize(test, idx, threshold);
    BWImage noisy = add_noise(clean, noise, mix_seed(seed, "noise:" + std::to_string(idx)));
    IsingModel model = observation_model(params, noisy, noise);
    char name[64];
    std::snprintf(name, sizeof(name), "img_%05d.json", idx);
    save_model(model, (fs::path(out_dir) / name).string());
    manifest << name << ',' << idx << ',' << static_cast<int>(test.labels[idx]) << '\n';
  }
  std::cout << "wrote " << count << " observation models to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate marginal inference in Ising models via game dynamics"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a random grid model file");
  int gen_d = 8;
  std::string gen_class = "mixed";
  double gen_w = 2.0, gen_q = 0.5;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "model.json";
  gen->add_option("--d", gen_d, "grid dimension");
  gen->add_option("--class", gen_class, "mixed|attractive|sign")
      ->check(CLI::IsMember({"mixed", "attractive", "sign"}));
  gen->add_option("--w", gen_w, "weight magnitude");
  gen->add_option("--q", gen_q, "sign probability (sign class)");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output model file")->required();

  // exact
  auto* ex = app.add_subcommand("exact", "Exact marginals and log partition function");
  std::string ex_model, ex_method = "auto", ex_out = "exact.csv";
  ex->add_option("--model", ex_model)->required();
  ex->add_option("--method", ex_method)->check(CLI::IsMember({"auto", "brute", "transfer"}));
  ex->add_option("--out", ex_out)->required();

  // infer
  auto* inf = app.add_subcommand("infer", "Run one approximate inference algorithm");
  std::string inf_model, inf_algo, inf_out = "marginals.csv";
  std::string inf_save_history, inf_log_history;
  AlgoConfig inf_cfg;
  std::uint64_t inf_seed = 0;
  inf->add_option("--model", inf_model)->required();
  inf->add_option("--algo", inf_algo,
                  "bl|mf|bp|trw|gs|nr|mw_er|mw_er_cf|mw_sr|mw_sr_cf|fp_ce|fp_msne")
      ->required();
  inf->add_option("--max-iters", inf_cfg.iters, "iteration budget (0 = algorithm default)");
  inf->add_option("--tol", inf_cfg.tol, "convergence tolerance");
  inf->add_option("--damping", inf_cfg.damping, "message smoothing weight on the old value");
  inf->add_option("--rho", inf_cfg.rho, "trw edge-appearance probability");
  inf->add_option("--burn-in", inf_cfg.burn_in, "gs burn-in fraction");
  inf->add_option("--eta", inf_cfg.eta, "mw constant step size");
  inf->add_option("--m", inf_cfg.m, "fp best-response rounds");
  inf->add_option("--seed", inf_seed);
  inf->add_option("--out", inf_out)->required();
  inf->add_option("--save-history", inf_save_history,
                  "write the play history (mw_*/nr) for certify");
  inf->add_option("--log-history", inf_log_history, "write the (x, T, s) trace (fp_*)");

  // certify
  auto* cert = app.add_subcommand("certify", "Regret report and certificates of a play history");
  std::string cert_model, cert_history, cert_out;
  cert->add_option("--model", cert_model)->required();
  cert->add_option("--history", cert_history)->required();
  cert->add_option("--out", cert_out, "report path (default stdout)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a declarative experiment config");
  std::string exp_config, exp_out, exp_model_dir;
  int exp_jobs = 1;
  bool exp_quiet = false;
  std::uint64_t exp_seed = 0;
  bool exp_seed_set = false;
  exp->add_option("--config", exp_config)->required();
  exp->add_option("--out", exp_out, "override the config's output path");
  exp->add_option("--model-dir", exp_model_dir, "override the config's model directory");
  exp->add_option("--jobs", exp_jobs, "worker threads");
  exp->add_flag("--quiet", exp_quiet, "suppress progress lines");
  exp->add_option("--seed", exp_seed, "override the master seed")
      ->each([&](const std::string&) { exp_seed_set = true; });

  // mnist-build
  auto* mn = app.add_subcommand("mnist-build", "Build per-test-image de-noising models");
  std::string mn_data = std::getenv("ISG_MNIST_DIR") ? std::getenv("ISG_MNIST_DIR") : "";
  std::string mn_out = "mnist_models";
  int mn_count = 100, mn_digit = -1;
  double mn_noise = 0.05, mn_threshold = 0.5, mn_scale = 2.0;
  std::uint64_t mn_seed = 0;
  mn->add_option("--data-dir", mn_data, "IDX dataset directory (default $ISG_MNIST_DIR)");
  mn->add_option("--out-dir", mn_out);
  mn->add_option("--count", mn_count, "number of test images");
  mn->add_option("--digit", mn_digit, "restrict to one digit (default all)");
  mn->add_option("--noise", mn_noise, "pixel flip probability");
  mn->add_option("--threshold", mn_threshold, "binarization threshold");
  mn->add_option("--weight-scale", mn_scale, "max learned |w|");
  mn->add_option("--seed", mn_seed);

  // report
  auto* rep = app.add_subcommand("report", "Summarize an experiment CSV");
  std::string rep_csv, rep_out;
  rep->add_option("--csv", rep_csv)->required();
  rep->add_option("--out", rep_out, "summary path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_d, gen_class, gen_w, gen_q, gen_seed, gen_out);
    if (ex->parsed()) return cmd_exact(ex_model, ex_method, ex_out);

    if (inf->parsed()) {
      IsingModel model = load_model(inf_model);
      inf_cfg.name = inf_algo;
      const bool is_mw = inf_algo.rfind("mw_", 0) == 0;
      const bool is_fp = inf_algo.rfind("fp_", 0) == 0;
      if (!inf_save_history.empty() && !is_mw && inf_algo != "nr")
        throw std::runtime_error("--save-history needs a play-history algorithm (mw_*/nr)");
      if (!inf_log_history.empty() && !is_fp)
        throw std::runtime_error("--log-history needs fp_ce or fp_msne");

      Marginals result;
      if (!inf_save_history.empty()) {
        PlayHistory history;
        if (inf_algo == "nr") {
          std::tie(history, result) =
              regret_matching_run(model, inf_cfg.iters > 0 ? inf_cfg.iters : 100000, inf_seed);
        } else {
          MwuConfig cfg;
          cfg.regret_kind = inf_algo.substr(3, 2) == "er" ? RegretKind::external : RegretKind::swap;
          cfg.step_kind = inf_algo.size() > 5 ? StepKind::constant : StepKind::decaying;
          if (inf_cfg.eta > 0.0) cfg.eta = inf_cfg.eta;
          cfg.iters = inf_cfg.iters > 0 ? inf_cfg.iters : 100000;
          std::tie(history, result) = mwu_run(model, cfg, inf_seed);
        }
        save_history(history, inf_save_history);
      } else if (!inf_log_history.empty()) {
        auto [marg, state] = fp_run(model, inf_cfg.m > 0 ? inf_cfg.m : 15,
                                    inf_algo == "fp_ce" ? FpVariant::ce : FpVariant::msne,
                                    inf_seed);
        write_fp_trace(inf_log_history, state);
        result = std::move(marg);
      } else {
        result = run_algorithm(model, inf_cfg, inf_seed);
      }
      write_marginals_csv(inf_out, result, inf_algo);
      std::cout << (result.converged ? "converged" : "not converged") << " after "
                << result.iterations_used << " iteration(s)\n";
      return 0;
    }

    if (cert->parsed()) return cmd_certify(cert_model, cert_history, cert_out);

    if (exp->parsed()) {
      ExperimentConfig cfg = load_config(exp_config);
      if (!exp_out.empty()) cfg.out = exp_out;
      if (!exp_model_dir.empty()) cfg.model_dir = exp_model_dir;
      if (exp_seed_set) cfg.master_seed = exp_seed;
      std::vector<RunRecord> recs = run_experiment(cfg, exp_jobs, exp_quiet ? nullptr : &std::cerr);
      std::cout << recs.size() << " record(s)";
      if (!cfg.out.empty()) std::cout << " -> " << cfg.out;
      std::cout << "\n";
      return 0;
    }

    if (mn->parsed()) {
      if (mn_data.empty())
        throw std::runtime_error("no dataset directory; pass --data-dir or set ISG_MNIST_DIR");
      return cmd_mnist_build(mn_data, mn_out, mn_count, mn_noise, mn_threshold, mn_scale,
                             mn_digit, mn_seed);
    }

    if (rep->parsed()) {
      std::string summary = summarize_records(read_csv(rep_csv));
      if (rep_out.empty() || rep_out == "-") {
        std::cout << summary;
      } else {
        std::ofstream os(rep_out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open for writing: " + rep_out);
        os << summary;
      }
      return 0;
    }
  } catch (const infeasible_error& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
