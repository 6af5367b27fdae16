#include "isg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "isg/exact.hpp"
#include "isg/fp.hpp"
#include "isg/model_io.hpp"
#include "isg/regret.hpp"
#include "isg/rng.hpp"

namespace isg {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

CellConfig parse_cell(const std::string& item) {
  CellConfig cell;
  std::string body = item;
  if (auto at = body.find('@'); at != std::string::npos) {
    cell.samples = std::stoi(body.substr(at + 1));
    body = body.substr(0, at);
  }
  std::vector<std::string> parts = split(body, ':');
  if (parts.size() < 2) throw std::runtime_error("config: bad class spec '" + item + "'");
  cell.model_class = parts[0];
  cell.w = std::stod(parts[1]);
  if (cell.model_class == "sign") {
    if (parts.size() != 3) throw std::runtime_error("config: sign class needs w and q");
    cell.q = std::stod(parts[2]);
  } else if (cell.model_class != "mixed" && cell.model_class != "attractive") {
    throw std::runtime_error("config: unknown model class '" + cell.model_class + "'");
  } else if (parts.size() != 2) {
    throw std::runtime_error("config: class '" + cell.model_class + "' takes only w");
  }
  return cell;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::map<std::string, std::map<std::string, std::string>> algo_overrides;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (key == "d") {
      cfg.d = std::stoi(value);
    } else if (key == "samples") {
      cfg.default_samples = std::stoi(value);
    } else if (key == "master_seed") {
      cfg.master_seed = std::stoull(value);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "reference") {
      if (value != "exact" && value != "gs")
        throw std::runtime_error("config: reference must be exact or gs");
      cfg.reference = value;
    } else if (key == "ref_iters") {
      cfg.ref_iters = std::stol(value);
    } else if (key == "ref_burn_in") {
      cfg.ref_burn_in = std::stod(value);
    } else if (key == "model_dir") {
      cfg.model_dir = value;
    } else if (key == "record_runtime") {
      cfg.record_runtime = value == "true" || value == "1";
    } else if (key == "classes") {
      for (const std::string& item : split(value, ','))
        if (!item.empty()) cfg.cells.push_back(parse_cell(item));
    } else if (key == "algos") {
      for (const std::string& item : split(value, ','))
        if (!item.empty()) cfg.algos.push_back({item});
    } else if (auto dot = key.find('.'); dot != std::string::npos) {
      algo_overrides[key.substr(0, dot)][key.substr(dot + 1)] = value;
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }

  for (auto& algo : cfg.algos) {
    auto it = algo_overrides.find(algo.name);
    if (it == algo_overrides.end()) continue;
    for (const auto& [k, v] : it->second) {
      if (k == "iters") algo.iters = std::stol(v);
      else if (k == "tol") algo.tol = std::stod(v);
      else if (k == "damping") algo.damping = std::stod(v);
      else if (k == "rho") algo.rho = std::stod(v);
      else if (k == "burn_in") algo.burn_in = std::stod(v);
      else if (k == "eta") algo.eta = std::stod(v);
      else if (k == "m") algo.m = std::stoi(v);
      else throw std::runtime_error("config: unknown algorithm key '" + k + "'");
    }
  }
  for (const auto& cell : cfg.cells)
    if (cell.samples == 0 && cfg.default_samples < 1)
      throw std::runtime_error("config: samples must be >= 1");
  if (cfg.algos.empty()) throw std::runtime_error("config: algos must be non-empty");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return parse_config(in);
}

Marginals run_algorithm(const IsingModel& model, const AlgoConfig& algo, std::uint64_t seed) {
  const std::string& a = algo.name;
  auto iters = [&](long dflt) { return algo.iters > 0 ? algo.iters : dflt; };

  if (a == "bl") return baseline(model);
  if (a == "mf") {
    IterationSpec spec = kMeanFieldDefaults;
    spec.max_iters = iters(spec.max_iters);
    if (algo.tol >= 0.0) spec.tolerance = algo.tol;
    return mean_field(model, spec, seed);
  }
  if (a == "bp" || a == "trw") {
    IterationSpec spec = a == "bp" ? kBpDefaults : kTrwDefaults;
    spec.max_iters = iters(spec.max_iters);
    if (algo.tol >= 0.0) spec.tolerance = algo.tol;
    if (algo.damping >= 0.0) spec.damping = algo.damping;
    if (a == "bp") return belief_prop(model, spec, seed);
    return trw(model, algo.rho > 0.0 ? algo.rho : kTrwRhoDefault, spec, seed);
  }
  if (a == "gs") {
    return gibbs(model, iters(1000000), algo.burn_in >= 0.0 ? algo.burn_in : 0.1, seed);
  }
  if (a == "nr") {
    return regret_matching_run(model, iters(100000), seed).second;
  }
  if (a == "mw_er" || a == "mw_er_cf" || a == "mw_sr" || a == "mw_sr_cf") {
    MwuConfig cfg;
    cfg.regret_kind = a.substr(3, 2) == "er" ? RegretKind::external : RegretKind::swap;
    cfg.step_kind = a.size() > 5 ? StepKind::constant : StepKind::decaying;
    if (algo.eta > 0.0) cfg.eta = algo.eta;
    cfg.iters = iters(100000);
    return mwu_run(model, cfg, seed).second;
  }
  if (a == "fp_ce" || a == "fp_msne") {
    int m = algo.m > 0 ? algo.m : 15;
    return fp_run(model, m, a == "fp_ce" ? FpVariant::ce : FpVariant::msne, seed).first;
  }
  throw std::runtime_error("unknown algorithm '" + a + "'");
}

namespace {

constexpr const char* kCsvHeader =
    "model_id,d,class,w,q,algorithm,seed,iterations,converged,avg_marginal_error,runtime_ms";

std::string record_to_line(const RunRecord& r) {
  std::ostringstream out;
  out << r.model_id << ',' << r.d << ',' << r.model_class << ',' << fmt_real(r.w) << ','
      << fmt_real(r.q) << ',' << r.algorithm << ',' << r.seed << ',' << r.iterations << ','
      << (r.converged ? 1 : 0) << ',' << fmt_real(r.avg_marginal_error) << ','
      << fmt_real(r.runtime_ms);
  return out.str();
}

void sort_records(std::vector<RunRecord>& records) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.model_id, a.algorithm) < std::tie(b.model_id, b.algorithm);
  });
}

}  // namespace

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const RunRecord& r : records) out << record_to_line(r) << '\n';
  return out.str();
}

void write_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::vector<RunRecord> sorted = records;
  sort_records(sorted);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << records_to_csv(sorted);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RunRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader)
    throw std::runtime_error("bad CSV header in " + path);
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> f = split(line, ',');
    if (f.size() != 11) throw std::runtime_error("bad CSV row: " + line);
    RunRecord r;
    r.model_id = f[0];
    r.d = std::stoi(f[1]);
    r.model_class = f[2];
    r.w = std::stod(f[3]);
    r.q = std::stod(f[4]);
    r.algorithm = f[5];
    r.seed = std::stoull(f[6]);
    r.iterations = std::stol(f[7]);
    r.converged = f[8] == "1";
    r.avg_marginal_error = std::stod(f[9]);
    r.runtime_ms = std::stod(f[10]);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct ModelJob {
  std::string model_id;
  CellConfig cell;     // empty class when loaded from disk
  std::string path;    // when loaded from disk
  std::vector<const AlgoConfig*> algos;
};

std::vector<double> reference_marginals(const ExperimentConfig& cfg, const IsingModel& model,
                                        const std::string& model_id) {
  if (cfg.reference == "gs") {
    return gibbs(model, cfg.ref_iters, cfg.ref_burn_in,
                 mix_seed(cfg.master_seed, "ref:" + model_id))
        .p_plus;
  }
  return exact_auto(model).marginals;
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, int jobs,
                                      std::ostream* progress) {
  if (config.cells.empty() == config.model_dir.empty())
    throw std::runtime_error("experiment needs exactly one of classes or model_dir");

  // Rows already present in the output are kept verbatim.
  std::map<std::pair<std::string, std::string>, RunRecord> existing;
  if (!config.out.empty() && std::filesystem::exists(config.out)) {
    for (RunRecord& r : read_csv(config.out))
      existing.emplace(std::make_pair(r.model_id, r.algorithm), std::move(r));
  }

  std::vector<ModelJob> model_jobs;
  if (!config.model_dir.empty()) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(config.model_dir))
      if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    for (const std::string& p : paths) {
      ModelJob job;
      job.model_id = std::filesystem::path(p).stem().string();
      job.path = p;
      model_jobs.push_back(std::move(job));
    }
  } else {
    for (const CellConfig& cell : config.cells) {
      const int samples = cell.samples > 0 ? cell.samples : config.default_samples;
      for (int s = 0; s < samples; ++s) {
        ModelJob job;
        job.cell = cell;
        char idx[16];
        std::snprintf(idx, sizeof(idx), "s%03d", s);
        job.model_id = cell.model_class + "_w" + fmt_short(cell.w) +
                       (cell.model_class == "sign" ? "_q" + fmt_short(cell.q) : "") + "_" + idx;
        model_jobs.push_back(std::move(job));
      }
    }
  }

  std::vector<RunRecord> records;
  for (ModelJob& job : model_jobs) {
    for (const AlgoConfig& algo : config.algos) {
      auto it = existing.find({job.model_id, algo.name});
      if (it != existing.end())
        records.push_back(it->second);
      else
        job.algos.push_back(&algo);
    }
  }

  std::vector<std::vector<RunRecord>> fresh(model_jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= model_jobs.size()) return;
      const ModelJob& job = model_jobs[idx];
      if (job.algos.empty()) continue;
      try {
        IsingModel model = [&]() {
          if (!job.path.empty()) return load_model(job.path);
          ModelClass cls = job.cell.model_class == "mixed"
                               ? ModelClass(MixedClass{job.cell.w})
                               : job.cell.model_class == "attractive"
                                     ? ModelClass(AttractiveClass{job.cell.w})
                                     : ModelClass(SignProbClass{job.cell.w, job.cell.q});
          return generate_model(config.d, cls, mix_seed(config.master_seed, "model:" + job.model_id));
        }();
        const std::vector<double> reference = reference_marginals(config, model, job.model_id);

        for (const AlgoConfig* algo : job.algos) {
          RunRecord r;
          r.model_id = job.model_id;
          r.d = model.grid_dim() ? *model.grid_dim() : 0;
          r.model_class = job.path.empty() ? job.cell.model_class : model.meta().model_class;
          r.w = job.path.empty() ? job.cell.w : model.meta().w;
          r.q = job.path.empty() ? job.cell.q : model.meta().q;
          r.algorithm = algo->name;
          r.seed = mix_seed(config.master_seed, "algo:" + job.model_id + ":" + algo->name);

          auto t0 = std::chrono::steady_clock::now();
          Marginals est = run_algorithm(model, *algo, r.seed);
          auto t1 = std::chrono::steady_clock::now();

          r.iterations = est.iterations_used;
          r.converged = est.converged;
          r.avg_marginal_error = marginal_error(est.p_plus, reference);
          r.runtime_ms = config.record_runtime
                             ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                             : 0.0;
          fresh[idx].push_back(std::move(r));
        }
        if (progress) {
          std::lock_guard<std::mutex> lock(log_mutex);
          *progress << job.model_id << ": " << job.algos.size() << " run(s) done\n" << std::flush;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(model_jobs.size());
        return;
      }
    }
  };

  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(model_jobs.size())));
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  for (auto& part : fresh)
    for (RunRecord& r : part) records.push_back(std::move(r));
  sort_records(records);
  if (!config.out.empty()) write_csv(records, config.out);
  return records;
}

Proportion nonconvergence_proportion(const std::vector<RunRecord>& records,
                                     const std::string& algorithm, std::optional<double> q) {
  long total = 0, bad = 0;
  for (const RunRecord& r : records) {
    if (r.algorithm != algorithm) continue;
    if (q && r.q != *q) continue;
    ++total;
    if (!r.converged) ++bad;
  }
  if (total == 0) throw std::invalid_argument("nonconvergence_proportion: empty stratum");
  return proportion_with_ci(bad, total);
}

std::string summarize_records(const std::vector<RunRecord>& records, double alpha,
                              std::uint64_t bootstrap_seed) {
  // Cells keyed by (class, w, q); within each cell per-algorithm error
  // samples aligned by model_id.
  struct CellKey {
    std::string cls;
    double w, q;
    bool operator<(const CellKey& o) const {
      return std::tie(cls, w, q) < std::tie(o.cls, o.w, o.q);
    }
  };
  std::map<CellKey, std::map<std::string, std::map<std::string, const RunRecord*>>> cells;
  for (const RunRecord& r : records)
    cells[{r.model_class, r.w, r.q}][r.algorithm][r.model_id] = &r;

  std::ostringstream out;
  for (const auto& [key, algos] : cells) {
    out << "== class=" << key.cls << " w=" << fmt_short(key.w);
    if (key.cls == "sign") out << " q=" << fmt_short(key.q);
    out << "\n";
    out << "  algorithm        mean_err        ci_lo           ci_hi      k  nonconv\n";
    for (const auto& [name, by_model] : algos) {
      std::vector<double> errs;
      long bad = 0;
      for (const auto& [mid, rec] : by_model) {
        errs.push_back(rec->avg_marginal_error);
        if (!rec->converged) ++bad;
      }
      double mean = 0.0;
      for (double e : errs) mean += e;
      mean /= static_cast<double>(errs.size());
      double lo = mean, hi = mean;
      if (errs.size() >= 2) {
        if (errs.size() < 30) {
          std::tie(lo, hi) = bootstrap_ci(
              errs, 100, alpha, mix_seed(bootstrap_seed, key.cls + fmt_short(key.w) + name));
        } else {
          double var = 0.0;
          for (double e : errs) var += (e - mean) * (e - mean);
          var /= static_cast<double>(errs.size() - 1);
          double half = 1.96 * std::sqrt(var / static_cast<double>(errs.size()));
          lo = mean - half;
          hi = mean + half;
        }
      }
      char line[160];
      std::snprintf(line, sizeof(line), "  %-12s %14.6f  %14.6f  %14.6f  %4zu  %ld/%zu\n",
                    name.c_str(), mean, lo, hi, errs.size(), bad, errs.size());
      out << line;
    }
    // Pairwise paired z-tests inside the cell.
    std::vector<std::string> names;
    for (const auto& [name, _] : algos) names.push_back(name);
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = i + 1; j < names.size(); ++j) {
        std::vector<double> a, b;
        for (const auto& [mid, rec] : algos.at(names[i])) {
          auto it = algos.at(names[j]).find(mid);
          if (it == algos.at(names[j]).end()) continue;
          a.push_back(rec->avg_marginal_error);
          b.push_back(it->second->avg_marginal_error);
        }
        if (a.size() < 2) continue;
        ZTestResult t = paired_z_test(a, b, alpha);
        if (t.decision == ZDecision::indistinguishable) continue;
        out << "  " << names[i] << (t.decision == ZDecision::better ? " < " : " > ") << names[j]
            << "  (z=" << fmt_short(t.z) << ", p=" << fmt_short(t.p_value) << ")\n";
      }
    }
    out << "\n";
  }

  // Sign-class cells pooled over q: stratified pairwise comparisons
  // with per-stratum variances.
  std::map<std::pair<std::string, double>, std::vector<CellKey>> pooled;
  for (const auto& [key, algos] : cells)
    if (key.cls == "sign") pooled[{key.cls, key.w}].push_back(key);
  for (const auto& [group, keys] : pooled) {
    if (keys.size() < 2) continue;
    std::set<std::string> names;
    for (const CellKey& key : keys)
      for (const auto& [name, _] : cells.at(key)) names.insert(name);
    out << "== class=" << group.first << " w=" << fmt_short(group.second)
        << " pooled over q (stratified)\n";
    for (auto i = names.begin(); i != names.end(); ++i) {
      for (auto j = std::next(i); j != names.end(); ++j) {
        std::vector<std::vector<double>> a, b;
        for (const CellKey& key : keys) {
          const auto& cell = cells.at(key);
          auto ia = cell.find(*i), ib = cell.find(*j);
          if (ia == cell.end() || ib == cell.end()) continue;
          std::vector<double> va, vb;
          for (const auto& [mid, rec] : ia->second) {
            auto it = ib->second.find(mid);
            if (it == ib->second.end()) continue;
            va.push_back(rec->avg_marginal_error);
            vb.push_back(it->second->avg_marginal_error);
          }
          if (va.size() < 2) continue;
          a.push_back(std::move(va));
          b.push_back(std::move(vb));
        }
        if (a.empty()) continue;
        ZTestResult t = stratified_z_test(a, b, alpha);
        if (t.decision == ZDecision::indistinguishable) continue;
        out << "  " << *i << (t.decision == ZDecision::better ? " < " : " > ") << *j
            << "  (z=" << fmt_short(t.z) << ", p=" << fmt_short(t.p_value) << ")\n";
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace isg
