#include "isg/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace isg {

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string model_to_string(const IsingModel& model) {
  // Written by hand to control the decimal formatting of reals.
  std::ostringstream out;
  out << "{\n";
  out << "  \"n\": " << model.num_nodes() << ",\n";
  if (model.grid_dim()) out << "  \"grid_d\": " << *model.grid_dim() << ",\n";
  out << "  \"biases\": [";
  for (int i = 0; i < model.num_nodes(); ++i) {
    if (i) out << ", ";
    out << fmt_real(model.biases()[i]);
  }
  out << "],\n";
  out << "  \"edges\": [\n";
  for (int k = 0; k < model.num_edges(); ++k) {
    const Edge& e = model.edges()[k];
    out << "    {\"u\": " << e.u << ", \"v\": " << e.v << ", \"w\": " << fmt_real(e.w) << "}";
    out << (k + 1 < model.num_edges() ? ",\n" : "\n");
  }
  out << "  ],\n";
  const ModelMeta& m = model.meta();
  out << "  \"meta\": {\"class\": \"" << m.model_class << "\", \"w\": " << fmt_real(m.w)
      << ", \"q\": " << fmt_real(m.q) << ", \"seed\": " << fmt_u64(m.seed) << "}\n";
  out << "}\n";
  return out.str();
}

void save_model(const IsingModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << model_to_string(model);
  if (!out) throw std::runtime_error("write failed: " + path);
}

IsingModel model_from_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  int n = j.at("n").get<int>();
  std::optional<int> grid_d;
  if (j.contains("grid_d")) grid_d = j.at("grid_d").get<int>();
  std::vector<double> biases = j.at("biases").get<std::vector<double>>();
  std::vector<Edge> edges;
  for (const auto& je : j.at("edges")) {
    edges.push_back({je.at("u").get<int>(), je.at("v").get<int>(), je.at("w").get<double>()});
  }
  ModelMeta meta;
  if (j.contains("meta")) {
    const auto& jm = j.at("meta");
    meta.model_class = jm.value("class", std::string());
    meta.w = jm.value("w", 0.0);
    meta.q = jm.value("q", 0.0);
    meta.seed = jm.value("seed", std::uint64_t{0});
  }
  return IsingModel(n, std::move(edges), std::move(biases), grid_d, std::move(meta));
}

IsingModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_string(buf.str());
}

}  // namespace isg
