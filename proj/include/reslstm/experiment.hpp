// Experiment configuration (key = value text file) and the two composite
// runs the CLI exposes: a single training run and the depth-sweep grid.
// All randomness flows from the one `seed` key; components derive their
// sub-streams through Rng::derive with fixed tags.
#pragma once

#include <atomic>
#include <cstdlib>
#include <map>
#include <thread>

#include "reslstm/training.hpp"

namespace reslstm {

struct ExperimentConfig {
  TaskSpec task;
  double cv_fraction = 0.1;
  CellKind cell = CellKind::plain;
  int layers = 1;
  int cell_size = 0;
  int output_size = 0;
  TrainConfig train;
  uint64_t seed = 0;
  std::string metrics_csv;
  std::string checkpoint_path;
  std::string summary_csv;
};

inline ExperimentConfig parse_experiment_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    s.erase(0, s.find_first_not_of(ws));
    const auto last = s.find_last_not_of(ws);
    s.erase(last == std::string::npos ? 0 : last + 1);
    return s;
  };
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  ExperimentConfig cfg;
  auto take = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_req = [&](const char* key) {
    std::string v = take(key);
    require(!v.empty(), std::string("config: missing required key '") + key + "'");
    return v;
  };

  cfg.task.kind = task_kind_from_name(take_req("task"));
  cfg.task.T = std::stoi(take_req("frames"));
  cfg.task.D = std::stoi(take_req("input_dim"));
  cfg.task.C = std::stoi(take_req("classes"));
  cfg.task.num_sequences = std::stoi(take_req("num_sequences"));
  if (auto v = take("noise_sigma"); !v.empty()) cfg.task.noise_sigma = std::stod(v);
  if (auto v = take("delay_k"); !v.empty()) cfg.task.delay_k = std::stoi(v);
  if (auto v = take("cv_fraction"); !v.empty()) cfg.cv_fraction = std::stod(v);

  if (auto v = take("cell"); !v.empty()) cfg.cell = cell_kind_from_name(v);
  if (auto v = take("layers"); !v.empty()) cfg.layers = std::stoi(v);
  cfg.cell_size = std::stoi(take_req("cell_size"));
  cfg.output_size = std::stoi(take_req("output_size"));

  cfg.train.learning_rate = std::stod(take_req("learning_rate"));
  if (auto v = take("l2_lambda"); !v.empty()) cfg.train.l2_lambda = std::stod(v);
  if (auto v = take("bptt_len"); !v.empty()) cfg.train.bptt_len = std::stoi(v);
  cfg.train.epochs = std::stoi(take_req("epochs"));
  if (auto v = take("lr_halving"); !v.empty()) cfg.train.lr_halving = (v == "1" || v == "true");

  cfg.seed = std::stoull(take_req("seed"));
  cfg.task.seed = Rng::derive(cfg.seed, /*tag=*/1);
  cfg.train.seed = Rng::derive(cfg.seed, /*tag=*/2);

  cfg.metrics_csv = take("metrics_csv");
  cfg.checkpoint_path = take("checkpoint");
  cfg.summary_csv = take("summary_csv");

  if (!kv.empty())
    throw std::invalid_argument("config: unknown key '" + kv.begin()->first + "'");
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open config file " + path);
  return parse_experiment_config(is);
}

inline NetworkConfig network_config_for(const ExperimentConfig& cfg, CellKind kind,
                                        int layers) {
  NetworkConfig nc;
  nc.kind = kind;
  nc.layers = layers;
  nc.cell_size = cfg.cell_size;
  nc.output_size = cfg.output_size;
  nc.input_dim = cfg.task.D;
  nc.num_classes = cfg.task.C;
  nc.seed = Rng::derive(cfg.seed, 0x100 + (uint64_t)kind * 64 + (uint64_t)layers);
  return nc;
}

inline int env_threads() {
  const char* v = std::getenv("RESLSTM_THREADS");
  if (!v) return 1;
  const int n = std::atoi(v);
  return n < 1 ? 1 : n;
}

// Single run: generate task data, split, train, write metrics + checkpoint.
inline std::vector<EpochMetrics> run_train_experiment(const ExperimentConfig& cfg,
                                                      StackedNetwork* out_net = nullptr) {
  Dataset data = generate(cfg.task);
  auto [train_set, cv_set] = split(data, cfg.cv_fraction, cfg.seed);
  StackedNetwork net = make_network(network_config_for(cfg, cfg.cell, cfg.layers));
  auto metrics = train(net, train_set, cv_set, cfg.train);
  if (!cfg.metrics_csv.empty()) write_metrics_csv(metrics, cfg.metrics_csv);
  if (!cfg.checkpoint_path.empty()) save_checkpoint(net, cfg.checkpoint_path);
  if (out_net) *out_net = std::move(net);
  return metrics;
}

struct SweepResult {
  CellKind kind;
  int layers;
  double train_ce, cv_ce, frame_err;
};

// Grid {plain, highway, residual_scaled} x {3, 5, 10}. Cells may run in
// parallel (RESLSTM_THREADS); the summary is assembled in fixed grid order.
inline std::vector<SweepResult> run_depth_sweep(const ExperimentConfig& cfg) {
  static const CellKind kinds[] = {CellKind::plain, CellKind::highway,
                                   CellKind::residual_scaled};
  static const int depths[] = {3, 5, 10};

  Dataset data = generate(cfg.task);
  auto [train_set, cv_set] = split(data, cfg.cv_fraction, cfg.seed);

  std::vector<SweepResult> results(9);
  auto run_cell = [&](int gi) {
    const CellKind kind = kinds[gi / 3];
    const int layers = depths[gi % 3];
    StackedNetwork net = make_network(network_config_for(cfg, kind, layers));
    auto metrics = train(net, train_set, cv_set, cfg.train);
    const auto& last = metrics.back();
    results[gi] = {kind, layers, last.train_ce, last.cv_ce, 1.0 - last.frame_acc};
  };

  const int threads = std::min(env_threads(), 9);
  if (threads <= 1) {
    for (int gi = 0; gi < 9; ++gi) run_cell(gi);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int gi = next++; gi < 9; gi = next++) run_cell(gi);
      });
    for (auto& th : pool) th.join();
  }

  if (!cfg.summary_csv.empty()) {
    std::ofstream os(cfg.summary_csv);
    require(os.good(), "cannot open summary file " + cfg.summary_csv);
    os << "kind,layers,train_ce,cv_ce,frame_err\n";
    char buf[160];
    for (const auto& r : results) {
      std::snprintf(buf, sizeof buf, "%s,%d,%.12g,%.12g,%.12g\n",
                    cell_kind_name(r.kind), r.layers, r.train_ce, r.cv_ce,
                    r.frame_err);
      os << buf;
    }
  }
  return results;
}

}  // namespace reslstm
