// reslstm command-line tool: train / gradcheck / params / variance /
// depth-sweep. See README.md for the config file format.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "reslstm/analysis.hpp"
#include "reslstm/experiment.hpp"
#include "reslstm/gradcheck.hpp"

using namespace reslstm;

namespace {

int cmd_train(const std::string& config_path) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  require(!cfg.metrics_csv.empty(), "train: config must set metrics_csv");
  auto metrics = run_train_experiment(cfg);
  const auto& last = metrics.back();
  std::printf("trained %s x%d layers, %d epochs: train_ce=%.6f cv_ce=%.6f acc=%.4f\n",
              cell_kind_name(cfg.cell), cfg.layers, cfg.train.epochs, last.train_ce,
              last.cv_ce, last.frame_acc);
  return 0;
}

int cmd_gradcheck(const std::string& cell, int layers, uint64_t seed, int n, int k,
                  int m, int t, double threshold, bool corrupt) {
  std::vector<CellKind> kinds;
  if (cell == "all") {
    kinds = {CellKind::plain, CellKind::highway, CellKind::residual_scaled,
             CellKind::residual_unscaled};
  } else {
    kinds = {cell_kind_from_name(cell)};
  }
  bool all_pass = true;
  for (CellKind kind : kinds) {
    auto rep = check_cell(kind, n, k, m, t, layers, seed, threshold, 1e-5, 0, corrupt);
    print_report(rep, std::cout);
    all_pass = all_pass && rep.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_params(int n, int m, int d, int layers, int classes, bool include_head) {
  auto r = count_report(layers, n, m, d, classes, include_head);
  std::printf("parameter counts (N=%d M=%d D=%d layers=%d%s)\n", n, m, d, layers,
              include_head ? ", head included" : "");
  std::printf("  %-18s %14s\n", "architecture", "total params");
  std::printf("  %-18s %14lld\n", "plain", r.plain_total);
  std::printf("  %-18s %14lld\n", "highway", r.highway_total);
  std::printf("  %-18s %14lld\n", "residual", r.residual_total);
  std::printf("highway - residual = %lld (%.2f%% reduction)\n",
              r.highway_minus_residual, 100.0 * r.relative_reduction);
  std::printf("per-layer depth-gate extras, shape-derived: %lld\n",
              r.extras_shape_count);
  if (r.extras_closed_form > 0) {
    std::printf("per-layer reduction formula N^2/2+4N:       %lld\n",
                r.extras_closed_form);
    std::printf("(the two differ by %lld; the formula's 4N term counts one more "
                "N-sized tensor than the depth gate declares)\n",
                r.extras_closed_form - r.extras_shape_count);
  }
  return 0;
}

int cmd_variance(int layers, double gate, bool scaled, long long samples,
                 uint64_t seed, const std::string& out) {
  auto rep = variance_sweep(layers, gate, scaled, samples, seed);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    require(file.good(), "cannot open output file " + out);
    os = &file;
  }
  *os << "layer,variance\n";
  char buf[64];
  for (int l = 0; l < layers; ++l) {
    std::snprintf(buf, sizeof buf, "%d,%.12g\n", l + 1, rep.layer_variance[l]);
    *os << buf;
  }
  return 0;
}

int cmd_depth_sweep(const std::string& config_path) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  require(!cfg.summary_csv.empty(), "depth-sweep: config must set summary_csv");
  auto results = run_depth_sweep(cfg);
  for (const auto& r : results)
    std::printf("%-18s L=%-2d train_ce=%.6f cv_ce=%.6f frame_err=%.4f\n",
                cell_kind_name(r.kind), r.layers, r.train_ce, r.cv_ce, r.frame_err);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale lab for plain / highway / residual LSTM networks"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "train one network from a config file");
  train_cmd->add_option("config", config_path, "config file path")->required();

  std::string gc_cell = "plain";
  int gc_layers = 1, gc_n = 3, gc_k = 2, gc_m = 2, gc_t = 4;
  uint64_t gc_seed = 8;
  double gc_threshold = 1e-4;
  bool gc_corrupt = false;
  auto* gc_cmd = app.add_subcommand("gradcheck",
                                    "compare analytic gradients against finite differences");
  gc_cmd->add_option("--cell", gc_cell, "plain|highway|residual_scaled|residual_unscaled|all");
  gc_cmd->add_option("--layers", gc_layers, "stack depth");
  gc_cmd->add_option("--seed", gc_seed, "rng seed");
  gc_cmd->add_option("--n", gc_n, "memory cells");
  gc_cmd->add_option("--k", gc_k, "input dim");
  gc_cmd->add_option("--m", gc_m, "output dim");
  gc_cmd->add_option("--frames", gc_t, "sequence length");
  gc_cmd->add_option("--threshold", gc_threshold, "pass/fail threshold");
  gc_cmd->add_flag("--corrupt-backward", gc_corrupt,
                   "negative-control hook: perturb one analytic gradient")
      ->group("");  // hidden

  int pc_n = 1024, pc_m = 512, pc_d = 512, pc_layers = 10, pc_classes = 1;
  bool pc_head = false;
  auto* pc_cmd = app.add_subcommand("params", "parameter accounting per architecture");
  pc_cmd->add_option("--n", pc_n, "memory cells");
  pc_cmd->add_option("--m", pc_m, "output dim");
  pc_cmd->add_option("--d", pc_d, "input dim");
  pc_cmd->add_option("--layers", pc_layers, "stack depth");
  pc_cmd->add_option("--classes", pc_classes, "softmax classes (head)");
  pc_cmd->add_flag("--include-head", pc_head, "count the softmax head too");

  int vs_layers = 10;
  double vs_gate = 0.70710678118654752;
  bool vs_scaled = true, vs_unscaled = false;
  long long vs_samples = 100000;
  uint64_t vs_seed = 1;
  std::string vs_out;
  auto* vs_cmd = app.add_subcommand("variance",
                                    "Monte-Carlo variance propagation through shortcut layers");
  vs_cmd->add_option("--layers", vs_layers, "stack depth");
  vs_cmd->add_option("--gate", vs_gate, "fixed output-gate value (default 1/sqrt(2))");
  vs_cmd->add_flag("--unscaled", vs_unscaled, "unscaled shortcut composition");
  vs_cmd->add_option("--samples", vs_samples, "Monte-Carlo samples");
  vs_cmd->add_option("--seed", vs_seed, "rng seed");
  vs_cmd->add_option("--out", vs_out, "CSV output path (default stdout)");

  std::string sweep_config;
  auto* ds_cmd = app.add_subcommand("depth-sweep",
                                    "train {plain,highway,residual} x {3,5,10} layers");
  ds_cmd->add_option("config", sweep_config, "config file path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(config_path);
    if (*gc_cmd)
      return cmd_gradcheck(gc_cell, gc_layers, gc_seed, gc_n, gc_k, gc_m, gc_t,
                           gc_threshold, gc_corrupt);
    if (*pc_cmd) return cmd_params(pc_n, pc_m, pc_d, pc_layers, pc_classes, pc_head);
    if (*vs_cmd) {
      vs_scaled = !vs_unscaled;
      return cmd_variance(vs_layers, vs_gate, vs_scaled, vs_samples, vs_seed, vs_out);
    }
    if (*ds_cmd) return cmd_depth_sweep(sweep_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
