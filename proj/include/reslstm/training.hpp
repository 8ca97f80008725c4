// SGD with L2 regularization, per-sequence updates, and the epoch loop with
// held-out cross-validation. Single-threaded by contract so metric streams
// are reproducible bit-for-bit under a fixed seed.
#pragma once

#include <chrono>

#include "reslstm/network.hpp"
#include "reslstm/tasks.hpp"

namespace reslstm {

struct TrainConfig {
  double learning_rate = 0.1;
  double l2_lambda = 0.0;
  int bptt_len = 20;
  int epochs = 1;
  uint64_t seed = 0;
  bool lr_halving = false;  // halve LR when CV loss stops improving
};

struct EpochMetrics {
  int epoch = 0;
  double train_ce = 0.0;
  double cv_ce = 0.0;
  double frame_acc = 0.0;  // CV frame accuracy
  double seconds = 0.0;
};

// p <- p - lr*(g + lambda*p); L2 applies to weight matrices only, biases and
// peepholes are excluded.
inline void sgd_step(StackedNetwork& net, const Gradients& grads, double lr,
                     double l2_lambda) {
  auto& g = const_cast<Gradients&>(grads);
  std::vector<std::pair<std::vector<double>*, bool>> param_tensors;
  for_each_tensor(net, [&](const std::string&, std::vector<double>& t, bool decay) {
    param_tensors.push_back({&t, decay});
  });
  size_t k = 0;
  for_each_tensor(g, [&](const std::string& name, std::vector<double>& gt, bool) {
    require(k < param_tensors.size() && param_tensors[k].first->size() == gt.size(),
            "sgd_step: gradient shape mismatch at " + name);
    auto& [pt, decay] = param_tensors[k++];
    const double lam = decay ? l2_lambda : 0.0;
    for (size_t i = 0; i < gt.size(); ++i)
      (*pt)[i] -= lr * (gt[i] + lam * (*pt)[i]);
  });
}

// Mean cross-entropy and frame accuracy over a dataset; never mutates the net.
inline std::pair<double, double> evaluate(const StackedNetwork& net,
                                          const Dataset& data) {
  require(!data.empty(), "evaluate: empty dataset");
  double ce_sum = 0.0;
  long correct = 0, frames = 0;
  for (const auto& sample : data) {
    auto [logits, final_states] =
        forward_sequence(net, sample.frames, zero_states(net.cfg));
    for (size_t t = 0; t < logits.size(); ++t) {
      ce_sum += cross_entropy(logits[t], sample.labels[t]);
      int argmax = 0;
      for (size_t c = 1; c < logits[t].size(); ++c)
        if (logits[t][c] > logits[t][argmax]) argmax = (int)c;
      correct += (argmax == sample.labels[t]);
      ++frames;
    }
  }
  return {ce_sum / frames, (double)correct / frames};
}

inline std::vector<EpochMetrics> train(StackedNetwork& net, const Dataset& train_set,
                                       const Dataset& cv_set, const TrainConfig& cfg) {
  require(!train_set.empty() && !cv_set.empty(), "train: empty dataset");
  std::vector<EpochMetrics> metrics;
  Rng shuffle_rng(Rng::derive(cfg.seed, /*tag=*/0x736866ULL));  // "shf"
  double lr = cfg.learning_rate;
  double prev_cv = -1.0;
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double train_ce_sum = 0.0;
    long train_frames = 0;
    for (size_t si = 0; si < order.size(); ++si) {
      const auto& sample = train_set[order[si]];
      auto [loss, grads] = loss_and_grads(net, sample.frames, sample.labels,
                                          cfg.bptt_len);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", sequence " +
                                 std::to_string(order[si]));
      train_ce_sum += loss * (double)sample.frames.size();
      train_frames += (long)sample.frames.size();
      sgd_step(net, grads, lr, cfg.l2_lambda);
    }

    auto [cv_ce, cv_acc] = evaluate(net, cv_set);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    metrics.push_back({epoch, train_ce_sum / train_frames, cv_ce, cv_acc, secs});

    if (cfg.lr_halving && prev_cv >= 0.0 && cv_ce > prev_cv) lr *= 0.5;
    prev_cv = cv_ce;
  }
  return metrics;
}

inline void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                              std::ostream& os) {
  os << "epoch,train_ce,cv_ce,frame_acc,seconds\n";
  char buf[160];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.3f\n", m.epoch,
                  m.train_ce, m.cv_ce, m.frame_acc, m.seconds);
    os << buf;
  }
}

inline void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                              const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "write_metrics_csv: cannot open " + path);
  write_metrics_csv(metrics, os);
}

}  // namespace reslstm
