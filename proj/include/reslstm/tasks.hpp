// Synthetic frame-labelled sequence tasks. Two flavors: noisy_embedding is a
// memory-light frame classification task (Markov class chain, noisy class
// embeddings); delayed_recall forces the network to hold a symbol for k
// frames before emitting it as the label.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>

#include "reslstm/numerics.hpp"

namespace reslstm {

struct SequenceSample {
  std::vector<Vector> frames;  // T x D
  std::vector<int> labels;     // T, each in [0, C)
};

using Dataset = std::vector<SequenceSample>;

enum class TaskKind { noisy_embedding, delayed_recall };

inline const char* task_kind_name(TaskKind k) {
  return k == TaskKind::noisy_embedding ? "noisy_embedding" : "delayed_recall";
}

inline TaskKind task_kind_from_name(const std::string& s) {
  if (s == "noisy_embedding") return TaskKind::noisy_embedding;
  if (s == "delayed_recall") return TaskKind::delayed_recall;
  throw std::invalid_argument("unknown task kind: " + s);
}

struct TaskSpec {
  TaskKind kind = TaskKind::noisy_embedding;
  int T = 0;
  int D = 0;
  int C = 0;
  double noise_sigma = 0.0;
  int delay_k = 0;  // delayed_recall only
  int num_sequences = 0;
  uint64_t seed = 0;
};

// The C class embeddings of the noisy_embedding task: unit-norm, drawn once
// per seed.
inline std::vector<Vector> class_embeddings(const TaskSpec& spec) {
  Rng rng(Rng::derive(spec.seed, /*tag=*/0x656d62ULL));  // "emb"
  std::vector<Vector> emb(spec.C);
  for (auto& e : emb) {
    e.resize(spec.D);
    double norm2 = 0.0;
    for (auto& v : e) {
      v = rng.gaussian();
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : e) v *= inv;
  }
  return emb;
}

// Markov class chain (self-transition 0.9), frame = embedding + N(0, sigma^2).
inline Dataset gen_noisy_embedding(const TaskSpec& spec) {
  require(spec.T > 0 && spec.D > 0 && spec.C > 1 && spec.num_sequences > 0,
          "gen_noisy_embedding: bad spec");
  const auto emb = class_embeddings(spec);
  Rng rng(Rng::derive(spec.seed, /*tag=*/0x736571ULL));  // "seq"
  Dataset data(spec.num_sequences);
  for (auto& sample : data) {
    int cls = (int)rng.below(spec.C);
    for (int t = 0; t < spec.T; ++t) {
      if (t > 0 && rng.uniform() >= 0.9) {
        // jump to a uniformly chosen different class
        int next = (int)rng.below(spec.C - 1);
        cls = (next >= cls) ? next + 1 : next;
      }
      Vector frame = emb[cls];
      for (auto& v : frame) v += spec.noise_sigma * rng.gaussian();
      sample.frames.push_back(std::move(frame));
      sample.labels.push_back(cls);
    }
  }
  return data;
}

// One-hot symbol stream; label at t is the symbol from t - delay_k frames
// ago. Class C-1 is the null class emitted for the first delay_k frames, so
// symbols range over [0, C-1).
inline Dataset gen_delayed_recall(const TaskSpec& spec) {
  require(spec.T > 0 && spec.C > 1 && spec.num_sequences > 0,
          "gen_delayed_recall: bad spec");
  require(spec.delay_k >= 0 && spec.delay_k < spec.T,
          "gen_delayed_recall: delay_k must be in [0, T)");
  require(spec.D >= spec.C - 1, "gen_delayed_recall: need D >= C-1 for one-hot frames");
  const int num_symbols = spec.C - 1;
  const int null_class = spec.C - 1;
  Rng rng(Rng::derive(spec.seed, /*tag=*/0x736571ULL));
  Dataset data(spec.num_sequences);
  for (auto& sample : data) {
    std::vector<int> symbols(spec.T);
    for (auto& s : symbols) s = (int)rng.below(num_symbols);
    for (int t = 0; t < spec.T; ++t) {
      Vector frame(spec.D, 0.0);
      frame[symbols[t]] = 1.0;
      for (auto& v : frame) v += spec.noise_sigma * rng.gaussian();
      sample.frames.push_back(std::move(frame));
      sample.labels.push_back(t >= spec.delay_k ? symbols[t - spec.delay_k]
                                                : null_class);
    }
  }
  return data;
}

inline Dataset generate(const TaskSpec& spec) {
  return spec.kind == TaskKind::noisy_embedding ? gen_noisy_embedding(spec)
                                                : gen_delayed_recall(spec);
}

// Seeded shuffle, then partition into (train, cv).
inline std::pair<Dataset, Dataset> split(const Dataset& data, double cv_fraction,
                                         uint64_t seed) {
  require(cv_fraction > 0.0 && cv_fraction < 1.0,
          "split: cv_fraction must be in (0, 1)");
  const size_t n = data.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(Rng::derive(seed, /*tag=*/0x73706cULL));  // "spl"
  for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  const size_t cv_n = (size_t)std::llround(cv_fraction * (double)n);
  require(cv_n > 0 && cv_n < n, "split: a side would be empty");
  Dataset train, cv;
  for (size_t i = 0; i < n; ++i)
    ((i < n - cv_n) ? train : cv).push_back(data[idx[i]]);
  return {std::move(train), std::move(cv)};
}

// ---------------------------------------------------------------------------
// Dataset file: line-oriented text. First line "T,D,C,kind,seed", then one
// line per frame "t,label,v1,...,vD"; t restarting at 0 opens a new sequence.
// Values printed with 17 significant digits so the round trip is bit-exact.
// ---------------------------------------------------------------------------
inline void save_dataset(const Dataset& data, const TaskSpec& spec,
                         std::ostream& os) {
  os << spec.T << "," << spec.D << "," << spec.C << ","
     << task_kind_name(spec.kind) << "," << spec.seed << "\n";
  char buf[40];
  for (const auto& sample : data) {
    for (size_t t = 0; t < sample.frames.size(); ++t) {
      os << t << "," << sample.labels[t];
      for (double v : sample.frames[t]) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << "," << buf;
      }
      os << "\n";
    }
  }
}

inline void save_dataset(const Dataset& data, const TaskSpec& spec,
                         const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "save_dataset: cannot open " + path);
  save_dataset(data, spec, os);
  require(os.good(), "save_dataset: write failed for " + path);
}

inline Dataset load_dataset(std::istream& is, TaskSpec* out_spec = nullptr) {
  std::string line;
  require((bool)std::getline(is, line), "load_dataset: empty file");
  TaskSpec spec;
  {
    std::istringstream hs(line);
    std::string tok;
    std::getline(hs, tok, ','); spec.T = std::stoi(tok);
    std::getline(hs, tok, ','); spec.D = std::stoi(tok);
    std::getline(hs, tok, ','); spec.C = std::stoi(tok);
    std::getline(hs, tok, ','); spec.kind = task_kind_from_name(tok);
    std::getline(hs, tok, ','); spec.seed = std::stoull(tok);
  }
  Dataset data;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    const int t = std::stoi(tok);
    if (t == 0) data.emplace_back();
    require(!data.empty() && t == (int)data.back().frames.size(),
            "load_dataset: frame index out of order");
    std::getline(ls, tok, ',');
    const int label = std::stoi(tok);
    require(label >= 0 && label < spec.C, "load_dataset: label out of range");
    Vector frame;
    frame.reserve(spec.D);
    while (std::getline(ls, tok, ',')) frame.push_back(std::strtod(tok.c_str(), nullptr));
    require((int)frame.size() == spec.D, "load_dataset: frame has wrong dim");
    data.back().frames.push_back(std::move(frame));
    data.back().labels.push_back(label);
  }
  if (out_spec) *out_spec = spec;
  return data;
}

inline Dataset load_dataset(const std::string& path, TaskSpec* out_spec = nullptr) {
  std::ifstream is(path);
  require(is.good(), "load_dataset: cannot open " + path);
  return load_dataset(is, out_spec);
}

}  // namespace reslstm
