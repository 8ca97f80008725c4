// Stacked recurrent network: L layers of one cell kind plus an affine softmax
// head. Forward over whole sequences, and exact truncated BPTT where forward
// state carries across chunk boundaries but gradients do not.
#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>

#include "reslstm/cells.hpp"
#include "reslstm/softmax.hpp"

namespace reslstm {

struct NetworkConfig {
  CellKind kind = CellKind::plain;
  int layers = 1;
  int cell_size = 0;    // N
  int output_size = 0;  // M
  int input_dim = 0;    // D
  int num_classes = 0;  // C
  uint64_t seed = 0;
};

struct StackedNetwork {
  NetworkConfig cfg;
  std::vector<LayerParams> layer;
  Matrix W_out;  // C x M
  Vector b_out;  // C
};

// Gradients mirror the network tensor-for-tensor.
using Gradients = StackedNetwork;

template <class Net, class F>
void for_each_tensor(Net& net, F&& f) {
  for (size_t l = 0; l < net.layer.size(); ++l) {
    visit_layer_tensors(net.layer[l], "layer" + std::to_string(l + 1) + ".", f);
  }
  f(std::string("W_out"), net.W_out.d, /*decay=*/true);
  f(std::string("b_out"), net.b_out, /*decay=*/false);
}

inline Gradients zeros_like(const StackedNetwork& net) {
  Gradients g = net;
  for_each_tensor(g, [](const std::string&, std::vector<double>& t, bool) {
    std::fill(t.begin(), t.end(), 0.0);
  });
  return g;
}

// Layer l >= 2 consumes the previous layer's output, so its input dim is M.
// Layer 1 of a highway net has no lower cell and is built as a plain layer.
inline StackedNetwork make_network(const NetworkConfig& cfg, double init_scale = 0.05) {
  require(cfg.layers >= 1, "make_network: layers must be >= 1");
  require(cfg.cell_size > 0 && cfg.output_size > 0 && cfg.input_dim > 0 &&
              cfg.num_classes > 0,
          "make_network: dims must be positive");
  StackedNetwork net;
  net.cfg = cfg;
  Rng rng(Rng::derive(cfg.seed, /*tag=*/0x6e6574ULL));  // "net"
  for (int l = 1; l <= cfg.layers; ++l) {
    const int K = (l == 1) ? cfg.input_dim : cfg.output_size;
    CellKind kind = cfg.kind;
    bool depth_gate = false;
    if (cfg.kind == CellKind::highway) {
      if (l == 1) kind = CellKind::plain;
      else depth_gate = true;
    }
    net.layer.push_back(make_layer(kind, K, cfg.cell_size, cfg.output_size,
                                   depth_gate, rng, init_scale));
  }
  net.W_out = init_uniform(cfg.num_classes, cfg.output_size, init_scale, rng);
  net.b_out = Vector(cfg.num_classes, 0.0);
  return net;
}

inline std::vector<CellState> zero_states(const NetworkConfig& cfg) {
  std::vector<CellState> s(cfg.layers);
  for (auto& st : s) {
    st.c = Vector(cfg.cell_size, 0.0);
    st.h = Vector(cfg.output_size, 0.0);
  }
  return s;
}

struct ForwardTrace {
  std::vector<std::vector<StepCache>> cache;  // [t][layer]
  std::vector<Vector> logits;                 // [t]
};

// Runs the stack over a sequence. Highway layers receive the lower layer's
// cell of the SAME timestep (computed just before them in the layer loop).
inline std::pair<std::vector<Vector>, std::vector<CellState>> forward_sequence(
    const StackedNetwork& net, const std::vector<Vector>& inputs,
    std::vector<CellState> states, ForwardTrace* trace = nullptr) {
  const int L = net.cfg.layers;
  require((int)states.size() == L, "forward_sequence: wrong state count");
  std::vector<Vector> logits;
  logits.reserve(inputs.size());
  for (size_t t = 0; t < inputs.size(); ++t) {
    require((int)inputs[t].size() == net.cfg.input_dim,
            "forward_sequence: input frame has wrong dim");
    std::vector<StepCache> row(L);
    const Vector* x = &inputs[t];
    for (int l = 0; l < L; ++l) {
      const Vector* c_below =
          net.layer[l].has_depth_gate ? &row[l - 1].c : nullptr;
      states[l] = cell_step(net.layer[l], *x, states[l], c_below, row[l]);
      x = &row[l].h;
    }
    logits.push_back(affine(net.W_out, states[L - 1].h, net.b_out));
    if (trace) {
      trace->cache.push_back(std::move(row));
      trace->logits.push_back(logits.back());
    }
  }
  return {std::move(logits), std::move(states)};
}

// Mean per-frame cross-entropy and its exact gradient under truncated BPTT:
// the sequence is processed in consecutive chunks of <= bptt_len frames,
// (c, h) carry across chunk boundaries, gradient flow stops at them.
inline std::pair<double, Gradients> loss_and_grads(const StackedNetwork& net,
                                                   const std::vector<Vector>& inputs,
                                                   const std::vector<int>& labels,
                                                   int bptt_len) {
  const int T = (int)inputs.size();
  const int L = net.cfg.layers;
  require(T > 0, "loss_and_grads: empty sequence");
  require((int)labels.size() == T, "loss_and_grads: labels/inputs length mismatch");
  require(bptt_len >= 1, "loss_and_grads: bptt_len must be >= 1");

  Gradients grads = zeros_like(net);
  double loss_sum = 0.0;
  std::vector<CellState> states = zero_states(net.cfg);

  for (int t0 = 0; t0 < T; t0 += bptt_len) {
    const int t1 = std::min(t0 + bptt_len, T);
    const int n = t1 - t0;

    // forward this chunk, keeping caches
    std::vector<std::vector<StepCache>> cache(n, std::vector<StepCache>(L));
    std::vector<Vector> dlogits(n);
    for (int k = 0; k < n; ++k) {
      const int t = t0 + k;
      const Vector* x = &inputs[t];
      for (int l = 0; l < L; ++l) {
        const Vector* c_below =
            net.layer[l].has_depth_gate ? &cache[k][l - 1].c : nullptr;
        states[l] = cell_step(net.layer[l], *x, states[l], c_below, cache[k][l]);
        x = &cache[k][l].h;
      }
      Vector logits = affine(net.W_out, states[L - 1].h, net.b_out);
      loss_sum += cross_entropy(logits, labels[t]);
      dlogits[k] = softmax(logits);
      dlogits[k][labels[t]] -= 1.0;
      for (auto& v : dlogits[k]) v /= T;  // gradient of the per-frame mean
    }

    // backward this chunk; zero carries at the chunk end (truncation)
    std::vector<Vector> carry_h(L, Vector(net.cfg.output_size, 0.0));
    std::vector<Vector> carry_c(L, Vector(net.cfg.cell_size, 0.0));
    for (int k = n - 1; k >= 0; --k) {
      std::vector<Vector> extra_h(L, Vector(net.cfg.output_size, 0.0));
      std::vector<Vector> extra_c(L, Vector(net.cfg.cell_size, 0.0));
      // head feeds the top layer
      outer_acc(grads.W_out, dlogits[k], cache[k][L - 1].h);
      add_in_place(grads.b_out, dlogits[k]);
      add_in_place(extra_h[L - 1], matvec_t(net.W_out, dlogits[k]));

      for (int l = L - 1; l >= 0; --l) {
        Vector d_h = carry_h[l];
        add_in_place(d_h, extra_h[l]);
        Vector d_c = carry_c[l];
        add_in_place(d_c, extra_c[l]);
        Vector d_x, d_h_prev, d_c_prev;
        Vector d_c_below;
        Vector* d_c_below_ptr = nullptr;
        if (net.layer[l].has_depth_gate) {
          d_c_below.assign(net.cfg.cell_size, 0.0);
          d_c_below_ptr = &d_c_below;
        }
        step_backward(net.layer[l], cache[k][l], d_h, d_c, grads.layer[l], d_x,
                      d_h_prev, d_c_prev, d_c_below_ptr);
        carry_h[l] = std::move(d_h_prev);
        carry_c[l] = std::move(d_c_prev);
        if (l > 0) {
          add_in_place(extra_h[l - 1], d_x);
          if (d_c_below_ptr) add_in_place(extra_c[l - 1], d_c_below);
        }
      }
    }
  }
  const double mean_loss = loss_sum / T;
  if (!std::isfinite(mean_loss))
    throw std::runtime_error("loss_and_grads: non-finite loss");
  return {mean_loss, std::move(grads)};
}

// ---------------------------------------------------------------------------
// Checkpoint container: textual, self-describing, hexfloat payload so the
// write/read round trip is bit-exact.
// ---------------------------------------------------------------------------
inline void save_checkpoint(const StackedNetwork& net, std::ostream& os) {
  os << "reslstm-checkpoint-v1\n";
  os << "cell " << cell_kind_name(net.cfg.kind) << "\n";
  os << "layers " << net.cfg.layers << "\n";
  os << "cell_size " << net.cfg.cell_size << "\n";
  os << "output_size " << net.cfg.output_size << "\n";
  os << "input_dim " << net.cfg.input_dim << "\n";
  os << "num_classes " << net.cfg.num_classes << "\n";
  os << "seed " << net.cfg.seed << "\n";
  os << std::hexfloat;
  for_each_tensor(const_cast<StackedNetwork&>(net),
                  [&](const std::string& name, std::vector<double>& t, bool) {
                    os << "tensor " << name << " " << t.size() << "\n";
                    for (size_t i = 0; i < t.size(); ++i)
                      os << t[i] << (i + 1 == t.size() ? '\n' : ' ');
                  });
  os << "end\n";
}

inline void save_checkpoint(const StackedNetwork& net, const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "save_checkpoint: cannot open " + path);
  save_checkpoint(net, os);
  require(os.good(), "save_checkpoint: write failed for " + path);
}

inline StackedNetwork load_checkpoint(std::istream& is) {
  std::string line;
  std::getline(is, line);
  require(line == "reslstm-checkpoint-v1", "load_checkpoint: bad magic line");
  NetworkConfig cfg;
  std::string key, val;
  for (int i = 0; i < 7; ++i) {
    is >> key >> val;
    if (key == "cell") cfg.kind = cell_kind_from_name(val);
    else if (key == "layers") cfg.layers = std::stoi(val);
    else if (key == "cell_size") cfg.cell_size = std::stoi(val);
    else if (key == "output_size") cfg.output_size = std::stoi(val);
    else if (key == "input_dim") cfg.input_dim = std::stoi(val);
    else if (key == "num_classes") cfg.num_classes = std::stoi(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else throw std::invalid_argument("load_checkpoint: unexpected header key " + key);
  }
  StackedNetwork net = make_network(cfg);
  std::string tok;
  while (is >> tok) {
    if (tok == "end") return net;
    require(tok == "tensor", "load_checkpoint: expected 'tensor', got " + tok);
    std::string name;
    size_t n;
    is >> name >> n;
    bool found = false;
    for_each_tensor(net, [&](const std::string& tn, std::vector<double>& t, bool) {
      if (tn != name) return;
      require(t.size() == n, "load_checkpoint: size mismatch for " + name);
      // strtod, not stream extraction: istreams do not parse hexfloat
      std::string v;
      for (size_t i = 0; i < n; ++i) {
        is >> v;
        t[i] = std::strtod(v.c_str(), nullptr);
      }
      found = true;
    });
    require(found, "load_checkpoint: unknown tensor " + name);
  }
  throw std::invalid_argument("load_checkpoint: missing 'end' marker");
}

inline StackedNetwork load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "load_checkpoint: cannot open " + path);
  return load_checkpoint(is);
}

}  // namespace reslstm
