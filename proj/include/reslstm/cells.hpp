// Recurrent step functions for the three cell families (plain LSTMP, highway
// LSTM with a depth gate, residual LSTM with an output-layer shortcut) and
// their exact reverse-mode backward passes.
//
// Dimension conventions, per layer: K = input length, N = memory cells,
// M = output length after projection.
//
// Plain cell:
//   i = sig(W_xi x + W_hi h' + p_ci.c' + b_i)
//   f = sig(W_xf x + W_hf h' + p_cf.c' + b_f)
//   g = tanh(W_xc x + W_hc h' + b_c)
//   c = f.c' + i.g
//   o = sig(W_xo x + W_ho h' + p_co.c + b_o)     (o peeps at the NEW c)
//   h = W_p (o.tanh(c))
//
// Highway cell adds a depth gate on the lower layer's same-timestep cell:
//   d = sig(W_xd x + p_cd_same.c' + p_cd_below.c_below + b_d)
//   c = d.c_below + f.c' + i.g
//
// Residual cell moves the gate after the projection and adds the shortcut:
//   r = tanh(c);  m = W_p r;  s = W_h x (or x when dims match)
//   scaled:    h = o.(m + s)
//   unscaled:  h = o.m + s       (ablation; variance grows with depth)
// The residual output gate lives in the M-dimensional output space, so its
// input/recurrent blocks are M-by-K / M-by-M and the cell coupling W_co is a
// full M-by-N matrix instead of the diagonal peephole of the other kinds.
#pragma once

#include <algorithm>

#include "reslstm/numerics.hpp"

namespace reslstm {

enum class CellKind { plain, highway, residual_scaled, residual_unscaled };

inline bool is_residual(CellKind k) {
  return k == CellKind::residual_scaled || k == CellKind::residual_unscaled;
}

inline const char* cell_kind_name(CellKind k) {
  switch (k) {
    case CellKind::plain: return "plain";
    case CellKind::highway: return "highway";
    case CellKind::residual_scaled: return "residual_scaled";
    case CellKind::residual_unscaled: return "residual_unscaled";
  }
  return "?";
}

inline CellKind cell_kind_from_name(const std::string& s) {
  if (s == "plain") return CellKind::plain;
  if (s == "highway") return CellKind::highway;
  if (s == "residual_scaled") return CellKind::residual_scaled;
  if (s == "residual_unscaled") return CellKind::residual_unscaled;
  throw std::invalid_argument("unknown cell kind: " + s);
}

struct CellState {
  Vector c;  // memory cell, length N
  Vector h;  // layer output, length M
};

// All learnable tensors of one recurrent layer. Unused tensors stay empty
// (e.g. the depth gate on non-highway layers, W_co on non-residual layers).
struct LayerParams {
  CellKind kind = CellKind::plain;
  int input_dim = 0;  // K
  int cell_dim = 0;   // N
  int out_dim = 0;    // M

  Matrix W_xi, W_xf, W_xc, W_xo;
  Matrix W_hi, W_hf, W_hc, W_ho;
  Vector p_ci, p_cf, p_co;  // diagonal peepholes; p_co empty on residual layers
  Matrix W_co;              // residual only: M x N cell-to-output-gate coupling
  Vector b_i, b_f, b_c, b_o;
  Matrix W_p;  // M x N projection

  // highway depth gate (only on layers >= 2 of a highway net)
  bool has_depth_gate = false;
  Matrix W_xd;
  Vector p_cd_same, p_cd_below, b_d;

  // residual shortcut: identity (requires K == M) or an M x K matrix
  bool identity_shortcut = false;
  Matrix W_h;
};

// Visits every non-empty learnable tensor as a flat double array.
// `decay` marks tensors subject to L2 (matrices yes, biases/peepholes no).
template <class P, class F>
void visit_layer_tensors(P& p, const std::string& prefix, F&& f) {
  auto mat = [&](const char* n, auto& m) {
    if (!m.empty()) f(prefix + n, m.d, /*decay=*/true);
  };
  auto vec = [&](const char* n, auto& v) {
    if (!v.empty()) f(prefix + n, v, /*decay=*/false);
  };
  mat("W_xi", p.W_xi); mat("W_xf", p.W_xf); mat("W_xc", p.W_xc); mat("W_xo", p.W_xo);
  mat("W_hi", p.W_hi); mat("W_hf", p.W_hf); mat("W_hc", p.W_hc); mat("W_ho", p.W_ho);
  vec("p_ci", p.p_ci); vec("p_cf", p.p_cf); vec("p_co", p.p_co);
  mat("W_co", p.W_co);
  vec("b_i", p.b_i); vec("b_f", p.b_f); vec("b_c", p.b_c); vec("b_o", p.b_o);
  mat("W_p", p.W_p);
  mat("W_xd", p.W_xd);
  vec("p_cd_same", p.p_cd_same); vec("p_cd_below", p.p_cd_below); vec("b_d", p.b_d);
  mat("W_h", p.W_h);
}

// Random initialization: uniform in [-scale, scale], forget-gate bias set to
// forget_bias (default 1.0, keeps memory open early in training).
inline LayerParams make_layer(CellKind kind, int K, int N, int M, bool depth_gate,
                              Rng& rng, double scale = 0.05,
                              double forget_bias = 1.0) {
  require(K > 0 && N > 0 && M > 0, "make_layer: dims must be positive");
  LayerParams p;
  p.kind = kind;
  p.input_dim = K;
  p.cell_dim = N;
  p.out_dim = M;
  const int O = is_residual(kind) ? M : N;  // output-gate dimension

  p.W_xi = init_uniform(N, K, scale, rng);
  p.W_xf = init_uniform(N, K, scale, rng);
  p.W_xc = init_uniform(N, K, scale, rng);
  p.W_xo = init_uniform(O, K, scale, rng);
  p.W_hi = init_uniform(N, M, scale, rng);
  p.W_hf = init_uniform(N, M, scale, rng);
  p.W_hc = init_uniform(N, M, scale, rng);
  p.W_ho = init_uniform(O, M, scale, rng);
  p.p_ci = init_uniform_vec(N, scale, rng);
  p.p_cf = init_uniform_vec(N, scale, rng);
  if (is_residual(kind)) {
    p.W_co = init_uniform(M, N, scale, rng);
  } else {
    p.p_co = init_uniform_vec(N, scale, rng);
  }
  p.b_i = init_uniform_vec(N, scale, rng);
  p.b_f = init_uniform_vec(N, scale, rng);
  for (auto& b : p.b_f) b = forget_bias;
  p.b_c = init_uniform_vec(N, scale, rng);
  p.b_o = init_uniform_vec(O, scale, rng);
  p.W_p = init_uniform(M, N, scale, rng);

  if (kind == CellKind::highway && depth_gate) {
    p.has_depth_gate = true;
    p.W_xd = init_uniform(N, K, scale, rng);
    p.p_cd_same = init_uniform_vec(N, scale, rng);
    p.p_cd_below = init_uniform_vec(N, scale, rng);
    p.b_d = init_uniform_vec(N, scale, rng);
  }
  if (is_residual(kind)) {
    if (K == M) {
      p.identity_shortcut = true;
    } else {
      p.W_h = init_uniform(M, K, scale, rng);
    }
  }
  return p;
}

// Same shapes, all zeros: gradient accumulator for one layer.
inline LayerParams zeros_like_layer(const LayerParams& p) {
  LayerParams z = p;
  visit_layer_tensors(z, "", [](const std::string&, std::vector<double>& t, bool) {
    std::fill(t.begin(), t.end(), 0.0);
  });
  return z;
}

// Everything the backward pass needs to be exact, recorded by the forward.
struct StepCache {
  CellKind kind = CellKind::plain;
  int K = 0, N = 0, M = 0;
  bool has_depth_gate = false;

  Vector x, c_prev, h_prev, c_below;
  Vector i, f, o, d, g;
  Vector c, tc;      // new cell and tanh(c)
  Vector r;          // gated readout (plain/highway: o.tc; residual: tc)
  Vector m, s;       // residual: projection output and shortcut
  Vector h;
};

inline void check_cache_matches(const LayerParams& p, const StepCache& cc) {
  require(cc.kind == p.kind && cc.K == p.input_dim && cc.N == p.cell_dim &&
              cc.M == p.out_dim && cc.has_depth_gate == p.has_depth_gate,
          "step_backward: cache does not match params (shape checksum failed)");
}

// Unified forward step. c_below must be non-null iff the layer has a depth
// gate. Returns the new (c, h) and fills the cache.
inline CellState cell_step(const LayerParams& p, const Vector& x,
                           const CellState& prev, const Vector* c_below,
                           StepCache& cc) {
  const int K = p.input_dim, N = p.cell_dim, M = p.out_dim;
  require((int)x.size() == K, "cell_step: x has length " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(K));
  require((int)prev.c.size() == N, "cell_step: prev.c has wrong length");
  require((int)prev.h.size() == M, "cell_step: prev.h has wrong length");
  if (p.has_depth_gate) {
    require(c_below != nullptr, "cell_step: highway layer needs c_below");
    require((int)c_below->size() == N, "cell_step: c_below has length " +
                                           std::to_string(c_below->size()) +
                                           ", expected " + std::to_string(N));
  } else {
    require(c_below == nullptr, "cell_step: c_below given to a non-highway layer");
  }

  cc.kind = p.kind;
  cc.K = K; cc.N = N; cc.M = M;
  cc.has_depth_gate = p.has_depth_gate;
  cc.x = x;
  cc.c_prev = prev.c;
  cc.h_prev = prev.h;
  if (p.has_depth_gate) cc.c_below = *c_below;

  Vector a_i = affine(p.W_xi, x, p.b_i);
  add_in_place(a_i, matvec(p.W_hi, prev.h));
  add_in_place(a_i, hadamard(p.p_ci, prev.c));
  cc.i = sigmoid(a_i);

  Vector a_f = affine(p.W_xf, x, p.b_f);
  add_in_place(a_f, matvec(p.W_hf, prev.h));
  add_in_place(a_f, hadamard(p.p_cf, prev.c));
  cc.f = sigmoid(a_f);

  Vector a_g = affine(p.W_xc, x, p.b_c);
  add_in_place(a_g, matvec(p.W_hc, prev.h));
  cc.g = tanh_elem(a_g);

  cc.c = hadamard(cc.f, prev.c);
  add_in_place(cc.c, hadamard(cc.i, cc.g));
  if (p.has_depth_gate) {
    Vector a_d = affine(p.W_xd, x, p.b_d);
    add_in_place(a_d, hadamard(p.p_cd_same, prev.c));
    add_in_place(a_d, hadamard(p.p_cd_below, *c_below));
    cc.d = sigmoid(a_d);
    add_in_place(cc.c, hadamard(cc.d, *c_below));
  }

  cc.tc = tanh_elem(cc.c);

  Vector a_o = affine(p.W_xo, x, p.b_o);
  add_in_place(a_o, matvec(p.W_ho, prev.h));
  if (is_residual(p.kind)) {
    add_in_place(a_o, matvec(p.W_co, cc.c));
  } else {
    add_in_place(a_o, hadamard(p.p_co, cc.c));
  }
  cc.o = sigmoid(a_o);

  if (is_residual(p.kind)) {
    if (p.identity_shortcut)
      require(K == M, "cell_step: identity shortcut requires input dim == output dim");
    cc.r = cc.tc;
    cc.m = matvec(p.W_p, cc.r);
    cc.s = p.identity_shortcut ? x : matvec(p.W_h, x);
    if (p.kind == CellKind::residual_scaled) {
      Vector ms = cc.m;
      add_in_place(ms, cc.s);
      cc.h = hadamard(cc.o, ms);
    } else {
      cc.h = hadamard(cc.o, cc.m);
      add_in_place(cc.h, cc.s);
    }
  } else {
    cc.r = hadamard(cc.o, cc.tc);
    cc.h = matvec(p.W_p, cc.r);
  }
  return CellState{cc.c, cc.h};
}

// Convenience wrappers for the three architectures.
inline CellState plain_step(const LayerParams& p, const Vector& x,
                            const CellState& prev, StepCache& cc) {
  require(p.kind == CellKind::plain, "plain_step: wrong cell kind");
  return cell_step(p, x, prev, nullptr, cc);
}

inline CellState highway_step(const LayerParams& p, const Vector& x,
                              const CellState& prev, const Vector& c_below,
                              StepCache& cc) {
  require(p.kind == CellKind::highway && p.has_depth_gate,
          "highway_step: layer has no depth gate (layer 1 of a highway net is plain)");
  return cell_step(p, x, prev, &c_below, cc);
}

inline CellState residual_step(const LayerParams& p, const Vector& x,
                               const CellState& prev, StepCache& cc) {
  require(is_residual(p.kind), "residual_step: wrong cell kind");
  return cell_step(p, x, prev, nullptr, cc);
}

inline Vector dsigmoid_from_y(const Vector& y, const Vector& dy) {
  Vector out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = dy[i] * y[i] * (1.0 - y[i]);
  return out;
}

inline Vector dtanh_from_y(const Vector& y, const Vector& dy) {
  Vector out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = dy[i] * (1.0 - y[i] * y[i]);
  return out;
}

// Exact reverse-mode step. Accumulates parameter gradients into `grad`
// (same shapes as the params) and returns the input-side gradients. For
// highway layers d_c_below receives dL/dc_below; it must be non-null there.
inline void step_backward(const LayerParams& p, const StepCache& cc,
                          const Vector& d_h, const Vector& d_c_in,
                          LayerParams& grad, Vector& d_x, Vector& d_h_prev,
                          Vector& d_c_prev, Vector* d_c_below) {
  check_cache_matches(p, cc);
  const int K = p.input_dim, N = p.cell_dim;
  require((int)d_h.size() == p.out_dim, "step_backward: d_h has wrong length");
  require((int)d_c_in.size() == N, "step_backward: d_c_in has wrong length");
  require(p.has_depth_gate == (d_c_below != nullptr),
          "step_backward: d_c_below presence must match the depth gate");

  d_x.assign(K, 0.0);
  d_h_prev.assign(p.out_dim, 0.0);
  d_c_prev.assign(N, 0.0);

  Vector dc = d_c_in;  // dL/dc accumulates below
  Vector da_o;

  if (is_residual(p.kind)) {
    Vector do_, dm, ds;
    if (p.kind == CellKind::residual_scaled) {
      Vector ms = cc.m;
      add_in_place(ms, cc.s);
      do_ = hadamard(d_h, ms);
      dm = hadamard(d_h, cc.o);
      ds = dm;
    } else {
      do_ = hadamard(d_h, cc.m);
      dm = hadamard(d_h, cc.o);
      ds = d_h;
    }
    da_o = dsigmoid_from_y(cc.o, do_);
    outer_acc(grad.W_co, da_o, cc.c);
    add_in_place(dc, matvec_t(p.W_co, da_o));
    // shortcut path
    if (p.identity_shortcut) {
      add_in_place(d_x, ds);
    } else {
      outer_acc(grad.W_h, ds, cc.x);
      add_in_place(d_x, matvec_t(p.W_h, ds));
    }
    // projection path
    outer_acc(grad.W_p, dm, cc.r);
    add_in_place(dc, dtanh_from_y(cc.tc, matvec_t(p.W_p, dm)));
  } else {
    // h = W_p r, r = o.tc
    Vector dr = matvec_t(p.W_p, d_h);
    outer_acc(grad.W_p, d_h, cc.r);
    Vector do_ = hadamard(dr, cc.tc);
    add_in_place(dc, dtanh_from_y(cc.tc, hadamard(dr, cc.o)));
    da_o = dsigmoid_from_y(cc.o, do_);
    for (int j = 0; j < N; ++j) {
      grad.p_co[j] += da_o[j] * cc.c[j];
      dc[j] += da_o[j] * p.p_co[j];
    }
  }

  // common o-gate affine terms
  outer_acc(grad.W_xo, da_o, cc.x);
  outer_acc(grad.W_ho, da_o, cc.h_prev);
  add_in_place(grad.b_o, da_o);
  add_in_place(d_x, matvec_t(p.W_xo, da_o));
  add_in_place(d_h_prev, matvec_t(p.W_ho, da_o));

  if (p.has_depth_gate) {
    Vector dd = hadamard(dc, cc.c_below);
    Vector da_d = dsigmoid_from_y(cc.d, dd);
    for (int j = 0; j < N; ++j) {
      (*d_c_below)[j] = dc[j] * cc.d[j] + da_d[j] * p.p_cd_below[j];
      grad.p_cd_same[j] += da_d[j] * cc.c_prev[j];
      grad.p_cd_below[j] += da_d[j] * cc.c_below[j];
      d_c_prev[j] += da_d[j] * p.p_cd_same[j];
    }
    outer_acc(grad.W_xd, da_d, cc.x);
    add_in_place(grad.b_d, da_d);
    add_in_place(d_x, matvec_t(p.W_xd, da_d));
  }

  // c = f.c_prev + i.g (+ d.c_below)
  Vector di = hadamard(dc, cc.g);
  Vector df = hadamard(dc, cc.c_prev);
  Vector dg = hadamard(dc, cc.i);
  for (int j = 0; j < N; ++j) d_c_prev[j] += dc[j] * cc.f[j];

  Vector da_i = dsigmoid_from_y(cc.i, di);
  Vector da_f = dsigmoid_from_y(cc.f, df);
  Vector da_g = dtanh_from_y(cc.g, dg);

  outer_acc(grad.W_xi, da_i, cc.x);
  outer_acc(grad.W_hi, da_i, cc.h_prev);
  add_in_place(grad.b_i, da_i);
  outer_acc(grad.W_xf, da_f, cc.x);
  outer_acc(grad.W_hf, da_f, cc.h_prev);
  add_in_place(grad.b_f, da_f);
  outer_acc(grad.W_xc, da_g, cc.x);
  outer_acc(grad.W_hc, da_g, cc.h_prev);
  add_in_place(grad.b_c, da_g);
  for (int j = 0; j < N; ++j) {
    grad.p_ci[j] += da_i[j] * cc.c_prev[j];
    grad.p_cf[j] += da_f[j] * cc.c_prev[j];
    d_c_prev[j] += da_i[j] * p.p_ci[j] + da_f[j] * p.p_cf[j];
  }
  add_in_place(d_x, matvec_t(p.W_xi, da_i));
  add_in_place(d_x, matvec_t(p.W_xf, da_f));
  add_in_place(d_x, matvec_t(p.W_xc, da_g));
  add_in_place(d_h_prev, matvec_t(p.W_hi, da_i));
  add_in_place(d_h_prev, matvec_t(p.W_hf, da_f));
  add_in_place(d_h_prev, matvec_t(p.W_hc, da_g));
}

}  // namespace reslstm
