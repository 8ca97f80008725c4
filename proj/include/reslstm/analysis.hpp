// Parameter accounting for the three architectures and a Monte-Carlo check
// of how output variance composes through stacked shortcut layers under a
// fixed output gate.
#pragma once

#include <cstdint>

#include "reslstm/cells.hpp"

namespace reslstm {

// Scalar count of one layer, mirroring the shapes make_layer allocates.
inline long long layer_param_count(CellKind kind, int K, int N, int M,
                                   bool depth_gate) {
  const long long O = is_residual(kind) ? M : N;  // output-gate dimension
  long long n = 0;
  n += 3LL * N * K + O * K;     // W_xi, W_xf, W_xc, W_xo
  n += 3LL * N * M + O * M;     // W_hi, W_hf, W_hc, W_ho
  n += 2LL * N;                 // p_ci, p_cf
  n += is_residual(kind) ? (long long)M * N : N;  // W_co vs p_co
  n += 3LL * N + O;             // b_i, b_f, b_c, b_o
  n += (long long)M * N;        // W_p
  if (depth_gate) n += (long long)N * K + 3LL * N;  // W_xd, p_cd_same/below, b_d
  if (is_residual(kind) && K != M) n += (long long)M * K;  // W_h
  return n;
}

// The depth-gate extras a highway layer adds on top of a plain one.
inline long long highway_extras_count(int N, int K) {
  return (long long)N * K + 3LL * N;
}

// Closed-form per-layer overhead, N^2/2 + 4N (for M = N/2 this
// differs from the shape-derived extras count by exactly N; both are always
// reported side by side).
inline long long closed_form_extras(int N) {
  require(N > 0 && N % 2 == 0, "closed_form_extras: N must be positive and even");
  return (long long)N * N / 2 + 4LL * N;
}

struct ParamCountReport {
  int layers = 0, N = 0, M = 0, D = 0, C = 0;
  bool include_head = false;
  std::vector<long long> plain_per_layer, highway_per_layer, residual_per_layer;
  long long plain_total = 0, highway_total = 0, residual_total = 0;
  long long highway_minus_residual = 0;
  double relative_reduction = 0.0;  // (highway - residual) / highway
  long long extras_shape_count = 0;   // per-layer depth-gate extras, from shapes
  long long extras_closed_form = 0; // N^2/2 + 4N closed form
};

inline std::vector<long long> count_params(CellKind kind, int L, int N, int M,
                                           int D, int C, bool include_head,
                                           long long* total = nullptr) {
  require(L >= 1 && N > 0 && M > 0 && D > 0 && C > 0, "count_params: bad dims");
  std::vector<long long> per_layer;
  long long sum = 0;
  for (int l = 1; l <= L; ++l) {
    const int K = (l == 1) ? D : M;
    CellKind lk = kind;
    bool depth_gate = false;
    if (kind == CellKind::highway) {
      if (l == 1) lk = CellKind::plain;  // no lower cell at layer 1
      else depth_gate = true;
    }
    per_layer.push_back(layer_param_count(lk, K, N, M, depth_gate));
    sum += per_layer.back();
  }
  if (include_head) sum += (long long)C * M + C;
  if (total) *total = sum;
  return per_layer;
}

inline ParamCountReport count_report(int L, int N, int M, int D, int C,
                                     bool include_head = false) {
  ParamCountReport r;
  r.layers = L; r.N = N; r.M = M; r.D = D; r.C = C;
  r.include_head = include_head;
  r.plain_per_layer =
      count_params(CellKind::plain, L, N, M, D, C, include_head, &r.plain_total);
  r.highway_per_layer =
      count_params(CellKind::highway, L, N, M, D, C, include_head, &r.highway_total);
  r.residual_per_layer = count_params(CellKind::residual_scaled, L, N, M, D, C,
                                      include_head, &r.residual_total);
  r.highway_minus_residual = r.highway_total - r.residual_total;
  r.relative_reduction =
      (double)r.highway_minus_residual / (double)r.highway_total;
  r.extras_shape_count = highway_extras_count(N, M);  // layers >= 2 have K = M
  r.extras_closed_form = (N % 2 == 0) ? closed_form_extras(N) : 0;
  return r;
}

// ---------------------------------------------------------------------------
// Variance propagation under the idealized assumptions: unit-variance
// independent m^l and x, output gate frozen at a constant.
//   scaled:    h^l = gate * (m^l + h^{l-1})
//   unscaled:  h^l = gate * m^l + h^{l-1}
// With gate = 1/sqrt(2) the scaled recursion has fixed-point variance 1; the
// unscaled one grows linearly (l/2 + 1).
// ---------------------------------------------------------------------------
struct VarianceReport {
  int layers = 0;
  double gate = 0.0;
  bool scaled = true;
  long long samples = 0;
  uint64_t seed = 0;
  std::vector<double> layer_variance;  // index l-1 -> Var(h^l)
};

inline VarianceReport variance_sweep(int L, double gate, bool scaled,
                                     long long samples, uint64_t seed) {
  require(L >= 1, "variance_sweep: layers must be >= 1");
  require(gate > 0.0 && gate <= 1.0, "variance_sweep: gate must be in (0, 1]");
  require(samples >= 10000, "variance_sweep: need at least 1e4 samples");
  VarianceReport rep{L, gate, scaled, samples, seed, {}};
  std::vector<double> sum(L, 0.0), sumsq(L, 0.0);
  Rng rng(Rng::derive(seed, /*tag=*/0x766172ULL));  // "var"
  for (long long s = 0; s < samples; ++s) {
    double h = rng.gaussian();  // x, unit variance
    for (int l = 0; l < L; ++l) {
      const double m = rng.gaussian();
      h = scaled ? gate * (m + h) : gate * m + h;
      sum[l] += h;
      sumsq[l] += h * h;
    }
  }
  rep.layer_variance.resize(L);
  for (int l = 0; l < L; ++l) {
    const double mean = sum[l] / samples;
    rep.layer_variance[l] = sumsq[l] / samples - mean * mean;
  }
  return rep;
}

// Closed-form variances under the same assumptions, for cross-checking.
inline double variance_closed_form(int l, double gate, bool scaled) {
  if (scaled) {
    // Var(h^l) = g^2 (1 + Var(h^{l-1})), Var(h^0) = 1
    double v = 1.0;
    for (int i = 0; i < l; ++i) v = gate * gate * (1.0 + v);
    return v;
  }
  return gate * gate * l + 1.0;
}

}  // namespace reslstm
