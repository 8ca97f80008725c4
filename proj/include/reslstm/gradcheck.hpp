// Central finite-difference oracle, independent of the analytical backward
// passes it validates: it only ever calls forward code through a scalar
// objective.
#pragma once

#include <functional>
#include <iomanip>

#include "reslstm/network.hpp"

namespace reslstm {

// Flat-vector variant: central differences on each coordinate.
template <class F>
Vector numeric_grad(F&& objective, const Vector& p0, double eps = 1e-5) {
  require(eps > 0.0, "numeric_grad: eps must be positive");
  Vector p = p0;
  Vector g(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + eps;
    const double up = objective(p);
    p[i] = saved - eps;
    const double dn = objective(p);
    p[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(dn))
      throw std::runtime_error("numeric_grad: non-finite objective at coordinate " +
                               std::to_string(i));
    g[i] = (up - dn) / (2.0 * eps);
  }
  return g;
}

// Network variant: perturbs every scalar of every tensor.
template <class F>
Gradients numeric_grad_net(F&& objective, const StackedNetwork& net,
                           double eps = 1e-5) {
  require(eps > 0.0, "numeric_grad_net: eps must be positive");
  StackedNetwork work = net;
  Gradients g = zeros_like(net);
  std::vector<std::vector<double>*> grad_tensors;
  for_each_tensor(g, [&](const std::string&, std::vector<double>& t, bool) {
    grad_tensors.push_back(&t);
  });
  size_t k = 0;
  for_each_tensor(work, [&](const std::string& name, std::vector<double>& t, bool) {
    std::vector<double>& gt = *grad_tensors[k++];
    for (size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = objective(work);
      t[i] = saved - eps;
      const double dn = objective(work);
      t[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(dn))
        throw std::runtime_error("numeric_grad_net: non-finite objective at " +
                                 name + "[" + std::to_string(i) + "]");
      gt[i] = (up - dn) / (2.0 * eps);
    }
  });
  return g;
}

// |a-b| / max(|a|, |b|, 1e-8), maximized over scalars.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

inline double max_rel_error(const Gradients& a, const Gradients& b) {
  std::vector<const std::vector<double>*> bt;
  for_each_tensor(const_cast<Gradients&>(b),
                  [&](const std::string&, std::vector<double>& t, bool) {
                    bt.push_back(&t);
                  });
  double mx = 0.0;
  size_t k = 0;
  for_each_tensor(const_cast<Gradients&>(a),
                  [&](const std::string& name, std::vector<double>& t, bool) {
                    const auto& u = *bt[k++];
                    require(u.size() == t.size(),
                            "max_rel_error: shape mismatch at " + name);
                    for (size_t i = 0; i < t.size(); ++i)
                      mx = std::max(mx, rel_error(t[i], u[i]));
                  });
  return mx;
}

struct GradCheckReport {
  CellKind kind = CellKind::plain;
  int N = 0, K = 0, M = 0, T = 0, layers = 0;
  uint64_t seed = 0;
  double threshold = 1e-4;
  std::vector<std::pair<std::string, double>> per_tensor;  // max rel err each
  double global_max = 0.0;
  bool pass = false;
};

// Builds a small random network of the given kind, compares analytic BPTT
// gradients of the mean cross-entropy against central differences on every
// tensor (peepholes, depth gates, shortcut, head included).
// corrupt_analytic is a negative-control hook: it perturbs one analytic
// gradient scalar so the check must fail.
inline GradCheckReport check_cell(CellKind kind, int N, int K, int M, int T,
                                  int layers = 1, uint64_t seed = 8,
                                  double threshold = 1e-4, double eps = 1e-5,
                                  int bptt_len = 0, bool corrupt_analytic = false) {
  GradCheckReport rep;
  rep.kind = kind;
  rep.N = N; rep.K = K; rep.M = M; rep.T = T;
  rep.layers = layers;
  rep.seed = seed;
  rep.threshold = threshold;

  NetworkConfig cfg{kind, layers, N, M, K, /*num_classes=*/3, seed};
  // Larger init scale than training uses: keeps gradients well above the
  // 1e-8 relative-error floor, where central-difference noise would dominate.
  StackedNetwork net = make_network(cfg, /*init_scale=*/0.8);
  if (bptt_len <= 0) bptt_len = T;

  Rng rng(Rng::derive(seed, /*tag=*/0x676331ULL));
  std::vector<Vector> inputs(T, Vector(K));
  std::vector<int> labels(T);
  for (auto& fr : inputs)
    for (auto& v : fr) v = rng.gaussian();
  for (auto& lb : labels) lb = (int)rng.below(cfg.num_classes);

  auto [loss, analytic] = loss_and_grads(net, inputs, labels, bptt_len);
  (void)loss;
  if (corrupt_analytic) analytic.layer[0].W_xi.d[0] += 1e-2;
  Gradients numeric = numeric_grad_net(
      [&](const StackedNetwork& n) {
        return loss_and_grads(n, inputs, labels, bptt_len).first;
      },
      net, eps);

  std::vector<const std::vector<double>*> nt;
  for_each_tensor(numeric, [&](const std::string&, std::vector<double>& t, bool) {
    nt.push_back(&t);
  });
  size_t k = 0;
  for_each_tensor(analytic, [&](const std::string& name, std::vector<double>& t, bool) {
    const auto& u = *nt[k++];
    double mx = 0.0;
    for (size_t i = 0; i < t.size(); ++i) mx = std::max(mx, rel_error(t[i], u[i]));
    rep.per_tensor.push_back({name, mx});
    rep.global_max = std::max(rep.global_max, mx);
  });
  rep.pass = rep.global_max < threshold;
  return rep;
}

inline void print_report(const GradCheckReport& rep, std::ostream& os) {
  os << "gradcheck cell=" << cell_kind_name(rep.kind) << " N=" << rep.N
     << " K=" << rep.K << " M=" << rep.M << " T=" << rep.T
     << " layers=" << rep.layers << " seed=" << rep.seed << "\n";
  for (const auto& [name, err] : rep.per_tensor)
    os << "  " << std::left << std::setw(18) << name << std::scientific
       << std::setprecision(3) << err << "\n";
  os << "  global max rel error: " << std::scientific << std::setprecision(3)
     << rep.global_max << " (threshold " << rep.threshold << ") -> "
     << (rep.pass ? "PASS" : "FAIL") << "\n";
  os.copyfmt(std::ios(nullptr));
}

}  // namespace reslstm
