// Dense double-precision vectors/matrices and the elementwise primitives the
// recurrent cells are built from. Deliberately small: no BLAS, no expression
// templates, row-major storage throughout.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace reslstm {

using Vector = std::vector<double>;

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> d;  // row-major, size rows*cols

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), d(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  double& at(int i, int j) { return d[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return d[static_cast<size_t>(i) * cols + j]; }
  bool empty() const { return d.empty(); }
  size_t size() const { return d.size(); }
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline Matrix identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

// out = W x + b
inline Vector affine(const Matrix& W, const Vector& x, const Vector& b) {
  require(W.cols == (int)x.size(),
          "affine: W is " + std::to_string(W.rows) + "x" + std::to_string(W.cols) +
              " but x has length " + std::to_string(x.size()));
  require(W.rows == (int)b.size(),
          "affine: W has " + std::to_string(W.rows) + " rows but b has length " +
              std::to_string(b.size()));
  Vector out(b);
  const double* w = W.d.data();
  for (int i = 0; i < W.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < W.cols; ++j) acc += w[static_cast<size_t>(i) * W.cols + j] * x[j];
    out[i] += acc;
  }
  return out;
}

inline Vector matvec(const Matrix& W, const Vector& x) {
  return affine(W, x, Vector(W.rows, 0.0));
}

// out = W^T y
inline Vector matvec_t(const Matrix& W, const Vector& y) {
  require(W.rows == (int)y.size(),
          "matvec_t: W has " + std::to_string(W.rows) + " rows but y has length " +
              std::to_string(y.size()));
  Vector out(W.cols, 0.0);
  for (int i = 0; i < W.rows; ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (int j = 0; j < W.cols; ++j) out[j] += W.at(i, j) * yi;
  }
  return out;
}

// A += y x^T
inline void outer_acc(Matrix& A, const Vector& y, const Vector& x) {
  require(A.rows == (int)y.size() && A.cols == (int)x.size(),
          "outer_acc: shape mismatch");
  for (int i = 0; i < A.rows; ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (int j = 0; j < A.cols; ++j) A.at(i, j) += yi * x[j];
  }
}

// y += a (elementwise)
inline void add_in_place(Vector& y, const Vector& a) {
  require(y.size() == a.size(), "add_in_place: length mismatch");
  for (size_t i = 0; i < y.size(); ++i) y[i] += a[i];
}

inline Vector hadamard(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "hadamard: length mismatch");
  Vector out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return out;
}

inline Vector tanh_elem(const Vector& v) {
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

inline bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Seeded RNG. A fixed, named algorithm (splitmix64) so datasets and
// initializations are reproducible bit-for-bit across platforms; platform
// <random> distributions are not portable.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    // splitmix64 (Steele/Lea/Flood)
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // index in [0, n)
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // standard normal via Box-Muller on the splitmix stream
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Deterministic sub-stream derivation: every component seeds itself from
  // the experiment seed and a fixed tag through this one rule.
  static uint64_t derive(uint64_t seed, uint64_t tag) {
    Rng r(seed ^ (tag * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
    return r.next_u64();
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline Matrix init_uniform(int rows, int cols, double scale, Rng& rng) {
  require(scale > 0.0, "init_uniform: scale must be positive");
  Matrix m(rows, cols);
  for (auto& x : m.d) x = rng.uniform(-scale, scale);
  return m;
}

inline Vector init_uniform_vec(int len, double scale, Rng& rng) {
  require(scale > 0.0, "init_uniform_vec: scale must be positive");
  Vector v(len);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

}  // namespace reslstm
