#pragma once

#include "reslstm/numerics.hpp"

namespace reslstm {

// Stable softmax (max-subtracted).
inline Vector softmax(const Vector& logits) {
  require(!logits.empty(), "softmax: empty logits");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  Vector out(logits.size());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (auto& v : out) v /= z;
  return out;
}

// -log softmax(logits)[label], computed as logsumexp(logits) - logits[label].
inline double cross_entropy(const Vector& logits, int label) {
  require(label >= 0 && label < (int)logits.size(),
          "cross_entropy: label " + std::to_string(label) + " out of range [0, " +
              std::to_string(logits.size()) + ")");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  return mx + std::log(z) - logits[label];
}

}  // namespace reslstm
