#include "scenefuse/nn/mixup.hpp"

#include <algorithm>
#include <numeric>

namespace sf::nn {

double sample_beta(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::spec, "mixup alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double a = gamma(rng);
  const double b = gamma(rng);
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

MixupDraw draw_mixup(std::size_t batch, double alpha, Rng& rng) {
  if (batch < 2) throw Error(ErrorKind::too_small_batch, "mixup needs at least 2 samples");
  MixupDraw draw;
  draw.coefficient = sample_beta(alpha, rng);
  draw.partner.resize(batch);
  std::iota(draw.partner.begin(), draw.partner.end(), std::size_t{0});
  // Fisher-Yates with an explicit uniform draw keeps the order independent of
  // the standard library's shuffle implementation.
  for (std::size_t i = batch - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(draw.partner[i], draw.partner[pick(rng)]);
  }
  return draw;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> mixup_batch(const Tensor<T>& x, const Tensor<T>& y, const MixupDraw& draw) {
  if (x.rank() == 0 || y.rank() != 2 || x.dim(0) != y.dim(0)) {
    throw Error(ErrorKind::shape, "mixup inputs " + shape_string(x.shape()) + " and labels " +
                                      shape_string(y.shape()) + " disagree");
  }
  const std::size_t n = x.dim(0);
  if (n < 2) throw Error(ErrorKind::too_small_batch, "mixup needs at least 2 samples");
  if (draw.partner.size() != n || !(draw.coefficient >= 0.0 && draw.coefficient <= 1.0)) {
    throw Error(ErrorKind::spec, "mixup draw does not fit the batch");
  }
  std::vector<bool> seen(n, false);
  for (std::size_t j : draw.partner) {
    if (j >= n || seen[j]) throw Error(ErrorKind::spec, "mixup partner list is not a permutation");
    seen[j] = true;
  }

  const T m = static_cast<T>(draw.coefficient);
  const T rest = static_cast<T>(1.0 - draw.coefficient);
  auto mix = [&](const Tensor<T>& src) {
    Tensor<T> out(src.shape());
    const std::size_t stride = src.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
      const T* a = src.data() + i * stride;
      const T* b = src.data() + draw.partner[i] * stride;
      T* o = out.data() + i * stride;
      for (std::size_t k = 0; k < stride; ++k) o[k] = m * a[k] + rest * b[k];
    }
    return out;
  };
  return {mix(x), mix(y)};
}

template std::pair<Tensor<float>, Tensor<float>> mixup_batch(const Tensor<float>&, const Tensor<float>&,
                                                             const MixupDraw&);
template std::pair<Tensor<double>, Tensor<double>> mixup_batch(const Tensor<double>&, const Tensor<double>&,
                                                               const MixupDraw&);

}  // namespace sf::nn
