#include "spikenn/ann_engine.hpp"

#include "spikenn/rounding.hpp"

#include <cmath>

namespace spikenn {

Vec top_error(const Vec& logits, int label, Real alpha) {
  if (label < 0 || label >= logits.size())
    throw ShapeError("top_error: label " + std::to_string(label) +
                     " out of range for " + std::to_string(logits.size()) +
                     " classes");
  auto [loss, grad] = softmax_cross_entropy(logits, label);
  (void)loss;
  return (alpha * grad).unaryExpr([](Real v) { return snap_to_grid(v); });
}

Vec encode_input(const Vec& image, InputMode mode, int input_scale) {
  if (mode == InputMode::kAnalogFirstLayer) return image;
  Vec counts(image.size());
  for (Index j = 0; j < image.size(); ++j)
    counts[j] = static_cast<Real>(std::llround(image[j] * input_scale));
  return counts;
}

std::pair<Real, Vec> softmax_cross_entropy(const Vec& logits, int label) {
  if (!logits.allFinite())
    throw ShapeError("softmax_cross_entropy: non-finite logits");
  if (label < 0 || label >= logits.size())
    throw ShapeError("softmax_cross_entropy: label out of range");
  const Real m = logits.maxCoeff();
  Vec ex = (logits.array() - m).exp();
  const Real sum = ex.sum();
  Vec p = ex / sum;
  Real loss = std::log(sum) - (logits[label] - m);
  p[label] -= 1.0;
  return {loss, std::move(p)};
}

namespace {

VecI round_counts(const Vec& numer, Activation act, Real theta,
                  RoundingMode mode) {
  VecI counts(numer.size());
  for (Index i = 0; i < numer.size(); ++i) {
    if (act == Activation::kRelu && numer[i] <= 0.0)
      counts[i] = 0;
    else
      counts[i] = round_ratio(numer[i], theta, mode);
  }
  return counts;
}

}  // namespace

IntegerActivations ann_forward_integer(const Network& net, const Vec& input,
                                       RoundingMode mode) {
  const Index L = net.layer_count();
  if (input.size() != net.topo.input.count())
    throw ShapeError("forward: input size " + std::to_string(input.size()) +
                     " does not match network input " +
                     std::to_string(net.topo.input.count()));

  IntegerActivations acts;
  acts.input = input;
  acts.numer.resize(L);
  acts.counts.resize(L);
  acts.sprime.resize(L);

  Vec prev = input;
  for (Index l = 0; l < L; ++l) {
    const LayerSpec& spec = net.spec(l);
    acts.numer[l] = forward_numerator(spec, net.params[l], prev);
    if (l == L - 1) break;  // logits layer: no spiking
    acts.counts[l] =
        round_counts(acts.numer[l], spec.activation, net.theta_ff, mode);
    acts.sprime[l].resize(acts.numer[l].size());
    for (Index i = 0; i < acts.numer[l].size(); ++i)
      acts.sprime[l][i] = (spec.activation == Activation::kLinear ||
                           acts.numer[l][i] > 0.0)
                              ? 1
                              : 0;
    prev = acts.counts[l].cast<Real>();
  }
  return acts;
}

std::pair<IntegerErrors, GradientAccumulator> ann_backward_integer(
    const Network& net, const IntegerActivations& acts, int label, Real alpha,
    Real eta_eff, RoundingMode mode) {
  const Index L = net.layer_count();
  if (static_cast<Index>(acts.numer.size()) != L || acts.numer[L - 1].size() == 0)
    throw InternalError("ann_backward_integer: forward pass missing");

  IntegerErrors errs;
  errs.numer.resize(L);
  errs.z.resize(L);
  errs.e.resize(L);

  errs.numer[L - 1] = top_error(acts.logits(), label, alpha);
  for (Index l = L - 1; l >= 0; --l) {
    if (l < L - 1)
      errs.numer[l] = backward_numerator(net.spec(l + 1), net.params[l + 1],
                                         errs.e[l + 1].cast<Real>());
    errs.z[l].resize(errs.numer[l].size());
    for (Index i = 0; i < errs.numer[l].size(); ++i)
      errs.z[l][i] = round_ratio(errs.numer[l][i], net.theta_bp, mode);
    if (l == L - 1) {
      errs.e[l] = errs.z[l];  // top layer is linear: derivative 1
    } else {
      errs.e[l].resize(errs.z[l].size());
      for (Index i = 0; i < errs.z[l].size(); ++i)
        errs.e[l][i] = acts.sprime[l][i] ? errs.z[l][i] : 0;
    }
  }

  GradientAccumulator grads = GradientAccumulator::zeros_like(net);
  for (Index l = 0; l < L; ++l) {
    if (!net.params[l].trainable) continue;
    Vec below = l == 0 ? acts.input : acts.counts[l - 1].cast<Real>().eval();
    accumulate_weight_grad(net.spec(l), errs.e[l].cast<Real>(), below,
                           -eta_eff, grads.dw[l]);
  }
  return {std::move(errs), std::move(grads)};
}

FloatActivations ann_forward_float(const Network& net, const Vec& input) {
  const Index L = net.layer_count();
  if (input.size() != net.topo.input.count())
    throw ShapeError("forward: input size mismatch");

  FloatActivations acts;
  acts.input = input;
  acts.preact.resize(L);
  acts.act.resize(L);

  Vec prev = input;
  for (Index l = 0; l < L; ++l) {
    const LayerSpec& spec = net.spec(l);
    Vec numer = forward_numerator(spec, net.params[l], prev);
    if (l == L - 1) {
      acts.preact[l] = numer;  // raw logits
      break;
    }
    acts.preact[l] = numer / net.theta_ff;
    acts.act[l] = spec.activation == Activation::kRelu
                      ? acts.preact[l].cwiseMax(0.0).eval()
                      : acts.preact[l];
    prev = acts.act[l];
  }
  return acts;
}

GradientAccumulator ann_backward_float(const Network& net,
                                       const FloatActivations& acts, int label,
                                       Real alpha) {
  const Index L = net.layer_count();
  auto [loss, grad] = softmax_cross_entropy(acts.logits(), label);
  (void)loss;

  std::vector<Vec> e(L);
  e[L - 1] = alpha * grad;
  for (Index l = L - 2; l >= 0; --l) {
    Vec numer = backward_numerator(net.spec(l + 1), net.params[l + 1], e[l + 1]) /
                net.theta_bp;
    if (net.spec(l).activation == Activation::kRelu)
      for (Index i = 0; i < numer.size(); ++i)
        if (acts.preact[l][i] <= 0.0) numer[i] = 0.0;
    e[l] = std::move(numer);
  }

  GradientAccumulator grads = GradientAccumulator::zeros_like(net);
  for (Index l = 0; l < L; ++l) {
    if (!net.params[l].trainable) continue;
    const Vec& below = l == 0 ? acts.input : acts.act[l - 1];
    accumulate_weight_grad(net.spec(l), e[l], below, 1.0, grads.dw[l]);
  }
  return grads;
}

}  // namespace spikenn
