#include "spikenn/layer_ops.hpp"

namespace spikenn {

namespace {

inline Index flat(const Shape& s, Index c, Index y, Index x) {
  return (c * s.height + y) * s.width + x;
}

void check_size(const LayerSpec& spec, const Vec& act) {
  if (act.size() != spec.in_shape.count())
    throw ShapeError("layer input size " + std::to_string(act.size()) +
                     " does not match shape count " +
                     std::to_string(spec.in_shape.count()));
}

}  // namespace

void im2col(const LayerSpec& spec, const Vec& input, Mat& patches) {
  const Shape& in = spec.in_shape;
  const Shape& out = spec.out_shape;
  const Index k = spec.kernel;
  patches.setZero(in.channels * k * k, out.height * out.width);
  for (Index ci = 0; ci < in.channels; ++ci) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Index row = (ci * k + ky) * k + kx;
        for (Index oy = 0; oy < out.height; ++oy) {
          const Index y = oy * spec.stride + ky - spec.pad;
          if (y < 0 || y >= in.height) continue;
          for (Index ox = 0; ox < out.width; ++ox) {
            const Index x = ox * spec.stride + kx - spec.pad;
            if (x < 0 || x >= in.width) continue;
            patches(row, oy * out.width + ox) = input[flat(in, ci, y, x)];
          }
        }
      }
    }
  }
}

Vec forward_numerator(const LayerSpec& spec, const LayerParams& params,
                      const Vec& act) {
  check_size(spec, act);
  const Shape& out = spec.out_shape;

  switch (spec.kind) {
    case LayerKind::kFullyConnected:
      return params.weights * act + params.biases;

    case LayerKind::kConvolution: {
      Mat patches;
      im2col(spec, act, patches);
      Mat o = params.weights * patches;  // (out_c, outH*outW)
      o.colwise() += params.biases;
      Vec r(out.count());
      for (Index oc = 0; oc < out.channels; ++oc)
        for (Index p = 0; p < out.height * out.width; ++p)
          r[oc * out.height * out.width + p] = o(oc, p);
      return r;
    }

    case LayerKind::kAvgPool: {
      const Real inv = params.weights(0, 0);
      const Shape& in = spec.in_shape;
      Vec r = Vec::Zero(out.count());
      for (Index c = 0; c < in.channels; ++c)
        for (Index y = 0; y < in.height; ++y)
          for (Index x = 0; x < in.width; ++x)
            r[flat(out, c, y / spec.pool, x / spec.pool)] +=
                inv * act[flat(in, c, y, x)];
      return r;
    }
  }
  throw InternalError("forward_numerator: bad layer kind");
}

Vec backward_numerator(const LayerSpec& spec, const LayerParams& params,
                       const Vec& err) {
  if (err.size() != spec.out_shape.count())
    throw ShapeError("layer error size mismatch");
  const Shape& in = spec.in_shape;
  const Shape& out = spec.out_shape;

  switch (spec.kind) {
    case LayerKind::kFullyConnected:
      return params.weights.transpose() * err;

    case LayerKind::kConvolution: {
      // Transposed correlation: scatter W^T * err back through the patch map.
      const Index k = spec.kernel;
      const Index positions = out.height * out.width;
      Mat e(out.channels, positions);
      for (Index oc = 0; oc < out.channels; ++oc)
        for (Index p = 0; p < positions; ++p)
          e(oc, p) = err[oc * positions + p];
      Mat cols = params.weights.transpose() * e;  // (in_c*k*k, positions)
      Vec r = Vec::Zero(in.count());
      for (Index ci = 0; ci < in.channels; ++ci)
        for (Index ky = 0; ky < k; ++ky)
          for (Index kx = 0; kx < k; ++kx) {
            const Index row = (ci * k + ky) * k + kx;
            for (Index oy = 0; oy < out.height; ++oy) {
              const Index y = oy * spec.stride + ky - spec.pad;
              if (y < 0 || y >= in.height) continue;
              for (Index ox = 0; ox < out.width; ++ox) {
                const Index x = ox * spec.stride + kx - spec.pad;
                if (x < 0 || x >= in.width) continue;
                r[flat(in, ci, y, x)] += cols(row, oy * out.width + ox);
              }
            }
          }
      return r;
    }

    case LayerKind::kAvgPool: {
      const Real inv = params.weights(0, 0);
      Vec r(in.count());
      for (Index c = 0; c < in.channels; ++c)
        for (Index y = 0; y < in.height; ++y)
          for (Index x = 0; x < in.width; ++x)
            r[flat(in, c, y, x)] =
                inv * err[flat(out, c, y / spec.pool, x / spec.pool)];
      return r;
    }
  }
  throw InternalError("backward_numerator: bad layer kind");
}

void accumulate_weight_grad(const LayerSpec& spec, const Vec& err,
                            const Vec& act, Real scale, Mat& grad) {
  if (spec.kind == LayerKind::kAvgPool) return;
  check_size(spec, act);

  if (spec.kind == LayerKind::kFullyConnected) {
    grad.noalias() += scale * err * act.transpose();
    return;
  }

  const Shape& out = spec.out_shape;
  const Index positions = out.height * out.width;
  Mat patches;
  im2col(spec, act, patches);
  Mat e(out.channels, positions);
  for (Index oc = 0; oc < out.channels; ++oc)
    for (Index p = 0; p < positions; ++p)
      e(oc, p) = err[oc * positions + p];
  grad.noalias() += scale * e * patches.transpose();
}

Real max_abs_weight(const LayerSpec& spec, const LayerParams& params) {
  (void)spec;
  return params.weights.cwiseAbs().maxCoeff();
}

}  // namespace spikenn
