#include "nsa/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nsa/error.hpp"
#include "nsa/rng.hpp"

namespace nsa {

MlpParams MlpParams::zeros(int in, int out, int hidden) {
  MlpParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, in);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::MatrixXd::Zero(out, hidden);
  p.b2 = Eigen::VectorXd::Zero(out);
  return p;
}

MlpParams MlpParams::random(int in, int out, Rng& rng, int hidden) {
  MlpParams p = zeros(in, out, hidden);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int r = 0; r < hidden; ++r) {
    for (int c = 0; c < in; ++c) p.w1(r, c) = rng.uniform(-r1, r1);
  }
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < hidden; ++c) p.w2(r, c) = rng.uniform(-r2, r2);
  }
  return p;
}

std::size_t MlpParams::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() +
                                  b2.size());
}

void MlpParams::flatten_into(std::span<double> dst) const {
  if (dst.size() != parameter_count()) {
    throw ShapeError("flat buffer size does not match MLP parameter count");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1.cols(); ++c) dst[k++] = w1(r, c);
  }
  for (Eigen::Index r = 0; r < b1.size(); ++r) dst[k++] = b1(r);
  for (Eigen::Index r = 0; r < w2.rows(); ++r) {
    for (Eigen::Index c = 0; c < w2.cols(); ++c) dst[k++] = w2(r, c);
  }
  for (Eigen::Index r = 0; r < b2.size(); ++r) dst[k++] = b2(r);
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out(parameter_count());
  flatten_into(out);
  return out;
}

void MlpParams::assign(std::span<const double> src) {
  if (src.size() != parameter_count()) {
    throw ShapeError("flat buffer of " + std::to_string(src.size()) +
                     " values does not match MLP with " +
                     std::to_string(parameter_count()) + " parameters");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1.cols(); ++c) w1(r, c) = src[k++];
  }
  for (Eigen::Index r = 0; r < b1.size(); ++r) b1(r) = src[k++];
  for (Eigen::Index r = 0; r < w2.rows(); ++r) {
    for (Eigen::Index c = 0; c < w2.cols(); ++c) w2(r, c) = src[k++];
  }
  for (Eigen::Index r = 0; r < b2.size(); ++r) b2(r) = src[k++];
}

void MlpParams::set_zero() {
  w1.setZero();
  b1.setZero();
  w2.setZero();
  b2.setZero();
}

bool MlpParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() &&
         b2.allFinite();
}

MlpParams& MlpParams::operator+=(const MlpParams& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
  return *this;
}

MlpParams& MlpParams::operator*=(double s) {
  w1 *= s;
  b1 *= s;
  w2 *= s;
  b2 *= s;
  return *this;
}

Eigen::VectorXd mlp_forward(const MlpParams& params,
                            std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.in()) {
    throw ShapeError("MLP expects " + std::to_string(params.in()) +
                     " inputs, got " + std::to_string(input.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> x(input.data(),
                                            static_cast<Eigen::Index>(input.size()));
  const Eigen::VectorXd h = (params.w1 * x + params.b1).cwiseMax(0.0);
  return params.w2 * h + params.b2;
}

void PointwiseForward::run(const MlpParams& params,
                           const FeatureRef& features) {
  if (features.cols() != params.in()) {
    throw ShapeError("feature width " + std::to_string(features.cols()) +
                     " does not match MLP input " +
                     std::to_string(params.in()));
  }
  hidden_pre.noalias() = features * params.w1.transpose();
  hidden_pre.rowwise() += params.b1.transpose();
  output.noalias() = hidden_pre.cwiseMax(0.0) * params.w2.transpose();
  output.rowwise() += params.b2.transpose();
}

void mlp_backward_accumulate(const MlpParams& params,
                             const FeatureRef& features,
                             const PointwiseForward& forward,
                             const Eigen::Ref<const Eigen::MatrixXd>& d_output,
                             MlpParams& grad) {
  const FeatureMatrix hidden = forward.hidden_pre.cwiseMax(0.0);
  grad.w2.noalias() += d_output.transpose() * hidden;
  grad.b2 += d_output.colwise().sum().transpose();
  // ReLU subgradient at 0 is 0.
  FeatureMatrix d_hidden = d_output * params.w2;
  d_hidden = (forward.hidden_pre.array() > 0.0).select(d_hidden, 0.0);
  grad.w1.noalias() += d_hidden.transpose() * features;
  grad.b1 += d_hidden.colwise().sum().transpose();
}

namespace {

// Fixed-size kernels for the layouts used by the policies. Rows are processed
// in blocks of eight held in vector registers, so the hidden units form
// independent dependency chains. Per-lane gradient accumulators are reduced
// in a fixed order at the end.
typedef double Lanes __attribute__((vector_size(64)));
constexpr int kLanes = 8;

template <int In, int Out>
struct BlockKernel {
  static constexpr int H = kHiddenUnits;
  double w1[H][In];
  double b1[H];
  double w2[Out][H];
  double b2[Out];

  explicit BlockKernel(const MlpParams& p) {
    for (int j = 0; j < H; ++j) {
      for (int c = 0; c < In; ++c) w1[j][c] = p.w1(j, c);
      b1[j] = p.b1(j);
    }
    for (int o = 0; o < Out; ++o) {
      for (int j = 0; j < H; ++j) w2[o][j] = p.w2(o, j);
      b2[o] = p.b2(o);
    }
  }

  static int load(const FeatureRef& f, Eigen::Index r0, Lanes (&x)[In]) {
    const int n = static_cast<int>(std::min<Eigen::Index>(kLanes, f.rows() - r0));
    for (int c = 0; c < In; ++c) x[c] = Lanes{};
    for (int l = 0; l < n; ++l) {
      const double* row = f.row(r0 + l).data();
      for (int c = 0; c < In; ++c) x[c][l] = row[c];
    }
    return n;
  }

  void hidden(const Lanes (&x)[In], Lanes (&a)[H]) const {
    for (int j = 0; j < H; ++j) a[j] = Lanes{} + b1[j];
    for (int c = 0; c < In; ++c) {
      for (int j = 0; j < H; ++j) a[j] += w1[j][c] * x[c];
    }
  }

  void forward(const FeatureRef& f, Eigen::MatrixXd& out) const {
    out.resize(f.rows(), Out);
    const Lanes zero{};
    Lanes x[In];
    Lanes a[H];
    for (Eigen::Index r0 = 0; r0 < f.rows(); r0 += kLanes) {
      const int n = load(f, r0, x);
      hidden(x, a);
      for (int o = 0; o < Out; ++o) {
        Lanes y = zero + b2[o];
        for (int j = 0; j < H; ++j) y += w2[o][j] * (a[j] > zero ? a[j] : zero);
        for (int l = 0; l < n; ++l) out(r0 + l, o) = y[l];
      }
    }
  }

  void backward(const FeatureRef& f, const Eigen::Ref<const Eigen::MatrixXd>& d,
                MlpParams& grad) const {
    const Lanes zero{};
    Lanes gw1[H][In];
    Lanes gb1[H];
    Lanes gw2[Out][H];
    Lanes gb2[Out];
    for (int j = 0; j < H; ++j) {
      for (int c = 0; c < In; ++c) gw1[j][c] = zero;
      gb1[j] = zero;
    }
    for (int o = 0; o < Out; ++o) {
      for (int j = 0; j < H; ++j) gw2[o][j] = zero;
      gb2[o] = zero;
    }
    Lanes x[In];
    Lanes a[H];
    Lanes g[Out];
    for (Eigen::Index r0 = 0; r0 < f.rows(); r0 += kLanes) {
      const int n = static_cast<int>(std::min<Eigen::Index>(kLanes, f.rows() - r0));
      bool any = false;
      for (int o = 0; o < Out; ++o) {
        g[o] = zero;
        for (int l = 0; l < n; ++l) {
          g[o][l] = d(r0 + l, o);
          any = any || g[o][l] != 0.0;
        }
      }
      if (!any) continue;
      load(f, r0, x);
      hidden(x, a);
      for (int o = 0; o < Out; ++o) gb2[o] += g[o];
      for (int j = 0; j < H; ++j) {
        Lanes dh = zero;
        const Lanes h = a[j] > zero ? a[j] : zero;
        for (int o = 0; o < Out; ++o) {
          gw2[o][j] += g[o] * h;
          dh += g[o] * w2[o][j];
        }
        // ReLU subgradient at 0 is 0.
        dh = a[j] > zero ? dh : zero;
        gb1[j] += dh;
        for (int c = 0; c < In; ++c) gw1[j][c] += dh * x[c];
      }
    }
    auto sum = [](const Lanes& v) {
      double s = 0.0;
      for (int l = 0; l < kLanes; ++l) s += v[l];
      return s;
    };
    for (int j = 0; j < H; ++j) {
      for (int c = 0; c < In; ++c) grad.w1(j, c) += sum(gw1[j][c]);
      grad.b1(j) += sum(gb1[j]);
    }
    for (int o = 0; o < Out; ++o) {
      for (int j = 0; j < H; ++j) grad.w2(o, j) += sum(gw2[o][j]);
      grad.b2(o) += sum(gb2[o]);
    }
  }
};

// Calls fn(kernel) with the fixed-size kernel for params, or returns false
// when the shape has no specialization.
template <class Fn>
bool with_kernel(const MlpParams& p, Fn&& fn) {
  if (p.hidden() != kHiddenUnits) return false;
  const int in = p.in();
  const int out = p.out();
  if (out == 1) {
    switch (in) {
      case 3: fn(BlockKernel<3, 1>(p)); return true;
      case 5: fn(BlockKernel<5, 1>(p)); return true;
      case 7: fn(BlockKernel<7, 1>(p)); return true;
      case 13: fn(BlockKernel<13, 1>(p)); return true;
      case 2: fn(BlockKernel<2, 1>(p)); return true;
      default: return false;
    }
  }
  if (out == 2 && in == 2) {
    fn(BlockKernel<2, 2>(p));
    return true;
  }
  return false;
}

void check_width(const MlpParams& params, const FeatureRef& features) {
  if (features.cols() != params.in()) {
    throw ShapeError("feature width " + std::to_string(features.cols()) +
                     " does not match MLP input " +
                     std::to_string(params.in()));
  }
}

}  // namespace

void pointwise_outputs(const MlpParams& params, const FeatureRef& features,
                       Eigen::MatrixXd& output) {
  check_width(params, features);
  if (with_kernel(params, [&](const auto& k) { k.forward(features, output); })) {
    return;
  }
  PointwiseForward fwd;
  fwd.run(params, features);
  output = std::move(fwd.output);
}

void pointwise_backward(const MlpParams& params, const FeatureRef& features,
                        const Eigen::Ref<const Eigen::MatrixXd>& d_output,
                        MlpParams& grad) {
  check_width(params, features);
  if (d_output.rows() != features.rows() || d_output.cols() != params.out()) {
    throw ShapeError("output gradient has the wrong shape");
  }
  if (with_kernel(params, [&](const auto& k) { k.backward(features, d_output, grad); })) {
    return;
  }
  PointwiseForward fwd;
  fwd.run(params, features);
  mlp_backward_accumulate(params, features, fwd, d_output, grad);
}

Eigen::VectorXd pointwise_logits(const MlpParams& params,
                                 const FeatureRef& features) {
  if (params.out() != 1) throw ShapeError("logit network must have one output");
  PointwiseForward fwd;
  fwd.run(params, features);
  return fwd.output.col(0);
}

}  // namespace nsa
