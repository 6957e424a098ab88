#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace nsa {

class Rng;

inline constexpr int kHiddenUnits = 16;

// One row per set element (item, bin, city).
using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FeatureRef = Eigen::Ref<const FeatureMatrix>;

// Two-layer perceptron in -> hidden -> out with a ReLU in between.
// Also used as the gradient container for itself.
struct MlpParams {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // out x hidden
  Eigen::VectorXd b2;  // out

  int in() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  int out() const { return static_cast<int>(w2.rows()); }

  static MlpParams zeros(int in, int out, int hidden = kHiddenUnits);
  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static MlpParams random(int in, int out, Rng& rng,
                          int hidden = kHiddenUnits);

  // hidden*in + hidden + out*hidden + out.
  std::size_t parameter_count() const;
  // Flat layout: w1 row-major, b1, w2 row-major, b2.
  void flatten_into(std::span<double> dst) const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> src);
  void set_zero();
  bool all_finite() const;

  MlpParams& operator+=(const MlpParams& other);
  MlpParams& operator*=(double s);
};

Eigen::VectorXd mlp_forward(const MlpParams& params,
                            std::span<const double> input);

// Forward pass over every row, keeping what backprop needs.
struct PointwiseForward {
  FeatureMatrix hidden_pre;  // rows x hidden, before ReLU
  Eigen::MatrixXd output;    // rows x out

  void run(const MlpParams& params, const FeatureRef& features);
};

// Accumulates into grad the parameter gradient of sum(d_output .* output).
void mlp_backward_accumulate(const MlpParams& params,
                             const FeatureRef& features,
                             const PointwiseForward& forward,
                             const Eigen::Ref<const Eigen::MatrixXd>& d_output,
                             MlpParams& grad);

// Outputs only, one row per feature row. Same values as PointwiseForward
// but computed row by row without keeping the hidden layer.
void pointwise_outputs(const MlpParams& params, const FeatureRef& features,
                       Eigen::MatrixXd& output);

// Accumulates the gradient of sum(d_output .* output) into grad, recomputing
// the hidden layer per row. Rows whose d_output is all zero are skipped.
void pointwise_backward(const MlpParams& params, const FeatureRef& features,
                        const Eigen::Ref<const Eigen::MatrixXd>& d_output,
                        MlpParams& grad);

// Row i -> scalar logit. Requires out() == 1.
Eigen::VectorXd pointwise_logits(const MlpParams& params,
                                 const FeatureRef& features);

}  // namespace nsa
