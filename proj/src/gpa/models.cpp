// Copyright 2026 The gpadapter authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gpa/models.hpp"

#include <random>

namespace gpa {

namespace {

Mat gaussian_matrix(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

DenseLayer make_dense(Index in, Index out, std::mt19937_64& rng) {
  DenseLayer l;
  l.w = gaussian_matrix(out, in, std::sqrt(2.0 / static_cast<double>(in)), rng);
  l.b = Vec::Zero(out);
  return l;
}

Conv1dLayer make_conv(Index in_ch, Index out_ch, Index width, std::mt19937_64& rng) {
  Conv1dLayer l;
  const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch * width));
  l.w.reserve(out_ch);
  for (Index oc = 0; oc < out_ch; ++oc) l.w.push_back(gaussian_matrix(in_ch, width, stddev, rng));
  l.b = Vec::Zero(out_ch);
  return l;
}

struct Shape {
  Index channels;
  Index length;
  Index flat() const { return channels * length; }
};

Shape layer_output_shape(const Layer& layer, const Shape& in) {
  if (std::holds_alternative<DenseLayer>(layer)) {
    const auto& d = std::get<DenseLayer>(layer);
    require(d.w.cols() == in.flat(), "classifier: dense layer input size mismatch");
    return {d.w.rows(), 1};
  }
  if (std::holds_alternative<Conv1dLayer>(layer)) {
    const auto& c = std::get<Conv1dLayer>(layer);
    require(c.in_channels() == in.channels, "classifier: conv channel mismatch");
    require(in.length >= c.width(), "classifier: conv input shorter than filter");
    return {c.out_channels(), in.length - c.width() + 1};
  }
  if (std::holds_alternative<MaxPool1dLayer>(layer)) {
    const auto& p = std::get<MaxPool1dLayer>(layer);
    require(in.length >= p.size, "classifier: pool input shorter than window");
    return {in.channels, in.length / p.size};
  }
  return in;  // relu
}

}  // namespace

ClassifierParams make_logreg(Index input_dim, Index num_classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ClassifierParams clf;
  clf.input_dim = input_dim;
  clf.num_classes = num_classes;
  clf.layers.push_back(make_dense(input_dim, num_classes, rng));
  return clf;
}

ClassifierParams make_mlp(Index input_dim, Index num_classes, std::uint64_t seed, Index hidden) {
  std::mt19937_64 rng(seed);
  ClassifierParams clf;
  clf.input_dim = input_dim;
  clf.num_classes = num_classes;
  clf.layers.push_back(make_dense(input_dim, hidden, rng));
  clf.layers.push_back(ReluLayer{});
  clf.layers.push_back(make_dense(hidden, hidden, rng));
  clf.layers.push_back(ReluLayer{});
  clf.layers.push_back(make_dense(hidden, num_classes, rng));
  return clf;
}

ClassifierParams make_convnet(Index input_dim, Index num_classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ClassifierParams clf;
  clf.input_dim = input_dim;
  clf.num_classes = num_classes;
  clf.layers.push_back(make_conv(1, 4, 5, rng));
  clf.layers.push_back(ReluLayer{});
  clf.layers.push_back(MaxPool1dLayer{2});
  clf.layers.push_back(make_conv(4, 4, 5, rng));
  clf.layers.push_back(ReluLayer{});
  clf.layers.push_back(MaxPool1dLayer{2});

  Shape shape{1, input_dim};
  for (size_t i = 0; i < clf.layers.size(); ++i) shape = layer_output_shape(clf.layers[i], shape);
  clf.layers.push_back(make_dense(shape.flat(), 256, rng));
  clf.layers.push_back(ReluLayer{});
  clf.layers.push_back(make_dense(256, num_classes, rng));
  return clf;
}

std::vector<Index> layer_output_sizes(const ClassifierParams& clf) {
  Shape shape{1, clf.input_dim};
  std::vector<Index> sizes;
  for (const Layer& layer : clf.layers) {
    shape = layer_output_shape(layer, shape);
    sizes.push_back(shape.flat());
  }
  return sizes;
}

namespace {

Mat layer_forward(const Layer& layer, const Mat& in) {
  if (std::holds_alternative<DenseLayer>(layer)) {
    const auto& d = std::get<DenseLayer>(layer);
    const Eigen::Map<const Vec> flat(in.data(), in.size());
    Mat out = d.w * flat + d.b;
    return out;
  }
  if (std::holds_alternative<ReluLayer>(layer)) return in.cwiseMax(0.0);
  if (std::holds_alternative<Conv1dLayer>(layer)) {
    const auto& c = std::get<Conv1dLayer>(layer);
    const Index out_len = in.cols() - c.width() + 1;
    Mat out(c.out_channels(), out_len);
    for (Index oc = 0; oc < c.out_channels(); ++oc) {
      for (Index t = 0; t < out_len; ++t)
        out(oc, t) = c.b[oc] + c.w[oc].cwiseProduct(in.middleCols(t, c.width())).sum();
    }
    return out;
  }
  const auto& p = std::get<MaxPool1dLayer>(layer);
  const Index out_len = in.cols() / p.size;
  Mat out(in.rows(), out_len);
  for (Index ch = 0; ch < in.rows(); ++ch)
    for (Index t = 0; t < out_len; ++t) out(ch, t) = in.row(ch).segment(t * p.size, p.size).maxCoeff();
  return out;
}

// dIn given dOut; accumulates parameter gradients into `grad_layer`.
Mat layer_backward(const Layer& layer, Layer& grad_layer, const Mat& in, const Mat& dout) {
  if (std::holds_alternative<DenseLayer>(layer)) {
    const auto& d = std::get<DenseLayer>(layer);
    auto& g = std::get<DenseLayer>(grad_layer);
    const Eigen::Map<const Vec> flat(in.data(), in.size());
    const Eigen::Map<const Vec> dvec(dout.data(), dout.size());
    g.w.noalias() += dvec * flat.transpose();
    g.b += dvec;
    Vec din = d.w.transpose() * dvec;
    return Eigen::Map<Mat>(din.data(), in.rows(), in.cols());
  }
  if (std::holds_alternative<ReluLayer>(layer))
    return Mat(((in.array() > 0.0).cast<double>() * dout.array()).matrix());
  if (std::holds_alternative<Conv1dLayer>(layer)) {
    const auto& c = std::get<Conv1dLayer>(layer);
    auto& g = std::get<Conv1dLayer>(grad_layer);
    Mat din = Mat::Zero(in.rows(), in.cols());
    for (Index oc = 0; oc < c.out_channels(); ++oc) {
      for (Index t = 0; t < dout.cols(); ++t) {
        const double go = dout(oc, t);
        if (go == 0.0) continue;
        g.w[oc].noalias() += go * in.middleCols(t, c.width());
        din.middleCols(t, c.width()).noalias() += go * c.w[oc];
      }
      g.b[oc] += dout.row(oc).sum();
    }
    return din;
  }
  const auto& p = std::get<MaxPool1dLayer>(layer);
  Mat din = Mat::Zero(in.rows(), in.cols());
  for (Index ch = 0; ch < in.rows(); ++ch) {
    for (Index t = 0; t < dout.cols(); ++t) {
      Index argmax = 0;
      in.row(ch).segment(t * p.size, p.size).maxCoeff(&argmax);  // first max wins
      din(ch, t * p.size + argmax) += dout(ch, t);
    }
  }
  return din;
}

}  // namespace

Vec forward(const ClassifierParams& clf, const Vec& z) {
  require(z.size() == clf.input_dim, "forward: input length mismatch");
  Mat act = z.transpose();  // 1 channel x length
  for (const Layer& layer : clf.layers) act = layer_forward(layer, act);
  require(act.size() == clf.num_classes, "forward: classifier does not end in class logits");
  return Eigen::Map<const Vec>(act.data(), act.size());
}

ClassifierParams zeros_like(const ClassifierParams& clf) {
  ClassifierParams z = clf;
  visit_params(
      z, [](Mat& m) { m.setZero(); }, [](Vec& v) { v.setZero(); });
  return z;
}

void visit_params(ClassifierParams& clf, const std::function<void(Mat&)>& fm,
                  const std::function<void(Vec&)>& fv) {
  for (Layer& layer : clf.layers) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
      fm(d->w);
      fv(d->b);
    } else if (auto* c = std::get_if<Conv1dLayer>(&layer)) {
      for (Mat& w : c->w) fm(w);
      fv(c->b);
    }
  }
}

double squared_param_norm(ClassifierParams& grads) {
  double acc = 0.0;
  visit_params(
      grads, [&](Mat& m) { acc += m.squaredNorm(); }, [&](Vec& v) { acc += v.squaredNorm(); });
  return acc;
}

LossResult loss_and_grads(const ClassifierParams& clf, const Mat& z_samples, int label) {
  require(z_samples.rows() == clf.input_dim, "loss_and_grads: input length mismatch");
  require(label >= 0 && label < clf.num_classes, "loss_and_grads: label out of range");
  const Index s = z_samples.cols();
  const double inv_s = 1.0 / static_cast<double>(s);

  LossResult out;
  out.grads = zeros_like(clf);
  out.dz.resize(z_samples.rows(), s);

  for (Index col = 0; col < s; ++col) {
    // forward with retained layer inputs
    std::vector<Mat> inputs;
    inputs.reserve(clf.layers.size());
    Mat act = z_samples.col(col).transpose();
    for (const Layer& layer : clf.layers) {
      inputs.push_back(act);
      act = layer_forward(layer, act);
    }
    const Eigen::Map<const Vec> logits(act.data(), act.size());

    // softmax cross-entropy
    const double zmax = logits.maxCoeff();
    const Vec shifted = logits.array() - zmax;
    const Vec expv = shifted.array().exp();
    const double denom = expv.sum();
    out.loss += inv_s * (std::log(denom) - shifted[label]);

    Vec dlogits = expv / denom;
    dlogits[label] -= 1.0;
    dlogits *= inv_s;

    Mat grad = Eigen::Map<Mat>(dlogits.data(), act.rows(), act.cols());
    for (Index li = static_cast<Index>(clf.layers.size()) - 1; li >= 0; --li)
      grad = layer_backward(clf.layers[li], out.grads.layers[li], inputs[li], grad);
    out.dz.col(col) = Eigen::Map<const Vec>(grad.data(), grad.size());
  }
  return out;
}

MegFeatureBank MegFeatureBank::init(Index d, Index num_features, std::uint64_t seed) {
  require(d >= 1 && num_features >= 1, "MegFeatureBank: bad dimensions");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * M_PI);
  // per-feature bandwidth from a small log-spaced set, scaled by 1/sqrt(d)
  // so the cos argument stays O(1) for O(1)-valued inputs
  static constexpr double kBandwidths[] = {0.25, 0.5, 1.0, 2.0, 4.0};
  MegFeatureBank bank;
  bank.directions.resize(d, num_features);
  bank.phases.resize(num_features);
  for (Index i = 0; i < num_features; ++i) {
    const double bw = kBandwidths[i % 5] / std::sqrt(static_cast<double>(d));
    for (Index r = 0; r < d; ++r) bank.directions(r, i) = bw * normal(rng);
    bank.phases[i] = uniform(rng);
  }
  return bank;
}

namespace {

Vec finalize_meg(const MegFeatureBank& bank, const Vec& cos_arg, const Vec& quad) {
  const double scale = std::sqrt(2.0 / static_cast<double>(bank.features()));
  return scale * ((-0.5 * quad.array()).exp() * cos_arg.array().cos()).matrix();
}

}  // namespace

Vec meg_features(const MegFeatureBank& bank, const GaussianRepr& repr, MegTape* tape) {
  require(repr.has_dense_cov(), "meg_features: dense covariance required in exact mode");
  require(repr.mean.size() == bank.directions.rows(), "meg_features: dimension mismatch");
  const Vec cos_arg = bank.directions.transpose() * repr.mean + bank.phases;
  const Mat sw = repr.cov * bank.directions;
  const Vec quad = bank.directions.cwiseProduct(sw).colwise().sum().transpose();
  if (tape) {
    tape->cos_arg = cos_arg;
    tape->quad = quad;
  }
  return finalize_meg(bank, cos_arg, quad);
}

Vec meg_features(const MegFeatureBank& bank, const SkiOperator& op, MegTape* tape) {
  require(op.d() == bank.directions.rows(), "meg_features: dimension mismatch");
  const Index m = bank.features();
  const Vec mu = op.posterior_mean();
  const Vec cos_arg = bank.directions.transpose() * mu + bank.phases;

  Vec quad(m);
  if (tape) tape->records.resize(m);
  for (Index i = 0; i < m; ++i) {
    SkiOperator::CovRecord rec;
    const Vec sw = op.cov_matvec(bank.directions.col(i), tape ? &rec : nullptr);
    quad[i] = bank.directions.col(i).dot(sw);
    if (tape) tape->records[i] = std::move(rec);
  }
  if (tape) {
    tape->cos_arg = cos_arg;
    tape->quad = quad;
  }
  return finalize_meg(bank, cos_arg, quad);
}

ParamGrad meg_features_grad(const MegFeatureBank& bank, const SkiOperator& op,
                            const MegTape& tape, const Vec& upstream) {
  require(upstream.size() == bank.features(), "meg_features_grad: upstream length mismatch");
  require(tape.records.size() == static_cast<size_t>(bank.features()),
          "meg_features_grad: tape missing SKI records");
  const double scale = std::sqrt(2.0 / static_cast<double>(bank.features()));

  // phi_i = s e^{-q_i/2} cos(p_i); dphi/dp = -s e^{-q/2} sin(p), dphi/dq = -phi/2
  const Vec damp = (-0.5 * tape.quad.array()).exp().matrix();
  const Vec dphi_dp = -scale * (damp.array() * tape.cos_arg.array().sin()).matrix();
  const Vec dphi_dq = -0.5 * scale * (damp.array() * tape.cos_arg.array().cos()).matrix();

  // mean path collapses into a single pullback
  const Vec mean_up = bank.directions * (upstream.array() * dphi_dp.array()).matrix();
  ParamGrad grad = op.mean_grad(mean_up);

  // quadratic-form path needs one pullback per feature (d is constant here)
  for (Index i = 0; i < bank.features(); ++i) {
    const double c = upstream[i] * dphi_dq[i];
    if (c == 0.0) continue;
    grad += op.cov_grad(bank.directions.col(i), bank.directions.col(i), tape.records[i]) * c;
  }
  return grad;
}

}  // namespace gpa
