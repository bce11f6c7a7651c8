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

#include "gpa/training.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

namespace gpa {

void TrainConfig::validate() const {
  require(learning_rate >= 0.0, "TrainConfig: negative learning rate");
  require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must be in [0, 1)");
  require(epochs >= 1, "TrainConfig: epochs must be >= 1");
  require(early_stop_patience >= 1, "TrainConfig: patience must be >= 1");
  require(train_fraction > 0.0 && train_fraction <= 1.0,
          "TrainConfig: train fraction must be in (0, 1]");
  require(meg_features >= 1, "TrainConfig: meg_features must be >= 1");
}

const char* classifier_kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kLogReg: return "logreg";
    case ClassifierKind::kMlp: return "mlp";
    case ClassifierKind::kConvNet: return "convnet";
    case ClassifierKind::kMeg: return "meg";
  }
  return "unknown";
}

void nesterov_step(Mat& p, Mat& buf, const Mat& g, double lr, double mu) {
  buf = mu * buf + g;
  p -= lr * (g + mu * buf);
}

namespace {

struct SgdState {
  ClassifierParams clf_buf;
  ParamGrad gp_buf;
  double lr;
};

void update_classifier(ClassifierParams& clf, SgdState& state, ClassifierParams& grads,
                       double momentum) {
  auto itm = [&](Mat& p, Mat& b, const Mat& g) { nesterov_step(p, b, g, state.lr, momentum); };
  // walk params, velocity and grads in lockstep
  for (size_t li = 0; li < clf.layers.size(); ++li) {
    if (auto* d = std::get_if<DenseLayer>(&clf.layers[li])) {
      auto& db = std::get<DenseLayer>(state.clf_buf.layers[li]);
      auto& dg = std::get<DenseLayer>(grads.layers[li]);
      itm(d->w, db.w, dg.w);
      Mat bb = db.b, gb = dg.b, pb = d->b;
      nesterov_step(pb, bb, gb, state.lr, momentum);
      d->b = pb;
      db.b = bb;
    } else if (auto* c = std::get_if<Conv1dLayer>(&clf.layers[li])) {
      auto& cb = std::get<Conv1dLayer>(state.clf_buf.layers[li]);
      auto& cg = std::get<Conv1dLayer>(grads.layers[li]);
      for (size_t w = 0; w < c->w.size(); ++w) itm(c->w[w], cb.w[w], cg.w[w]);
      Mat bb = cb.b, gb = cg.b, pb = c->b;
      nesterov_step(pb, bb, gb, state.lr, momentum);
      c->b = pb;
      cb.b = bb;
    }
  }
}

void update_gp(GpParams& gp, ParamGrad& buf, const ParamGrad& g, double lr, double mu) {
  buf.d_alpha = mu * buf.d_alpha + g.d_alpha;
  buf.d_beta = mu * buf.d_beta + g.d_beta;
  buf.d_gamma = mu * buf.d_gamma + g.d_gamma;
  gp.alpha -= lr * (g.d_alpha + mu * buf.d_alpha);
  gp.beta -= lr * (g.d_beta + mu * buf.d_beta);
  gp.gamma -= lr * (g.d_gamma + mu * buf.d_gamma);
}

double softmax_cross_entropy(const Vec& logits, int label) {
  const double zmax = logits.maxCoeff();
  return std::log((logits.array() - zmax).exp().sum()) - (logits[label] - zmax);
}

int argmax_lowest(const Vec& logits) {
  Index best = 0;
  for (Index i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return static_cast<int>(best);
}

Vec imp_mean(const TimeSeries& series, const GpParams& gp, const AdapterConfig& acfg) {
  if (acfg.mode == AdapterMode::kExact)
    return exact_posterior(series, acfg.ref_times, gp).mean;
  SkiOperator::Options opts;
  opts.m = acfg.m;
  opts.cg = acfg.cg;
  return SkiOperator(series, acfg.ref_times, gp, opts).posterior_mean();
}

Vec model_logits(const TimeSeries& series, const TrainedModel& model) {
  if (model.kind == ClassifierKind::kMeg) {
    Vec feats;
    if (model.adapter.mode == AdapterMode::kExact) {
      const GaussianRepr repr = exact_posterior(series, model.adapter.ref_times, model.gp);
      feats = meg_features(*model.meg, repr);
    } else {
      SkiOperator::Options opts;
      opts.m = model.adapter.m;
      opts.cg = model.adapter.cg;
      const SkiOperator op(series, model.adapter.ref_times, model.gp, opts);
      feats = meg_features(*model.meg, op);
    }
    return forward(model.clf, feats);
  }
  return forward(model.clf, imp_mean(series, model.gp, model.adapter));
}

// Two-stage phase one: SGD ascent on the per-series log marginal likelihood,
// same driver as the discriminative loop.
GpParams fit_marginal_likelihood(const Dataset& data, const std::vector<size_t>& train_idx,
                                 const TrainConfig& cfg) {
  GpParams gp = cfg.init_params;
  ParamGrad buf;
  for (int epoch = 0; epoch < cfg.ml_epochs; ++epoch) {
    std::vector<size_t> order = train_idx;
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x4d4c, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t idx : order) {
      ParamGrad g = log_marginal_likelihood_grad(data.series[idx], gp);
      // minimize the negative likelihood
      g.d_alpha = -g.d_alpha;
      g.d_beta = -g.d_beta;
      g.d_gamma = -g.d_gamma;
      const double norm =
          std::sqrt(g.d_alpha * g.d_alpha + g.d_beta * g.d_beta + g.d_gamma * g.d_gamma);
      if (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) {
        const double s = cfg.grad_clip / norm;
        g.d_alpha *= s;
        g.d_beta *= s;
        g.d_gamma *= s;
      }
      update_gp(gp, buf, g, cfg.ml_learning_rate, cfg.momentum);
    }
  }
  return gp;
}

struct StepResult {
  double loss = 0.0;
  ClassifierParams clf_grads;
  ParamGrad gp_grad;
};

StepResult training_step(const TimeSeries& series, const TrainedModel& model,
                         const AdapterConfig& acfg, bool train_gp, std::uint64_t noise_seed) {
  StepResult out;
  if (model.kind == ClassifierKind::kMeg) {
    require(acfg.mode == AdapterMode::kSki || !train_gp,
            "train: end-to-end MEG requires SKI mode");
    MegTape tape;
    Vec feats;
    SkiOperator::Options opts;
    opts.m = acfg.m;
    opts.cg = acfg.cg;
    std::optional<SkiOperator> op;
    if (acfg.mode == AdapterMode::kSki) {
      op.emplace(series, acfg.ref_times, model.gp, opts);
      feats = meg_features(*model.meg, *op, train_gp ? &tape : nullptr);
    } else {
      const GaussianRepr repr = exact_posterior(series, acfg.ref_times, model.gp);
      feats = meg_features(*model.meg, repr);
    }
    LossResult lr = loss_and_grads(model.clf, feats, series.label);
    out.loss = lr.loss;
    out.clf_grads = std::move(lr.grads);
    if (train_gp) out.gp_grad = meg_features_grad(*model.meg, *op, tape, lr.dz.col(0));
    return out;
  }

  const bool uac = acfg.framework == Framework::kUac;
  Mat xi;
  if (uac) xi = standard_normal(acfg.d(), acfg.num_samples, noise_seed);
  const AdapterOutput fwd =
      adapt_forward(series, model.gp, acfg, uac ? &xi : nullptr, train_gp);
  LossResult lr = loss_and_grads(model.clf, fwd.samples, series.label);
  out.loss = lr.loss;
  out.clf_grads = std::move(lr.grads);
  if (train_gp) out.gp_grad = adapt_backward(fwd, lr.dz);
  return out;
}

}  // namespace

TrainedModel train(const Dataset& data, const AdapterConfig& adapter_cfg, ClassifierKind kind,
                   const TrainConfig& train_cfg, std::vector<HistoryRow>* history) {
  data.validate();
  adapter_cfg.validate();
  train_cfg.validate();
  require(!data.series.empty(), "train: empty dataset");
  require(data.num_classes >= 2, "train: need at least two classes");
  for (const TimeSeries& s : data.series)
    require(s.label >= 0, "train: every training series needs a label");

  // split
  std::vector<size_t> order(data.series.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 split_rng(mix_seed(train_cfg.seed, 0x5b117, 0));
  std::shuffle(order.begin(), order.end(), split_rng);
  const size_t train_count = std::max<size_t>(
      1, static_cast<size_t>(std::round(train_cfg.train_fraction *
                                        static_cast<double>(order.size()))));
  std::vector<size_t> train_idx(order.begin(),
                                order.begin() + std::min(train_count, order.size()));
  std::vector<size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(train_idx.size()),
                              order.end());
  if (val_idx.empty()) val_idx = train_idx;  // degenerate tiny datasets

  TrainedModel model;
  model.kind = kind;
  model.adapter = adapter_cfg;
  model.num_classes = data.num_classes;
  model.gp = train_cfg.init_params;

  const bool end_to_end = train_cfg.regime == Regime::kEndToEnd;
  if (!end_to_end) model.gp = fit_marginal_likelihood(data, train_idx, train_cfg);

  const std::uint64_t clf_seed = mix_seed(train_cfg.seed, 0xc1f, 1);
  switch (kind) {
    case ClassifierKind::kLogReg:
      model.clf = make_logreg(adapter_cfg.d(), data.num_classes, clf_seed);
      break;
    case ClassifierKind::kMlp:
      model.clf = make_mlp(adapter_cfg.d(), data.num_classes, clf_seed);
      break;
    case ClassifierKind::kConvNet:
      model.clf = make_convnet(adapter_cfg.d(), data.num_classes, clf_seed);
      break;
    case ClassifierKind::kMeg:
      model.meg = MegFeatureBank::init(adapter_cfg.d(), train_cfg.meg_features,
                                       mix_seed(train_cfg.seed, 0x3e6, 2));
      model.clf = make_logreg(train_cfg.meg_features, data.num_classes, clf_seed);
      break;
  }

  SgdState state;
  state.clf_buf = zeros_like(model.clf);
  state.lr = train_cfg.learning_rate;

  TrainedModel best = model;
  double best_val = -1.0;
  int epochs_since_improve = 0;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    std::vector<size_t> epoch_order = train_idx;
    std::mt19937_64 rng(mix_seed(train_cfg.seed, 0xe93c, static_cast<std::uint64_t>(epoch)));
    std::shuffle(epoch_order.begin(), epoch_order.end(), rng);

    double loss_sum = 0.0;
    for (size_t idx : epoch_order) {
      const std::uint64_t noise_seed =
          mix_seed(train_cfg.seed, static_cast<std::uint64_t>(epoch) + 1,
                   static_cast<std::uint64_t>(idx));
      StepResult step =
          training_step(data.series[idx], model, adapter_cfg, end_to_end, noise_seed);
      if (!std::isfinite(step.loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", series " << idx
            << " (lr=" << state.lr << ")";
        throw NumericBreakdown(msg.str());
      }
      loss_sum += step.loss;

      // global-norm clip across classifier and GP gradients
      double sq = squared_param_norm(step.clf_grads);
      if (end_to_end)
        sq += step.gp_grad.d_alpha * step.gp_grad.d_alpha +
              step.gp_grad.d_beta * step.gp_grad.d_beta +
              step.gp_grad.d_gamma * step.gp_grad.d_gamma;
      const double norm = std::sqrt(sq);
      if (train_cfg.grad_clip > 0.0 && norm > train_cfg.grad_clip) {
        const double s = train_cfg.grad_clip / norm;
        visit_params(
            step.clf_grads, [s](Mat& m) { m *= s; }, [s](Vec& v) { v *= s; });
        step.gp_grad = step.gp_grad * s;
      }

      update_classifier(model.clf, state, step.clf_grads, train_cfg.momentum);
      if (end_to_end)
        update_gp(model.gp, state.gp_buf, step.gp_grad, state.lr, train_cfg.momentum);
    }

    int correct = 0;
    for (size_t idx : val_idx)
      if (predict(data.series[idx], model) == data.series[idx].label) ++correct;
    const double val_acc = static_cast<double>(correct) / static_cast<double>(val_idx.size());

    if (history)
      history->push_back({epoch, loss_sum / static_cast<double>(epoch_order.size()), val_acc,
                          model.gp});

    if (val_acc > best_val) {
      best_val = val_acc;
      best = model;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
      if (epochs_since_improve >= train_cfg.early_stop_patience) break;
      if (train_cfg.plateau_epochs > 0 && epochs_since_improve % train_cfg.plateau_epochs == 0)
        state.lr *= train_cfg.lr_decay;
    }
  }
  return best;
}

int predict(const TimeSeries& series, const TrainedModel& model) {
  return argmax_lowest(model_logits(series, model));
}

Metrics evaluate(const Dataset& data, const TrainedModel& model) {
  require(!data.series.empty(), "evaluate: empty dataset");
  Metrics m;
  m.per_class_accuracy = Vec::Zero(model.num_classes);
  Vec class_count = Vec::Zero(model.num_classes);
  int correct = 0;
  double loss_sum = 0.0;
  for (const TimeSeries& s : data.series) {
    require(s.label >= 0 && s.label < model.num_classes, "evaluate: series missing label");
    const Vec logits = model_logits(s, model);
    const int pred = argmax_lowest(logits);
    class_count[s.label] += 1.0;
    if (pred == s.label) {
      ++correct;
      m.per_class_accuracy[s.label] += 1.0;
    }
    loss_sum += softmax_cross_entropy(logits, s.label);
  }
  for (Index c = 0; c < model.num_classes; ++c)
    m.per_class_accuracy[c] = class_count[c] > 0 ? m.per_class_accuracy[c] / class_count[c] : 0.0;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(data.series.size());
  m.mean_loss = loss_sum / static_cast<double>(data.series.size());
  return m;
}

std::string history_to_csv(const std::vector<HistoryRow>& history) {
  std::ostringstream out;
  out.precision(12);
  out << "epoch,train_loss,val_acc,alpha,beta,gamma\n";
  for (const HistoryRow& row : history)
    out << row.epoch << "," << row.train_loss << "," << row.val_accuracy << ","
        << row.params.alpha << "," << row.params.beta << "," << row.params.gamma << "\n";
  return out.str();
}

}  // namespace gpa
