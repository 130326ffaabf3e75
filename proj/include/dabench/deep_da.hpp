#pragma once

#include <optional>

#include "dabench/dataset.hpp"
#include "dabench/mlp.hpp"

namespace dabench {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  /// Adversarial (stage 2) epochs for ADDA.
  std::size_t adversarial_epochs = 30;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: learning_rate must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("train: val_fraction must be in (0,1)");
  }
};

struct TrainHistory {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_val_accuracy = -1.0;
  std::vector<double> val_accuracy;
};

/// Feature extractor followed by a softmax label predictor.
struct PlainModel {
  Mlp extractor;
  Mlp predictor;

  std::uint64_t fingerprint() const {
    return mix_seed(extractor.params.fingerprint() ^ mix_seed(predictor.params.fingerprint()));
  }
};

struct DannModel {
  Mlp extractor;
  Mlp predictor;
  Mlp domain_classifier;
  double lambda = 1.0;

  PlainModel classifier() const { return {extractor, predictor}; }
  std::uint64_t fingerprint() const {
    return mix_seed(classifier().fingerprint() ^ mix_seed(domain_classifier.params.fingerprint()));
  }
};

struct AddaModel {
  Mlp source_encoder;
  Mlp target_encoder;
  Mlp classifier;
  Mlp discriminator;

  std::uint64_t fingerprint() const {
    std::uint64_t h = source_encoder.params.fingerprint();
    h = mix_seed(h ^ target_encoder.params.fingerprint());
    h = mix_seed(h ^ classifier.params.fingerprint());
    return mix_seed(h ^ discriminator.params.fingerprint());
  }
};

// ---------------------------------------------------------------------------
// Inference

inline Matrix predict_proba(const Mlp& encoder, const Mlp& head, const Matrix& x) {
  return forward(head, forward(encoder, x).output).output;
}

inline Labels argmax_rows(const Matrix& p) {
  Labels out;
  out.reserve(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.cols(); ++c) {
      if (p(i, c) > p(i, best)) best = c;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

inline Labels predict(const PlainModel& m, const Matrix& x) { return argmax_rows(predict_proba(m.extractor, m.predictor, x)); }
inline Labels predict(const DannModel& m, const Matrix& x) { return argmax_rows(predict_proba(m.extractor, m.predictor, x)); }
/// Target-side prediction path C(E_T(x)).
inline Labels predict_target(const AddaModel& m, const Matrix& x) {
  return argmax_rows(predict_proba(m.target_encoder, m.classifier, x));
}
inline Labels predict_source(const AddaModel& m, const Matrix& x) {
  return argmax_rows(predict_proba(m.source_encoder, m.classifier, x));
}

inline double label_accuracy(const Labels& pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw ShapeError("accuracy: length mismatch");
  if (pred.empty()) throw EmptyInputError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// Accuracy of a 2-way domain head at telling source (0) from target (1).
inline double domain_accuracy(const Mlp& encoder, const Mlp& domain_head, const Matrix& xs, const Matrix& xt) {
  const Labels ps = argmax_rows(predict_proba(encoder, domain_head, xs));
  const Labels pt = argmax_rows(predict_proba(encoder, domain_head, xt));
  std::size_t hits = 0;
  for (int v : ps) hits += v == 0;
  for (int v : pt) hits += v == 1;
  return static_cast<double>(hits) / static_cast<double>(ps.size() + pt.size());
}

// ---------------------------------------------------------------------------
// Per-batch gradients. Losses are batch means.

struct PlainGradients {
  MlpGrads extractor;
  MlpGrads predictor;
  double loss = 0.0;
};

inline PlainGradients plain_gradients(const PlainModel& m, const Matrix& x, std::span<const int> y) {
  const auto fe = forward(m.extractor, x);
  const auto fp = forward(m.predictor, fe.output);
  auto ce = softmax_cross_entropy(fp.output, y);
  const double scale = 1.0 / static_cast<double>(x.rows());
  PlainGradients g;
  g.loss = ce.loss * scale;
  g.predictor = backward(m.predictor, fp.cache, ce.grad * scale);
  g.extractor = backward(m.extractor, fe.cache, g.predictor.input);
  return g;
}

struct DannGradients {
  MlpGrads extractor;
  MlpGrads predictor;
  MlpGrads domain;
  double class_loss = 0.0;
  double domain_loss = 0.0;
};

/// Gradients of class_loss - lambda * domain_loss for the extractor (via the
/// reversal layer), of class_loss for the predictor and of domain_loss for
/// the domain head. Source rows carry domain label 0, target rows label 1.
inline DannGradients dann_gradients(const DannModel& m, const Matrix& xs, std::span<const int> ys, const Matrix& xt) {
  const auto fs = forward(m.extractor, xs);
  const auto ft = forward(m.extractor, xt);
  const auto fp = forward(m.predictor, fs.output);
  auto ce = softmax_cross_entropy(fp.output, ys);
  const double cls_scale = 1.0 / static_cast<double>(xs.rows());

  const auto ds = forward(m.domain_classifier, fs.output);
  const auto dt = forward(m.domain_classifier, ft.output);
  const std::vector<int> zeros(static_cast<std::size_t>(xs.rows()), 0);
  const std::vector<int> ones(static_cast<std::size_t>(xt.rows()), 1);
  auto ce_s = softmax_cross_entropy(ds.output, zeros);
  auto ce_t = softmax_cross_entropy(dt.output, ones);
  const double dom_scale = 1.0 / static_cast<double>(xs.rows() + xt.rows());

  DannGradients g;
  g.class_loss = ce.loss * cls_scale;
  g.domain_loss = (ce_s.loss + ce_t.loss) * dom_scale;
  g.predictor = backward(m.predictor, fp.cache, ce.grad * cls_scale);
  const MlpGrads dom_s = backward(m.domain_classifier, ds.cache, ce_s.grad * dom_scale);
  const MlpGrads dom_t = backward(m.domain_classifier, dt.cache, ce_t.grad * dom_scale);
  g.domain = dom_s;
  g.domain += dom_t;

  const Matrix up_s = g.predictor.input + grl_backward(dom_s.input, m.lambda);
  g.extractor = backward(m.extractor, fs.cache, up_s);
  g.extractor += backward(m.extractor, ft.cache, grl_backward(dom_t.input, m.lambda));
  return g;
}

/// Discriminator loss: encodings of source (label 0) and target (label 1).
inline MlpGrads adda_discriminator_gradients(const AddaModel& m, const Matrix& xs, const Matrix& xt,
                                             double* loss = nullptr) {
  const Matrix es = forward(m.source_encoder, xs).output;
  const Matrix et = forward(m.target_encoder, xt).output;
  const auto ds = forward(m.discriminator, es);
  const auto dt = forward(m.discriminator, et);
  const std::vector<int> zeros(static_cast<std::size_t>(xs.rows()), 0);
  const std::vector<int> ones(static_cast<std::size_t>(xt.rows()), 1);
  auto ce_s = softmax_cross_entropy(ds.output, zeros);
  auto ce_t = softmax_cross_entropy(dt.output, ones);
  const double scale = 1.0 / static_cast<double>(xs.rows() + xt.rows());
  if (loss) *loss = (ce_s.loss + ce_t.loss) * scale;
  MlpGrads g = backward(m.discriminator, ds.cache, ce_s.grad * scale);
  g += backward(m.discriminator, dt.cache, ce_t.grad * scale);
  return g;
}

/// Target-encoder loss with inverted labels: target encodings labelled as source.
inline MlpGrads adda_target_encoder_gradients(const AddaModel& m, const Matrix& xt, double* loss = nullptr) {
  const auto et = forward(m.target_encoder, xt);
  const auto dt = forward(m.discriminator, et.output);
  const std::vector<int> zeros(static_cast<std::size_t>(xt.rows()), 0);
  auto ce = softmax_cross_entropy(dt.output, zeros);
  const double scale = 1.0 / static_cast<double>(xt.rows());
  if (loss) *loss = ce.loss * scale;
  const MlpGrads gd = backward(m.discriminator, dt.cache, ce.grad * scale);
  return backward(m.target_encoder, et.cache, gd.input);
}

// ---------------------------------------------------------------------------
// Training loops

namespace detail {

/// Endless stream of shuffled mini-batches over [0, n). The final batch of a
/// pass may be short; the next pass reshuffles.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch, std::uint64_t seed) : order_(n), batch_(batch), rng_(seed) {
    std::iota(order_.begin(), order_.end(), Index{0});
  }

  IndexList next() {
    if (pos_ == 0) std::shuffle(order_.begin(), order_.end(), rng_);
    const std::size_t end = std::min(pos_ + batch_, order_.size());
    IndexList out(order_.begin() + static_cast<std::ptrdiff_t>(pos_), order_.begin() + static_cast<std::ptrdiff_t>(end));
    pos_ = end == order_.size() ? 0 : end;
    return out;
  }

  std::size_t batches_per_pass() const { return (order_.size() + batch_ - 1) / batch_; }

 private:
  IndexList order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng rng_;
};

enum : std::uint64_t { kSaltSplit = 11, kSaltSource = 12, kSaltTarget = 13, kSaltAdversarial = 14 };

struct LabeledSplit {
  Matrix train_x, val_x;
  Labels train_y, val_y;
};

inline LabeledSplit split_for_validation(const Matrix& x, const Labels& y, const TrainConfig& cfg) {
  IndexList all(y.size());
  std::iota(all.begin(), all.end(), Index{0});
  const auto split = stratified_split(y, all, cfg.val_fraction, derive_seed(cfg.seed, kSaltSplit));
  return {select_rows(x, split.train_idx), select_rows(x, split.val_idx), select(y, split.train_idx),
          select(y, split.val_idx)};
}

inline void check_labeled(const Matrix& x, const Labels& y, int n_out) {
  if (static_cast<Index>(x.rows()) != y.size()) throw ShapeError("train: row and label counts differ");
  std::set<int> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw DegenerateLabelsError("train: need at least 2 classes");
  if (*distinct.rbegin() >= n_out) throw ShapeError("train: label exceeds the predictor output width");
}

/// Early-stopping bookkeeping: keeps the first snapshot with the highest
/// validation accuracy.
template <class Model>
struct EarlyStopper {
  std::size_t patience;
  std::optional<Model> best;
  std::size_t wait = 0;

  /// Returns true when training should stop.
  bool update(const Model& current, double val_acc, std::size_t epoch, TrainHistory& h) {
    h.val_accuracy.push_back(val_acc);
    h.epochs_run = epoch;
    if (val_acc > h.best_val_accuracy) {
      h.best_val_accuracy = val_acc;
      h.best_epoch = epoch;
      best = current;
      wait = 0;
      return false;
    }
    return ++wait >= patience;
  }
};

}  // namespace detail

/// Builds an untrained extractor + predictor pair with seeded Glorot init.
inline PlainModel make_plain_model(const MlpSpec& extractor, const MlpSpec& predictor, std::uint64_t seed) {
  if (extractor.output_size() != predictor.input_size()) throw ShapeError("extractor output != predictor input");
  return {Mlp::create(extractor, derive_seed(seed, 1)), Mlp::create(predictor, derive_seed(seed, 2))};
}

inline DannModel make_dann_model(const MlpSpec& extractor, const MlpSpec& predictor, const MlpSpec& domain,
                                 double lambda, std::uint64_t seed) {
  auto plain = make_plain_model(extractor, predictor, seed);
  if (domain.input_size() != extractor.output_size() || domain.output_size() != 2) {
    throw ShapeError("domain classifier must map the extractor output to 2 domains");
  }
  if (lambda < 0.0) throw ConfigError("dann: lambda must be >= 0");
  return {std::move(plain.extractor), std::move(plain.predictor), Mlp::create(domain, derive_seed(seed, 3)), lambda};
}

inline AddaModel make_adda_model(const MlpSpec& encoder, const MlpSpec& classifier, const MlpSpec& discriminator,
                                 std::uint64_t seed) {
  auto plain = make_plain_model(encoder, classifier, seed);
  if (discriminator.input_size() != encoder.output_size() || discriminator.output_size() != 2) {
    throw ShapeError("discriminator must map the encoder output to 2 domains");
  }
  AddaModel m{plain.extractor, plain.extractor, std::move(plain.predictor),
              Mlp::create(discriminator, derive_seed(seed, 3))};
  return m;
}

template <class Model>
struct Trained {
  Model model;
  TrainHistory history;
};

/// Cross-entropy training of extractor + predictor with Adam and early
/// stopping on a stratified validation holdout; returns the best snapshot.
inline Trained<PlainModel> train_plain(const Matrix& x, const Labels& y, const TrainConfig& cfg, PlainModel model) {
  cfg.validate();
  detail::check_labeled(x, y, model.predictor.spec.output_size());
  const auto data = detail::split_for_validation(x, y, cfg);

  AdamState opt_e = AdamState::zeros_like(model.extractor.params);
  AdamState opt_p = AdamState::zeros_like(model.predictor.params);
  detail::BatchStream source(data.train_y.size(), cfg.batch_size, derive_seed(cfg.seed, detail::kSaltSource));
  detail::EarlyStopper<PlainModel> stopper{cfg.patience, std::nullopt};
  Trained<PlainModel> out{model, {}};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t b = 0; b < source.batches_per_pass(); ++b) {
      const IndexList idx = source.next();
      const Labels yb = select(data.train_y, idx);
      const auto g = plain_gradients(model, select_rows(data.train_x, idx), yb);
      adam_step(model.extractor.params, g.extractor, opt_e, cfg.learning_rate);
      adam_step(model.predictor.params, g.predictor, opt_p, cfg.learning_rate);
    }
    const double acc = label_accuracy(predict(model, data.val_x), data.val_y);
    if (stopper.update(model, acc, epoch, out.history)) break;
  }
  if (stopper.best) out.model = *stopper.best;
  return out;
}

/// Domain-adversarial training. Early stopping uses source-side validation
/// accuracy; target labels are never seen.
inline Trained<DannModel> train_dann(const Matrix& xs, const Labels& ys, const Matrix& xt, const TrainConfig& cfg,
                                     DannModel model) {
  cfg.validate();
  if (xt.rows() == 0) throw EmptyInputError("train_dann: empty target set");
  if (xt.cols() != xs.cols()) throw ShapeError("train_dann: source and target feature counts differ");
  detail::check_labeled(xs, ys, model.predictor.spec.output_size());
  const auto data = detail::split_for_validation(xs, ys, cfg);

  AdamState opt_e = AdamState::zeros_like(model.extractor.params);
  AdamState opt_p = AdamState::zeros_like(model.predictor.params);
  AdamState opt_d = AdamState::zeros_like(model.domain_classifier.params);
  detail::BatchStream source(data.train_y.size(), cfg.batch_size, derive_seed(cfg.seed, detail::kSaltSource));
  detail::BatchStream target(static_cast<std::size_t>(xt.rows()), cfg.batch_size,
                             derive_seed(cfg.seed, detail::kSaltTarget));
  const std::size_t steps = std::max(source.batches_per_pass(), target.batches_per_pass());
  detail::EarlyStopper<DannModel> stopper{cfg.patience, std::nullopt};
  Trained<DannModel> out{model, {}};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t b = 0; b < steps; ++b) {
      const IndexList is = source.next();
      const IndexList it = target.next();
      const Labels yb = select(data.train_y, is);
      const auto g = dann_gradients(model, select_rows(data.train_x, is), yb, select_rows(xt, it));
      adam_step(model.extractor.params, g.extractor, opt_e, cfg.learning_rate);
      adam_step(model.predictor.params, g.predictor, opt_p, cfg.learning_rate);
      adam_step(model.domain_classifier.params, g.domain, opt_d, cfg.learning_rate);
    }
    const double acc = label_accuracy(predict(model, data.val_x), data.val_y);
    if (stopper.update(model, acc, epoch, out.history)) break;
  }
  if (stopper.best) out.model = *stopper.best;
  return out;
}

struct AddaHistory {
  TrainHistory source_stage;
  std::size_t adversarial_epochs = 0;
  std::vector<double> discriminator_loss;  // mean per adversarial epoch
};

/// Two-stage adversarial discriminative adaptation. Stage 1 trains the source
/// encoder and classifier on labelled source data. Stage 2 freezes both,
/// starts the target encoder from the source encoder and alternates
/// discriminator updates with inverted-label target-encoder updates.
inline Trained<AddaModel> train_adda(const Matrix& xs, const Labels& ys, const Matrix& xt, const TrainConfig& cfg,
                                     AddaModel model, AddaHistory* history = nullptr) {
  cfg.validate();
  if (xt.rows() == 0) throw EmptyInputError("train_adda: empty target set");
  if (xt.cols() != xs.cols()) throw ShapeError("train_adda: source and target feature counts differ");

  auto stage1 = train_plain(xs, ys, cfg, PlainModel{model.source_encoder, model.classifier});
  model.source_encoder = stage1.model.extractor;
  model.classifier = stage1.model.predictor;
  model.target_encoder = model.source_encoder;
  AddaHistory hist;
  hist.source_stage = stage1.history;

  AdamState opt_d = AdamState::zeros_like(model.discriminator.params);
  AdamState opt_t = AdamState::zeros_like(model.target_encoder.params);
  const std::uint64_t adv_seed = derive_seed(cfg.seed, detail::kSaltAdversarial);
  detail::BatchStream source(static_cast<std::size_t>(xs.rows()), cfg.batch_size, derive_seed(adv_seed, 1));
  detail::BatchStream target(static_cast<std::size_t>(xt.rows()), cfg.batch_size, derive_seed(adv_seed, 2));
  const std::size_t steps = std::max(source.batches_per_pass(), target.batches_per_pass());

  for (std::size_t epoch = 1; epoch <= cfg.adversarial_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < steps; ++b) {
      const Matrix bs = select_rows(xs, source.next());
      const Matrix bt = select_rows(xt, target.next());
      double loss = 0.0;
      const MlpGrads gd = adda_discriminator_gradients(model, bs, bt, &loss);
      adam_step(model.discriminator.params, gd, opt_d, cfg.learning_rate);
      const MlpGrads ge = adda_target_encoder_gradients(model, bt);
      adam_step(model.target_encoder.params, ge, opt_t, cfg.learning_rate);
      loss_sum += loss;
    }
    hist.discriminator_loss.push_back(loss_sum / static_cast<double>(steps));
    hist.adversarial_epochs = epoch;
  }
  if (history) *history = std::move(hist);
  return {std::move(model), stage1.history};
}

}  // namespace dabench
