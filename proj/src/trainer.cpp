#include "imploss/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "imploss/errors.hpp"
#include "imploss/metrics.hpp"
#include "imploss/rng.hpp"

namespace imploss {

WeightProvider WeightProvider::uniform() { return WeightProvider{}; }

WeightProvider WeightProvider::focal(double gamma) {
  WeightProvider p;
  p.kind = Kind::focal;
  p.gamma = gamma;
  return p;
}

void WeightProvider::validate_for(const Dataset& ds, LossKind loss_kind) const {
  switch (kind) {
    case Kind::uniform:
      if (loss_kind != LossKind::ce)
        throw ValidationError("uniform provider requires loss_kind=ce");
      break;
    case Kind::focal:
      if (loss_kind != LossKind::focal)
        throw ValidationError("focal provider requires loss_kind=focal");
      break;
    case Kind::precomputed:
      if (loss_kind != LossKind::imp)
        throw ValidationError("precomputed provider requires loss_kind=imp");
      table.validate_for(ds, cap);
      break;
    case Kind::dynamic_quality:
      if (loss_kind != LossKind::dimp)
        throw ValidationError("dynamic provider requires loss_kind=dimp");
      if (quality_scores.size() != ds.size())
        throw ValidationError("quality scores misaligned with dataset");
      for (double q : quality_scores)
        if (!(q >= 0.0 && q <= 1.0))
          throw ValidationError("quality score out of [0,1]");
      break;
  }
}

TrainResult train(const Dataset& ds, const TrainConfig& config,
                  const WeightProvider& provider, const Dataset* heldout,
                  const WeightObserver& observer) {
  config.validate();
  ds.validate();
  provider.validate_for(ds, config.loss_kind);

  ClassifierParams params = init_params(ds.feature_dim, ds.num_classes,
                                        config.hidden_units, config.seed);
  const int C = ds.num_classes;
  const std::size_t n = ds.size();
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  long step = 0;

  // Per-example scratch for one batch.
  std::vector<std::vector<double>> probs, hiddens;
  std::vector<double> weights;
  std::vector<std::size_t> batch_idx;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    Rng shuffle_rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;

    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t end = std::min(begin + batch_size, n);
      const std::size_t b = end - begin;
      probs.assign(b, {});
      hiddens.assign(b, {});
      weights.assign(b, 0.0);
      batch_idx.assign(order.begin() + begin, order.begin() + end);

      // One forward pass per example; it supplies the dynamic weight, the
      // loss value, and the gradient below.
      for (std::size_t k = 0; k < b; ++k) {
        const Example& ex = ds.examples[batch_idx[k]];
        std::vector<double> logits = compute_logits(
            params, ex.features,
            params.arch == Architecture::one_hidden ? &hiddens[k] : nullptr);
        double m = logits[0];
        for (double l : logits) {
          if (!std::isfinite(l))
            throw NumericError("divergence: non-finite logit", step);
          m = std::max(m, l);
        }
        double sum = 0.0;
        for (double l : logits) sum += std::exp(l - m);
        std::vector<double>& p = probs[k];
        p.resize(C);
        for (int c = 0; c < C; ++c) p[c] = std::exp(logits[c] - m) / sum;

        const double p_true = p[ex.label];
        switch (provider.kind) {
          case WeightProvider::Kind::uniform:
            weights[k] = 1.0;
            break;
          case WeightProvider::Kind::focal:
            weights[k] = focal_weight(std::clamp(p_true, kProbFloor, 1.0),
                                      provider.gamma);
            break;
          case WeightProvider::Kind::precomputed:
            weights[k] = provider.table.weights[batch_idx[k]];
            break;
          case WeightProvider::Kind::dynamic_quality:
            weights[k] = dimp_weight(provider.quality_scores[batch_idx[k]], p_true,
                                     provider.floor, provider.cap);
            break;
        }
      }

      if (config.normalize_batch_weights) {
        double mean = std::accumulate(weights.begin(), weights.end(), 0.0) /
                      static_cast<double>(b);
        if (mean > 0.0)
          for (double& w : weights) w /= mean;
      }

      if (observer)
        for (std::size_t k = 0; k < b; ++k)
          observer(epoch, batch_idx[k], weights[k]);

      // Weighted CE gradient; fixed summation order.
      ClassifierParams grad = ClassifierParams::zeros_like(params);
      const double inv_b = 1.0 / static_cast<double>(b);
      for (std::size_t k = 0; k < b; ++k) {
        const Example& ex = ds.examples[batch_idx[k]];
        loss_sum -= weights[k] * safe_log(probs[k][ex.label]);
        const double scale = weights[k] * inv_b;
        if (scale == 0.0) continue;
        std::vector<double> delta = probs[k];
        delta[ex.label] -= 1.0;
        if (params.arch == Architecture::linear) {
          for (const auto& [idx, val] : ex.features) {
            double* row = &grad.w1[static_cast<std::size_t>(idx) * C];
            for (int c = 0; c < C; ++c) row[c] += scale * val * delta[c];
          }
          for (int c = 0; c < C; ++c) grad.b1[c] += scale * delta[c];
        } else {
          const int h = params.hidden;
          const std::vector<double>& hid = hiddens[k];
          std::vector<double> dpre(h, 0.0);
          for (int j = 0; j < h; ++j) {
            const double* row = &params.w2[static_cast<std::size_t>(j) * C];
            double* grow = &grad.w2[static_cast<std::size_t>(j) * C];
            double dh = 0.0;
            for (int c = 0; c < C; ++c) {
              grow[c] += scale * hid[j] * delta[c];
              dh += row[c] * delta[c];
            }
            dpre[j] = dh * (1.0 - hid[j] * hid[j]);
          }
          for (int c = 0; c < C; ++c) grad.b2[c] += scale * delta[c];
          for (const auto& [idx, val] : ex.features) {
            double* row = &grad.w1[static_cast<std::size_t>(idx) * h];
            for (int j = 0; j < h; ++j) row[j] += scale * val * dpre[j];
          }
          for (int j = 0; j < h; ++j) grad.b1[j] += scale * dpre[j];
        }
      }

      try {
        params = sgd_step(params, grad, config.learning_rate);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at step " +
                               std::to_string(step),
                           step);
      }
      ++step;
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n);
    if (heldout) stats.heldout_accuracy = evaluate(params, *heldout).accuracy;
    stats.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - epoch_start)
                        .count();
    history.epochs.push_back(stats);
  }

  return {std::move(params), std::move(history)};
}

}  // namespace imploss
