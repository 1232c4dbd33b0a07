#include "vjdet/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vjdet/parallel.hpp"

namespace vjdet {

TrainingSample TrainingSample::from_image(const GrayImage& img, bool positive, double weight) {
  TrainingSample s{IntegralImage(img), positive, weight, 1.0};
  const WindowStats stats = s.ii.window_stats(Rect{0, 0, img.width(), img.height()});
  s.inv_stddev = 1.0 / stats.stddev;
  return s;
}

namespace {

constexpr double kEpsClamp = 1e-10;
constexpr double kChanceMargin = 1e-12;

/// Sorted-scan stump fit. `sorted_values[slot]` ascending, `order[slot]` the
/// sample index occupying that slot. Thresholds are considered at every
/// boundary between distinct values plus one sentinel past each end.
template <typename V>
StumpFit scan_stump(const V* sorted_values, const std::int32_t* order, std::size_t n,
                    const std::uint8_t* positive, const double* weights, double total_pos, double total_neg) {
  StumpFit best;
  best.error = 2.0;

  double pos_below = 0.0;
  double neg_below = 0.0;
  std::size_t k = 0;
  while (true) {
    // Candidate threshold before slot k (k == n: above all values).
    double threshold;
    if (k == 0) {
      threshold = static_cast<double>(sorted_values[0]) - 1.0;
    } else if (k == n) {
      threshold = static_cast<double>(sorted_values[n - 1]) + 1.0;
    } else {
      threshold = (static_cast<double>(sorted_values[k - 1]) + static_cast<double>(sorted_values[k])) / 2.0;
    }

    // polarity +1: positive iff value < threshold.
    const double err_pos = neg_below + (total_pos - pos_below);
    // polarity -1: positive iff value > threshold.
    const double err_neg = pos_below + (total_neg - neg_below);
    if (err_pos < best.error) best = StumpFit{threshold, +1, err_pos};
    if (err_neg < best.error) best = StumpFit{threshold, -1, err_neg};

    if (k == n) break;
    // Advance over the whole group of equal values; a threshold cannot
    // split samples with identical feature值.
    const V group = sorted_values[k];
    do {
      const std::int32_t idx = order[k];
      (positive[idx] ? pos_below : neg_below) += weights[idx];
      ++k;
    } while (k < n && sorted_values[k] == group);
  }
  return best;
}

void check_labels(std::span<const std::uint8_t> positive) {
  bool has_pos = false;
  bool has_neg = false;
  for (std::uint8_t p : positive) (p ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) raise(Errc::DegenerateSamples, "training set must contain both labels");
}

}  // namespace

StumpFit fit_stump_on_values(std::span<const double> values, std::span<const std::uint8_t> positive,
                             std::span<const double> weights) {
  const std::size_t n = values.size();
  if (n == 0 || positive.size() != n || weights.size() != n)
    raise(Errc::DegenerateSamples, "empty or mismatched sample arrays");
  check_labels(positive);

  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) { return values[a] < values[b]; });
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = values[order[i]];

  double total_pos = 0.0;
  double total_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) (positive[i] ? total_pos : total_neg) += weights[i];

  return scan_stump(sorted.data(), order.data(), n, positive.data(), weights.data(), total_pos, total_neg);
}

StumpFit train_stump(const HaarFeature& feature, std::span<const TrainingSample> samples) {
  if (samples.empty()) raise(Errc::DegenerateSamples, "no samples");
  std::vector<double> values(samples.size());
  std::vector<std::uint8_t> positive(samples.size());
  std::vector<double> weights(samples.size());
  const Rect window{0, 0, samples[0].ii.image_width(), samples[0].ii.image_height()};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    values[i] = evaluate(feature, samples[i].ii, window, samples[i].inv_stddev);
    positive[i] = samples[i].positive ? 1 : 0;
    weights[i] = samples[i].weight;
  }
  return fit_stump_on_values(values, positive, weights);
}

// --- AdaBoostTrainer ---

struct AdaBoostTrainer::Impl {
  std::span<const TrainingSample> samples;
  std::span<const HaarFeature> pool;
  BoostConfig cfg;

  std::size_t n = 0;
  std::vector<std::uint8_t> positive;
  std::vector<double> weights;
  std::vector<double> initial_weights;
  std::vector<double> scores;  // running sum of alpha*h per sample
  std::vector<CompiledFeature> compiled;

  // Presorted value cache: per feature, n float values ascending plus the
  // sample index per slot.
  bool cached = false;
  std::vector<float> cache_values;
  std::vector<std::int32_t> cache_order;

  StrongClassifier strong;
  BoostStats stats;

  Impl(std::span<const TrainingSample> s, std::span<const HaarFeature> p, BoostConfig c)
      : samples(s), pool(p), cfg(c), n(s.size()) {
    if (n == 0) raise(Errc::DegenerateSamples, "no samples");
    if (pool.empty()) raise(Errc::DegenerateSamples, "empty feature pool");

    positive.resize(n);
    weights.resize(n);
    const int w = samples[0].ii.image_width();
    const int h = samples[0].ii.image_height();
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (samples[i].ii.image_width() != w || samples[i].ii.image_height() != h)
        raise(Errc::OutOfBounds, "training samples must share the base window size");
      if (!(samples[i].weight > 0.0)) raise(Errc::DegenerateSamples, "sample weights must be positive");
      positive[i] = samples[i].positive ? 1 : 0;
      weights[i] = samples[i].weight;
      wsum += samples[i].weight;
    }
    check_labels(positive);
    for (auto& wv : weights) wv /= wsum;
    initial_weights = weights;
    scores.assign(n, 0.0);

    const std::size_t stride = samples[0].ii.stride();
    compiled.resize(pool.size());
    parallel_for(pool.size(), cfg.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t f = b; f < e; ++f) {
        if (pool[f].base_w != w || pool[f].base_h != h)
          raise(Errc::FeatureOutOfWindow, "pool feature base does not match sample window");
        compiled[f] = compile_feature(pool[f], stride);
      }
    });

    const std::size_t cache_bytes = pool.size() * n * (sizeof(float) + sizeof(std::int32_t));
    if (cfg.cache_features && cache_bytes <= cfg.cache_budget_bytes) build_cache();
  }

  void build_cache() {
    cache_values.resize(pool.size() * n);
    cache_order.resize(pool.size() * n);
    parallel_for(pool.size(), cfg.threads, [&](std::size_t b, std::size_t e) {
      std::vector<std::int32_t> order(n);
      std::vector<float> row(n);
      for (std::size_t f = b; f < e; ++f) {
        for (std::size_t i = 0; i < n; ++i)
          row[i] = static_cast<float>(compiled[f].eval(samples[i].ii.sums_data(), samples[i].inv_stddev));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::int32_t a, std::int32_t c) { return row[a] < row[c]; });
        float* vals = cache_values.data() + f * n;
        std::int32_t* ord = cache_order.data() + f * n;
        for (std::size_t i = 0; i < n; ++i) {
          vals[i] = row[order[i]];
          ord[i] = order[i];
        }
      }
    });
    cached = true;
  }

  struct Best {
    StumpFit fit;
    std::size_t feature = 0;
    bool valid = false;
  };

  Best search(double total_pos, double total_neg) const {
    const int threads = std::max(1, cfg.threads);
    std::vector<Best> local(threads > 1 ? threads : 1);
    const std::size_t chunk = (pool.size() + local.size() - 1) / local.size();

    parallel_for(local.size(), cfg.threads, [&](std::size_t tb, std::size_t te) {
      std::vector<double> row;
      std::vector<std::int32_t> order;
      std::vector<double> sorted;
      for (std::size_t t = tb; t < te; ++t) {
        Best b;
        const std::size_t fb = t * chunk;
        const std::size_t fe = std::min(pool.size(), fb + chunk);
        for (std::size_t f = fb; f < fe; ++f) {
          StumpFit fit;
          if (cached) {
            fit = scan_stump(cache_values.data() + f * n, cache_order.data() + f * n, n, positive.data(),
                             weights.data(), total_pos, total_neg);
          } else {
            row.resize(n);
            for (std::size_t i = 0; i < n; ++i)
              row[i] = compiled[f].eval(samples[i].ii.sums_data(), samples[i].inv_stddev);
            order.resize(n);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::int32_t a, std::int32_t c) { return row[a] < row[c]; });
            sorted.resize(n);
            for (std::size_t i = 0; i < n; ++i) sorted[i] = row[order[i]];
            fit = scan_stump(sorted.data(), order.data(), n, positive.data(), weights.data(), total_pos,
                             total_neg);
          }
          if (!b.valid || fit.error < b.fit.error) {
            b.fit = fit;
            b.feature = f;
            b.valid = true;
          }
        }
        local[t] = b;
      }
    });

    Best best;
    for (const Best& b : local) {
      if (!b.valid) continue;
      if (!best.valid || b.fit.error < best.fit.error ||
          (b.fit.error == best.fit.error && b.feature < best.feature))
        best = b;
    }
    return best;
  }

  bool boost_round() {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0)) raise(Errc::Internal, "weights vanished");
    for (auto& w : weights) w /= wsum;

    double total_pos = 0.0;
    double total_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) (positive[i] ? total_pos : total_neg) += weights[i];

    const Best best = search(total_pos, total_neg);
    if (!best.valid || best.fit.error >= 0.5 - kChanceMargin) {
      stats.exhausted = true;
      return false;
    }

    const double eps = std::clamp(best.fit.error, kEpsClamp, 1.0 - kEpsClamp);
    const double beta = eps / (1.0 - eps);
    const double alpha = std::log(1.0 / beta);

    WeakClassifier weak;
    weak.feature = pool[best.feature];
    weak.threshold = best.fit.threshold;
    weak.polarity = best.fit.polarity;
    weak.alpha = alpha;

    // Reweight: correctly classified samples shrink by beta. Values come
    // from the same source the stump search used so the update matches the
    // measured error exactly.
    if (cached) {
      const float* vals = cache_values.data() + best.feature * n;
      const std::int32_t* ord = cache_order.data() + best.feature * n;
      for (std::size_t s = 0; s < n; ++s) {
        const std::size_t i = static_cast<std::size_t>(ord[s]);
        const bool h = weak.predict_value(static_cast<double>(vals[s]));
        if (h == (positive[i] != 0)) weights[i] *= beta;
        if (h) scores[i] += alpha;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double v = compiled[best.feature].eval(samples[i].ii.sums_data(), samples[i].inv_stddev);
        const bool h = weak.predict_value(v);
        if (h == (positive[i] != 0)) weights[i] *= beta;
        if (h) scores[i] += alpha;
      }
    }

    strong.weak.push_back(std::move(weak));
    strong.stage_threshold = strong.alpha_sum() / 2.0;

    stats.rounds.push_back(RoundRecord{best.feature, best.fit.error, alpha});
    stats.error_bound *= 2.0 * std::sqrt(eps * (1.0 - eps));

    // Majority-vote training error under the initial distribution; the
    // AdaBoost bound must hold on every run.
    double train_err = 0.0;
    const double majority = strong.alpha_sum() / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool predicted = scores[i] >= majority;
      if (predicted != (positive[i] != 0)) train_err += initial_weights[i];
    }
    stats.training_error = train_err;
    if (train_err > stats.error_bound + 1e-12)
      raise(Errc::Internal, "AdaBoost error bound violated");
    return true;
  }
};

AdaBoostTrainer::AdaBoostTrainer(std::span<const TrainingSample> samples, std::span<const HaarFeature> pool,
                                 BoostConfig cfg)
    : impl_(std::make_unique<Impl>(samples, pool, cfg)) {}

AdaBoostTrainer::~AdaBoostTrainer() = default;

bool AdaBoostTrainer::boost_round() { return impl_->boost_round(); }

const StrongClassifier& AdaBoostTrainer::classifier() const noexcept { return impl_->strong; }

std::span<const double> AdaBoostTrainer::weights() const noexcept { return impl_->weights; }

const BoostStats& AdaBoostTrainer::stats() const noexcept { return impl_->stats; }

StrongClassifier adaboost_train(std::span<const TrainingSample> samples, std::span<const HaarFeature> pool,
                                int rounds, const BoostConfig& cfg, BoostStats* stats) {
  if (rounds < 1) raise(Errc::InvalidConfig, "rounds must be >= 1");
  AdaBoostTrainer trainer(samples, pool, cfg);
  for (int r = 0; r < rounds; ++r)
    if (!trainer.boost_round()) break;
  if (stats) *stats = trainer.stats();
  return trainer.classifier();
}

double strong_score(const StrongClassifier& sc, const IntegralImage& ii, const Rect& window, double inv_stddev) {
  double score = 0.0;
  for (const auto& weak : sc.weak) {
    const double v = evaluate(weak.feature, ii, window, inv_stddev);
    if (weak.predict_value(v)) score += weak.alpha;
  }
  return score;
}

}  // namespace vjdet
