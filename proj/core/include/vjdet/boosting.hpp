#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vjdet/haar.hpp"
#include "vjdet/image.hpp"

namespace vjdet {

/// One base-window-sized training example. inv_stddev is the variance
/// normalization factor of the whole window, fixed at construction.
struct TrainingSample {
  IntegralImage ii;
  bool positive = false;
  double weight = 1.0;
  double inv_stddev = 1.0;

  static TrainingSample from_image(const GrayImage& img, bool positive, double weight = 1.0);
};

/// Thresholded single-feature stump. Predicts positive iff
/// polarity * value < polarity * threshold.
struct WeakClassifier {
  HaarFeature feature;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;  // vote weight, >= 0

  bool predict_value(double value) const noexcept {
    return polarity > 0 ? value < threshold : value > threshold;
  }
};

/// Weighted vote of stumps; accepts a window iff the vote sum reaches
/// stage_threshold. An empty classifier with threshold 0 accepts everything.
struct StrongClassifier {
  std::vector<WeakClassifier> weak;
  double stage_threshold = 0.0;

  double alpha_sum() const noexcept {
    double s = 0.0;
    for (const auto& w : weak) s += w.alpha;
    return s;
  }
};

struct StumpFit {
  double threshold = 0.0;
  int polarity = 1;
  double error = 1.0;  // weighted misclassification, in [0, 0.5]
};

/// Optimal (threshold, polarity) for one feature over weighted samples via a
/// single sorted scan. Thresholds sit at midpoints between adjacent distinct
/// values (ties broken toward the smaller threshold, then polarity +1).
StumpFit train_stump(const HaarFeature& feature, std::span<const TrainingSample> samples);

/// Same scan on precomputed (value, label, weight) triples; exposed for
/// 1-D surrogate tests and reused by the trainer.
StumpFit fit_stump_on_values(std::span<const double> values, std::span<const std::uint8_t> positive,
                             std::span<const double> weights);

struct RoundRecord {
  std::size_t feature_index = 0;
  double error = 0.0;
  double alpha = 0.0;
};

struct BoostStats {
  std::vector<RoundRecord> rounds;
  double error_bound = 1.0;     // prod over rounds of 2*sqrt(eps*(1-eps))
  double training_error = 0.0;  // majority-vote error under the initial weights
  bool exhausted = false;       // stopped early: no stump beat chance
};

struct BoostConfig {
  /// Cache per-(feature, sample) values in a presorted table when it fits
  /// the budget; otherwise recompute and sort per round.
  bool cache_features = true;
  std::size_t cache_budget_bytes = 512ull << 20;
  int threads = 1;
};

/// Incremental Discrete AdaBoost over a fixed sample set and feature pool.
/// Grows the strong classifier one stump per boost_round() call; the cascade
/// trainer drives this directly to add rounds until stage targets are met.
class AdaBoostTrainer {
 public:
  AdaBoostTrainer(std::span<const TrainingSample> samples, std::span<const HaarFeature> pool,
                  BoostConfig cfg = {});
  ~AdaBoostTrainer();

  AdaBoostTrainer(const AdaBoostTrainer&) = delete;
  AdaBoostTrainer& operator=(const AdaBoostTrainer&) = delete;

  /// Appends the best stump and reweights. Returns false (appending nothing)
  /// when every stump's error is >= 0.5 - 1e-12.
  bool boost_round();

  const StrongClassifier& classifier() const noexcept;
  std::span<const double> weights() const noexcept;
  const BoostStats& stats() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs `rounds` boosting rounds (fewer if the pool is exhausted) and seeds
/// stage_threshold at the majority vote, alpha_sum / 2.
StrongClassifier adaboost_train(std::span<const TrainingSample> samples, std::span<const HaarFeature> pool,
                                int rounds, const BoostConfig& cfg = {}, BoostStats* stats = nullptr);

/// Vote sum of the classifier on one window.
double strong_score(const StrongClassifier& sc, const IntegralImage& ii, const Rect& window, double inv_stddev);

}  // namespace vjdet
