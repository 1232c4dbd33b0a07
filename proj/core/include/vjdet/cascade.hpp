#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vjdet/boosting.hpp"

namespace vjdet {

/// One boosted filter of the chain; its stage_threshold is calibrated so the
/// configured fraction of validation positives passes.
struct Stage {
  StrongClassifier classifier;
};

/// Per-stage training telemetry.
struct StageRecord {
  int index = 0;
  int weak_count = 0;
  double detection_rate = 0.0;
  double false_positive_rate = 0.0;
  std::size_t negative_pool = 0;
};

struct CascadeTrainConfig {
  int base_w = 24;
  int base_h = 24;
  double d_min = 0.995;    // per-stage minimum detection rate
  double f_max = 0.5;      // per-stage maximum false-positive rate
  double F_target = 1e-4;  // overall false-positive target
  int max_stages = 20;
  int max_weak_per_stage = 100;
  std::uint64_t seed = 0;
  /// Bootstrap pool size per stage; 0 means "match the positive count".
  std::size_t negative_pool = 0;
  /// Fraction of positives held out for threshold calibration (0 = calibrate
  /// on the training positives themselves).
  double holdout_fraction = 0.0;
  bool cache_features = true;
  std::size_t cache_budget_bytes = 512ull << 20;
  int threads = 1;
};

/// Training provenance carried by a cascade and preserved losslessly by the
/// canonical JSON form.
struct CascadeProvenance {
  bool present = false;
  std::uint64_t seed = 0;
  CascadeTrainConfig config;
  std::vector<StageRecord> stages;
};

/// Ordered filter chain. A window is accepted iff every stage accepts; the
/// zero-stage cascade accepts every window.
struct Cascade {
  int base_w = 0;
  int base_h = 0;
  std::vector<Stage> stages;
  CascadeProvenance provenance;
};

struct ClassifyResult {
  bool accepted = true;
  int rejected_at = -1;      // stage index of the first rejection, -1 if accepted
  double last_margin = 0.0;  // score - threshold of the last evaluated stage
};

/// Instrumentation for the early-exit contract.
struct EvalCounters {
  long long stages_evaluated = 0;
  long long features_evaluated = 0;
};

/// Evaluates stages in order and returns at the first rejection without
/// touching later stages.
ClassifyResult classify_window(const Cascade& c, const IntegralImage& ii, const Rect& window, double inv_stddev,
                               EvalCounters* counters = nullptr);

/// Largest threshold keeping at least d_min of the given positive scores;
/// nudged down by 1e-9 so the boundary sample passes.
double calibrate_stage_threshold(std::span<const double> positive_scores, double d_min);
double calibrate_stage_threshold(const StrongClassifier& sc, std::span<const TrainingSample> validation_positives,
                                 double d_min);

/// Mines up to `needed` base-window samples from the negative images that
/// the current cascade still accepts (its false positives), via the
/// detector's sliding-window grid over all scales. Deterministic for a given
/// seed. Raises InsufficientNegatives when fewer than needed/2 turn up.
std::vector<TrainingSample> bootstrap_negatives(const Cascade& c, std::span<const GrayImage> negative_images,
                                                std::size_t needed, std::uint64_t seed);

struct TrainingReport {
  CascadeTrainConfig config;
  std::vector<StageRecord> stages;
  double false_positive_estimate = 1.0;  // product of per-stage f
  double detection_estimate = 1.0;       // product of per-stage d
  std::string stop_reason;
};

/// Stagewise cascade training: bootstrap negatives, grow the stage one
/// boosting round at a time until its calibrated false-positive rate drops
/// under f_max, append, repeat until the cumulative estimate reaches
/// F_target (or stages/negatives run out). Logs one line per stage.
Cascade train_cascade(std::span<const GrayImage> positives, std::span<const GrayImage> negative_images,
                      const CascadeTrainConfig& cfg, TrainingReport* report = nullptr,
                      std::ostream* log = nullptr);

}  // namespace vjdet
