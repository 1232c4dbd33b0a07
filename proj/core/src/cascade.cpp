#include "vjdet/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "vjdet/dataset.hpp"
#include "vjdet/detect.hpp"

namespace vjdet {

ClassifyResult classify_window(const Cascade& c, const IntegralImage& ii, const Rect& window, double inv_stddev,
                               EvalCounters* counters) {
  const Cascade* active = &c;
  Cascade scaled;
  if (!c.stages.empty() && (window.w != c.base_w || window.h != c.base_h)) {
    if (c.base_w < 1 || window.w < c.base_w)
      raise(Errc::FeatureOutOfWindow, "window smaller than cascade base");
    const double scale = static_cast<double>(window.w) / c.base_w;
    scaled = scale_cascade(c, scale);
    if (std::abs(scaled.base_h - window.h) > 1 || scaled.base_w != window.w)
      raise(Errc::FeatureOutOfWindow, "window aspect does not match cascade base");
    scaled.base_h = window.h;
    active = &scaled;
  }

  ClassifyResult result;
  for (std::size_t s = 0; s < active->stages.size(); ++s) {
    const StrongClassifier& sc = active->stages[s].classifier;
    double score = 0.0;
    for (const auto& weak : sc.weak) {
      const double v = evaluate(weak.feature, ii, window, inv_stddev);
      if (weak.predict_value(v)) score += weak.alpha;
    }
    if (counters) {
      ++counters->stages_evaluated;
      counters->features_evaluated += static_cast<long long>(sc.weak.size());
    }
    result.last_margin = score - sc.stage_threshold;
    if (score < sc.stage_threshold) {
      result.accepted = false;
      result.rejected_at = static_cast<int>(s);
      return result;
    }
  }
  result.accepted = true;
  result.rejected_at = -1;
  return result;
}

double calibrate_stage_threshold(std::span<const double> positive_scores, double d_min) {
  if (positive_scores.empty()) raise(Errc::EmptyValidationSet, "no validation positives");
  if (!(d_min > 0.0) || d_min > 1.0) raise(Errc::InvalidConfig, "d_min must be in (0, 1]");

  std::vector<double> sorted(positive_scores.begin(), positive_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // Number of positives allowed to fall below the threshold.
  std::size_t allowed = static_cast<std::size_t>(std::floor((1.0 - d_min) * static_cast<double>(n) + 1e-9));
  allowed = std::min(allowed, n - 1);
  return sorted[allowed] - 1e-9;
}

double calibrate_stage_threshold(const StrongClassifier& sc, std::span<const TrainingSample> validation_positives,
                                 double d_min) {
  if (validation_positives.empty()) raise(Errc::EmptyValidationSet, "no validation positives");
  std::vector<double> scores;
  scores.reserve(validation_positives.size());
  for (const auto& s : validation_positives) {
    const Rect window{0, 0, s.ii.image_width(), s.ii.image_height()};
    scores.push_back(strong_score(sc, s.ii, window, s.inv_stddev));
  }
  return calibrate_stage_threshold(scores, d_min);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 step
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double fraction_passing(const StrongClassifier& sc, std::span<const TrainingSample> samples, double threshold,
                        bool positives_only, bool negatives_only) {
  std::size_t total = 0;
  std::size_t passing = 0;
  for (const auto& s : samples) {
    if (positives_only && !s.positive) continue;
    if (negatives_only && s.positive) continue;
    ++total;
    const Rect window{0, 0, s.ii.image_width(), s.ii.image_height()};
    if (strong_score(sc, s.ii, window, s.inv_stddev) >= threshold) ++passing;
  }
  return total == 0 ? 0.0 : static_cast<double>(passing) / static_cast<double>(total);
}

}  // namespace

std::vector<TrainingSample> bootstrap_negatives(const Cascade& c, std::span<const GrayImage> negative_images,
                                                std::size_t needed, std::uint64_t seed) {
  if (needed < 1) raise(Errc::InvalidConfig, "needed must be >= 1");
  if (c.base_w < 1 || c.base_h < 1) raise(Errc::InvalidConfig, "cascade base window unset");

  struct Candidate {
    std::size_t image;
    Rect window;
  };

  std::mt19937_64 rng(mix_seed(seed, 0x626f6f74));
  std::vector<Candidate> reservoir;
  reservoir.reserve(needed);
  std::size_t seen = 0;

  DetectParams grid;  // detector defaults: scale_step 1.1, stride 2
  for (std::size_t idx = 0; idx < negative_images.size(); ++idx) {
    const GrayImage& img = negative_images[idx];
    if (img.width() < c.base_w || img.height() < c.base_h) continue;
    const IntegralImage ii(img);
    for (const ScanScale& level : scan_scales(c.base_w, c.base_h, img.width(), img.height(), grid)) {
      const Cascade scaled = level.scale == 1.0 ? Cascade{} : scale_cascade(c, level.scale);
      const Cascade& active = level.scale == 1.0 ? c : scaled;
      for (int y = 0; y + level.win_h <= img.height(); y += level.stride) {
        for (int x = 0; x + level.win_w <= img.width(); x += level.stride) {
          const Rect window{x, y, level.win_w, level.win_h};
          const double inv_stddev = 1.0 / ii.window_stats(window).stddev;
          bool accepted = true;
          for (const Stage& stage : active.stages) {
            double score = 0.0;
            for (const auto& weak : stage.classifier.weak) {
              const double v = evaluate(weak.feature, ii, window, inv_stddev);
              if (weak.predict_value(v)) score += weak.alpha;
            }
            if (score < stage.classifier.stage_threshold) {
              accepted = false;
              break;
            }
          }
          if (!accepted) continue;
          ++seen;
          if (reservoir.size() < needed) {
            reservoir.push_back(Candidate{idx, window});
          } else {
            const std::size_t j = rng() % seen;
            if (j < needed) reservoir[j] = Candidate{idx, window};
          }
        }
      }
    }
  }

  if (reservoir.size() * 2 < needed)
    raise(Errc::InsufficientNegatives,
          "found " + std::to_string(reservoir.size()) + " of " + std::to_string(needed) + " negatives");

  std::shuffle(reservoir.begin(), reservoir.end(), rng);

  std::vector<TrainingSample> out;
  out.reserve(reservoir.size());
  for (const Candidate& cand : reservoir) {
    GrayImage crop = crop_to_window(negative_images[cand.image], cand.window, c.base_w, c.base_h);
    out.push_back(TrainingSample::from_image(crop, false));
  }
  return out;
}

Cascade train_cascade(std::span<const GrayImage> positives, std::span<const GrayImage> negative_images,
                      const CascadeTrainConfig& cfg, TrainingReport* report, std::ostream* log) {
  if (!(cfg.f_max > 0.0 && cfg.f_max < 1.0)) raise(Errc::InvalidConfig, "f_max must be in (0, 1)");
  if (!(cfg.d_min > 0.0 && cfg.d_min <= 1.0)) raise(Errc::InvalidConfig, "d_min must be in (0, 1]");
  if (!(cfg.F_target < cfg.f_max)) raise(Errc::InvalidConfig, "F_target must be below f_max");
  if (cfg.max_stages < 1 || cfg.max_weak_per_stage < 1) raise(Errc::InvalidConfig, "stage limits must be >= 1");
  if (cfg.base_w < 4 || cfg.base_h < 4) raise(Errc::WindowTooSmall, "base window must be at least 4x4");
  if (positives.empty()) raise(Errc::DegenerateSamples, "no positive samples");
  if (!(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0))
    raise(Errc::InvalidConfig, "holdout_fraction must be in [0, 1)");

  bool any_negative_fits = false;
  for (const auto& img : negative_images)
    if (img.width() >= cfg.base_w && img.height() >= cfg.base_h) any_negative_fits = true;
  if (!any_negative_fits)
    raise(Errc::InsufficientNegatives, "need at least one negative image covering the base window");

  std::vector<TrainingSample> all_positives;
  all_positives.reserve(positives.size());
  for (const auto& img : positives) {
    if (img.width() != cfg.base_w || img.height() != cfg.base_h)
      raise(Errc::OutOfBounds, "positive sample does not match the base window size");
    all_positives.push_back(TrainingSample::from_image(img, true));
  }

  // Optional calibration holdout; by default the stage's own positives
  // calibrate its threshold (a known optimism bias at desk scale).
  std::vector<std::size_t> order(all_positives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t holdout = 0;
  if (cfg.holdout_fraction > 0.0) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x686f6c64));
    std::shuffle(order.begin(), order.end(), rng);
    holdout = static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(order.size()));
    if (holdout == 0 || holdout >= order.size())
      raise(Errc::InvalidConfig, "holdout_fraction leaves an empty split");
  }
  std::vector<TrainingSample> validation;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < holdout)
      validation.push_back(all_positives[order[i]]);
    else
      train_idx.push_back(order[i]);
  }

  const std::vector<HaarFeature> pool = enumerate_features(cfg.base_w, cfg.base_h);
  const std::size_t neg_needed = cfg.negative_pool == 0 ? train_idx.size() : cfg.negative_pool;

  Cascade cascade;
  cascade.base_w = cfg.base_w;
  cascade.base_h = cfg.base_h;

  TrainingReport rep;
  rep.config = cfg;

  BoostConfig boost_cfg;
  boost_cfg.cache_features = cfg.cache_features;
  boost_cfg.cache_budget_bytes = cfg.cache_budget_bytes;
  boost_cfg.threads = cfg.threads;

  std::string stop_reason;
  for (int stage_index = 0; stage_index < cfg.max_stages; ++stage_index) {
    std::vector<TrainingSample> stage_samples;
    try {
      stage_samples = bootstrap_negatives(cascade, negative_images, neg_needed,
                                          mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(stage_index)));
    } catch (const Error& e) {
      if (e.code() == Errc::InsufficientNegatives && stage_index > 0) {
        stop_reason = "negatives_exhausted";
        break;
      }
      throw;
    }

    const std::size_t n_neg = stage_samples.size();
    const std::size_t n_pos = train_idx.size();
    // Balanced initial distribution: half the mass per class.
    for (auto& s : stage_samples) s.weight = 0.5 / static_cast<double>(n_neg);
    for (std::size_t i : train_idx) {
      TrainingSample s = all_positives[i];
      s.weight = 0.5 / static_cast<double>(n_pos);
      stage_samples.push_back(std::move(s));
    }

    std::span<const TrainingSample> calib =
        validation.empty() ? std::span<const TrainingSample>(stage_samples).subspan(n_neg)
                           : std::span<const TrainingSample>(validation);

    AdaBoostTrainer trainer(stage_samples, pool, boost_cfg);
    StrongClassifier stage_sc;
    double stage_f = 1.0;
    double stage_d = 0.0;
    bool have_stage = false;
    for (int round = 0; round < cfg.max_weak_per_stage; ++round) {
      if (!trainer.boost_round()) break;
      StrongClassifier sc = trainer.classifier();
      sc.stage_threshold = calibrate_stage_threshold(sc, calib, cfg.d_min);
      const double f = fraction_passing(sc, std::span<const TrainingSample>(stage_samples).first(n_neg),
                                        sc.stage_threshold, false, true);
      const double d = fraction_passing(sc, calib, sc.stage_threshold, true, false);
      stage_sc = std::move(sc);
      stage_f = f;
      stage_d = d;
      have_stage = true;
      if (f <= cfg.f_max) break;
    }
    if (!have_stage) {
      stop_reason = "pool_exhausted";
      break;
    }

    cascade.stages.push_back(Stage{stage_sc});
    StageRecord record{stage_index, static_cast<int>(stage_sc.weak.size()), stage_d, stage_f, n_neg};
    rep.stages.push_back(record);
    rep.false_positive_estimate *= stage_f;
    rep.detection_estimate *= stage_d;

    if (log) {
      (*log) << "stage=" << record.index << " weak=" << record.weak_count << " d=" << record.detection_rate
             << " f=" << record.false_positive_rate << " negpool=" << record.negative_pool << "\n";
    }

    if (rep.false_positive_estimate <= cfg.F_target) {
      stop_reason = "f_target_reached";
      break;
    }
  }
  if (stop_reason.empty()) stop_reason = "max_stages";
  rep.stop_reason = stop_reason;

  cascade.provenance.present = true;
  cascade.provenance.seed = cfg.seed;
  cascade.provenance.config = cfg;
  cascade.provenance.stages = rep.stages;

  if (report) *report = rep;
  return cascade;
}

}  // namespace vjdet
