#include "vjdet/cascade_json.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vjdet/cascade_xml.hpp"

namespace vjdet {

namespace {

using nlohmann::json;

json rect_to_json(const WeightedRect& wr) {
  return json{{"h", wr.rect.h}, {"w", wr.rect.w}, {"weight", wr.weight}, {"x", wr.rect.x}, {"y", wr.rect.y}};
}

json feature_to_json(const HaarFeature& f) {
  json rects = json::array();
  for (const auto& wr : f.rects) rects.push_back(rect_to_json(wr));
  return json{{"base_height", f.base_h}, {"base_width", f.base_w}, {"kind", feature_kind_name(f.kind)},
              {"norm", f.norm},          {"rects", rects}};
}

json config_to_json(const CascadeTrainConfig& cfg) {
  return json{{"F_target", cfg.F_target},
              {"base_height", cfg.base_h},
              {"base_width", cfg.base_w},
              {"cache_budget_bytes", cfg.cache_budget_bytes},
              {"cache_features", cfg.cache_features},
              {"d_min", cfg.d_min},
              {"f_max", cfg.f_max},
              {"holdout_fraction", cfg.holdout_fraction},
              {"max_stages", cfg.max_stages},
              {"max_weak_per_stage", cfg.max_weak_per_stage},
              {"negative_pool", cfg.negative_pool},
              {"seed", cfg.seed},
              {"threads", cfg.threads}};
}

json stage_record_to_json(const StageRecord& r) {
  return json{{"d", r.detection_rate},
              {"f", r.false_positive_rate},
              {"index", r.index},
              {"neg_pool", r.negative_pool},
              {"weak", r.weak_count}};
}

[[noreturn]] void schema_fail(const std::string& what) { raise(Errc::SchemaViolation, what); }

double finite_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) schema_fail(ctx + " must be a number");
  const double v = j.get<double>();
  if (std::isnan(v) || std::isinf(v)) schema_fail(ctx + " must be finite");
  return v;
}

int int_field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) schema_fail(ctx + " needs integer \"" + key + "\"");
  return obj[key].get<int>();
}

WeightedRect rect_from_json(const json& j, const std::string& ctx) {
  WeightedRect wr;
  wr.rect.x = int_field(j, "x", ctx);
  wr.rect.y = int_field(j, "y", ctx);
  wr.rect.w = int_field(j, "w", ctx);
  wr.rect.h = int_field(j, "h", ctx);
  if (!j.contains("weight")) schema_fail(ctx + " needs \"weight\"");
  wr.weight = finite_number(j["weight"], ctx + ".weight");
  if (wr.rect.w < 1 || wr.rect.h < 1) schema_fail(ctx + ": rect width/height must be >= 1");
  if (wr.rect.x < 0 || wr.rect.y < 0) schema_fail(ctx + ": rect origin must be >= 0");
  return wr;
}

HaarFeature feature_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) schema_fail(ctx + " must be an object");
  HaarFeature f;
  f.base_w = int_field(j, "base_width", ctx);
  f.base_h = int_field(j, "base_height", ctx);
  if (f.base_w < 1 || f.base_h < 1) schema_fail(ctx + ": base window must be >= 1x1");
  if (!j.contains("kind") || !j["kind"].is_string()) schema_fail(ctx + " needs string \"kind\"");
  f.kind = feature_kind_from_name(j["kind"].get<std::string>());
  f.norm = j.contains("norm") ? finite_number(j["norm"], ctx + ".norm") : 1.0;
  if (!j.contains("rects") || !j["rects"].is_array() || j["rects"].empty())
    schema_fail(ctx + " needs a non-empty \"rects\" array");
  std::size_t ri = 0;
  for (const json& r : j["rects"]) {
    const WeightedRect wr = rect_from_json(r, ctx + ".rects[" + std::to_string(ri++) + "]");
    if (wr.rect.right() > f.base_w || wr.rect.bottom() > f.base_h)
      schema_fail(ctx + ": rect outside the feature base window");
    f.rects.push_back(wr);
  }
  return f;
}

CascadeTrainConfig config_from_json(const json& j) {
  CascadeTrainConfig cfg;
  const std::string ctx = "provenance.config";
  cfg.base_w = int_field(j, "base_width", ctx);
  cfg.base_h = int_field(j, "base_height", ctx);
  cfg.d_min = finite_number(j.at("d_min"), ctx + ".d_min");
  cfg.f_max = finite_number(j.at("f_max"), ctx + ".f_max");
  cfg.F_target = finite_number(j.at("F_target"), ctx + ".F_target");
  cfg.max_stages = int_field(j, "max_stages", ctx);
  cfg.max_weak_per_stage = int_field(j, "max_weak_per_stage", ctx);
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.negative_pool = j.at("negative_pool").get<std::size_t>();
  cfg.holdout_fraction = finite_number(j.at("holdout_fraction"), ctx + ".holdout_fraction");
  cfg.cache_features = j.at("cache_features").get<bool>();
  cfg.cache_budget_bytes = j.at("cache_budget_bytes").get<std::size_t>();
  cfg.threads = int_field(j, "threads", ctx);
  return cfg;
}

}  // namespace

std::string to_canonical_json(const Cascade& c) {
  json stages = json::array();
  for (const Stage& stage : c.stages) {
    json weak = json::array();
    for (const WeakClassifier& w : stage.classifier.weak) {
      weak.push_back(json{{"alpha", w.alpha},
                          {"feature", feature_to_json(w.feature)},
                          {"polarity", w.polarity},
                          {"threshold", w.threshold}});
    }
    stages.push_back(json{{"threshold", stage.classifier.stage_threshold}, {"weak", weak}});
  }

  json doc{{"format", "vjdet-cascade"},
           {"version", 1},
           {"window", json{{"height", c.base_h}, {"width", c.base_w}}},
           {"stages", stages}};
  if (c.provenance.present) {
    json prov{{"config", config_to_json(c.provenance.config)}, {"seed", c.provenance.seed}};
    json records = json::array();
    for (const StageRecord& r : c.provenance.stages) records.push_back(stage_record_to_json(r));
    prov["stages"] = records;
    doc["provenance"] = prov;
  } else {
    doc["provenance"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

namespace {
Cascade cascade_from_doc(const json& doc);
}

Cascade from_canonical_json(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    raise(Errc::MalformedJson, e.what());
  }
  try {
    return cascade_from_doc(doc);
  } catch (const json::exception& e) {
    raise(Errc::SchemaViolation, e.what());
  }
}

namespace {

Cascade cascade_from_doc(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "vjdet-cascade")
    schema_fail("not a vjdet-cascade document");
  if (doc.value("version", 0) != 1) schema_fail("unsupported cascade document version");

  Cascade c;
  if (!doc.contains("window")) schema_fail("missing \"window\"");
  c.base_w = int_field(doc["window"], "width", "window");
  c.base_h = int_field(doc["window"], "height", "window");
  if (c.base_w < 1 || c.base_h < 1) schema_fail("window must be at least 1x1");

  if (!doc.contains("stages") || !doc["stages"].is_array()) schema_fail("missing \"stages\" array");
  std::size_t si = 0;
  for (const json& stage_j : doc["stages"]) {
    const std::string ctx = "stages[" + std::to_string(si++) + "]";
    if (!stage_j.is_object()) schema_fail(ctx + " must be an object");
    Stage stage;
    stage.classifier.stage_threshold = finite_number(stage_j.at("threshold"), ctx + ".threshold");
    if (!stage_j.contains("weak") || !stage_j["weak"].is_array()) schema_fail(ctx + " needs \"weak\" array");
    std::size_t wi = 0;
    for (const json& weak_j : stage_j["weak"]) {
      const std::string wctx = ctx + ".weak[" + std::to_string(wi++) + "]";
      WeakClassifier w;
      w.alpha = finite_number(weak_j.at("alpha"), wctx + ".alpha");
      if (w.alpha < 0) schema_fail(wctx + ": alpha must be >= 0");
      w.threshold = finite_number(weak_j.at("threshold"), wctx + ".threshold");
      w.polarity = int_field(weak_j, "polarity", wctx);
      if (w.polarity != 1 && w.polarity != -1) schema_fail(wctx + ": polarity must be +1 or -1");
      if (!weak_j.contains("feature")) schema_fail(wctx + " needs \"feature\"");
      w.feature = feature_from_json(weak_j["feature"], wctx + ".feature");
      stage.classifier.weak.push_back(std::move(w));
    }
    c.stages.push_back(std::move(stage));
  }

  if (doc.contains("provenance") && !doc["provenance"].is_null()) {
    const json& prov = doc["provenance"];
    c.provenance.present = true;
    c.provenance.seed = prov.at("seed").get<std::uint64_t>();
    c.provenance.config = config_from_json(prov.at("config"));
    if (prov.contains("stages")) {
      for (const json& r : prov["stages"]) {
        StageRecord rec;
        rec.index = int_field(r, "index", "provenance.stages");
        rec.weak_count = int_field(r, "weak", "provenance.stages");
        rec.detection_rate = finite_number(r.at("d"), "provenance.stages.d");
        rec.false_positive_rate = finite_number(r.at("f"), "provenance.stages.f");
        rec.negative_pool = r.at("neg_pool").get<std::size_t>();
        c.provenance.stages.push_back(rec);
      }
    }
  }
  return c;
}

}  // namespace

Cascade load_cascade_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::FileNotFound, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_canonical_json(buf.str());
}

Cascade load_cascade_auto(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::FileNotFound, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  std::size_t i = 0;
  while (i < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[i]))) ++i;
  if (i < bytes.size() && bytes[i] == '<') return parse_cascade_xml(bytes);
  return from_canonical_json(bytes);
}

std::string training_report_to_json(const TrainingReport& report) {
  json stages = json::array();
  for (const StageRecord& r : report.stages) stages.push_back(stage_record_to_json(r));
  json doc{{"config", config_to_json(report.config)},
           {"detection_estimate", report.detection_estimate},
           {"false_positive_estimate", report.false_positive_estimate},
           {"stages", stages},
           {"stop_reason", report.stop_reason}};
  return doc.dump(2) + "\n";
}

}  // namespace vjdet
