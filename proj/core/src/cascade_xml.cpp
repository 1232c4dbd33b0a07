#include "vjdet/cascade_xml.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "num_format.hpp"
#include "xml_mini.hpp"

namespace vjdet {

namespace {

using numfmt::format_double;
using numfmt::parse_double_list;
using numfmt::parse_long;
using numfmt::trim;
using xmlmini::Element;

const Element& require_child(const Element& parent, std::string_view name) {
  const Element* c = parent.child(name);
  if (!c) raise(Errc::SchemaViolation, "missing <" + std::string(name) + "> under <" + parent.name + ">");
  return *c;
}

std::string text_of(const Element& e) { return std::string(trim(e.text)); }

long int_of(const Element& parent, std::string_view name) {
  return parse_long(trim(require_child(parent, name).text), Errc::SchemaViolation, std::string(name));
}

HaarFeature parse_feature_entry(const Element& entry, int width, int height, std::size_t index) {
  const std::string ctx = "feature " + std::to_string(index);
  if (const Element* tilted = entry.child("tilted")) {
    if (parse_long(trim(tilted->text), Errc::SchemaViolation, ctx) != 0)
      raise(Errc::UnsupportedFeatureType, ctx + ": tilted features are not supported");
  }
  const Element& rects = require_child(entry, "rects");
  HaarFeature feature;
  feature.kind = FeatureKind::Generic;
  feature.base_w = width;
  feature.base_h = height;
  for (const Element& r : rects.children) {
    if (r.name != "_") continue;
    const std::vector<double> v = parse_double_list(r.text, Errc::SchemaViolation, ctx + " rect");
    if (v.size() != 5) raise(Errc::SchemaViolation, ctx + ": rect entry needs 5 numbers, got " + std::to_string(v.size()));
    Rect rect{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])};
    for (int i = 0; i < 4; ++i)
      if (v[i] != std::floor(v[i])) raise(Errc::SchemaViolation, ctx + ": rect coordinates must be integers");
    if (rect.x < 0 || rect.y < 0 || rect.w < 1 || rect.h < 1 || rect.right() > width || rect.bottom() > height)
      raise(Errc::SchemaViolation, ctx + ": rect outside the " + std::to_string(width) + "x" +
                                       std::to_string(height) + " window");
    feature.rects.push_back(WeightedRect{rect, v[4]});
  }
  if (feature.rects.empty()) raise(Errc::SchemaViolation, ctx + ": no rects");
  return feature;
}

}  // namespace

Cascade parse_cascade_xml(std::string_view bytes) {
  const Element root = xmlmini::parse(bytes);
  if (root.name != "opencv_storage")
    raise(Errc::SchemaViolation, "expected <opencv_storage> root, found <" + root.name + ">");

  const Element* cascade_el = nullptr;
  for (const Element& c : root.children) {
    if (c.name == "cascade") {
      cascade_el = &c;
      break;
    }
    // The legacy haartraining layout has an arbitrarily named root holding
    // <size> and <stages> but no <stageType>.
    if (c.child("stageType") == nullptr && (c.child("size") != nullptr || c.child("stages") != nullptr)) {
      raise(Errc::UnsupportedFormat,
            "legacy haartraining cascade <" + c.name + "> is not supported; re-train with traincascade");
    }
  }
  if (!cascade_el) raise(Errc::SchemaViolation, "no <cascade> element");
  const Element& cascade = *cascade_el;

  if (text_of(require_child(cascade, "stageType")) != "BOOST")
    raise(Errc::SchemaViolation, "stageType must be BOOST");
  const std::string feature_type = text_of(require_child(cascade, "featureType"));
  if (feature_type != "HAAR")
    raise(Errc::UnsupportedFeatureType, "featureType " + feature_type + " is not supported (HAAR only)");

  const long width = int_of(cascade, "width");
  const long height = int_of(cascade, "height");
  if (width < 1 || height < 1 || width > 1 << 16 || height > 1 << 16)
    raise(Errc::SchemaViolation, "bad cascade window size");

  // Feature table first; stages reference it by index.
  const Element& features_el = require_child(cascade, "features");
  std::vector<HaarFeature> features;
  for (const Element& entry : features_el.children) {
    if (entry.name != "_") continue;
    features.push_back(parse_feature_entry(entry, static_cast<int>(width), static_cast<int>(height),
                                           features.size()));
  }

  Cascade out;
  out.base_w = static_cast<int>(width);
  out.base_h = static_cast<int>(height);

  const Element& stages_el = require_child(cascade, "stages");
  std::size_t stage_index = 0;
  for (const Element& stage_el : stages_el.children) {
    if (stage_el.name != "_") continue;
    const std::string ctx = "stage " + std::to_string(stage_index);

    const double stage_threshold = numfmt::parse_double(trim(require_child(stage_el, "stageThreshold").text),
                                                        Errc::SchemaViolation, ctx + " stageThreshold");
    const Element& weaks_el = require_child(stage_el, "weakClassifiers");

    StrongClassifier sc;
    double base_offset = 0.0;
    std::size_t weak_index = 0;
    for (const Element& weak_el : weaks_el.children) {
      if (weak_el.name != "_") continue;
      const std::string wctx = ctx + " weak " + std::to_string(weak_index);

      const std::vector<double> nodes =
          parse_double_list(require_child(weak_el, "internalNodes").text, Errc::SchemaViolation, wctx);
      const std::vector<double> leaves =
          parse_double_list(require_child(weak_el, "leafValues").text, Errc::SchemaViolation, wctx);
      if (nodes.size() != 4)
        raise(Errc::UnsupportedTreeShape, wctx + ": only single-node stumps are supported (got " +
                                              std::to_string(nodes.size()) + " node values)");
      if (leaves.size() != 2) raise(Errc::UnsupportedTreeShape, wctx + ": stump needs exactly 2 leaves");
      if (nodes[0] != 0.0 || nodes[1] != -1.0)
        raise(Errc::UnsupportedTreeShape, wctx + ": unexpected stump child links");

      const long feature_index = static_cast<long>(nodes[2]);
      if (feature_index < 0 || static_cast<std::size_t>(feature_index) >= features.size())
        raise(Errc::SchemaViolation, wctx + ": feature index " + std::to_string(feature_index) +
                                         " outside table of " + std::to_string(features.size()));

      // Leaf pair -> stump vote. Value < threshold selects leaves[0].
      const double l0 = leaves[0];
      const double l1 = leaves[1];
      WeakClassifier weak;
      weak.feature = features[static_cast<std::size_t>(feature_index)];
      weak.threshold = nodes[3];
      if (l0 >= l1) {
        weak.polarity = +1;
        weak.alpha = l0 - l1;
        base_offset += l1;
      } else {
        weak.polarity = -1;
        weak.alpha = l1 - l0;
        base_offset += l0;
      }
      sc.weak.push_back(std::move(weak));
      ++weak_index;
    }
    if (sc.weak.empty()) raise(Errc::SchemaViolation, ctx + ": stage has no weak classifiers");
    sc.stage_threshold = stage_threshold - base_offset;
    out.stages.push_back(Stage{std::move(sc)});
    ++stage_index;
  }

  if (const Element* stage_num = cascade.child("stageNum")) {
    const long declared = parse_long(trim(stage_num->text), Errc::SchemaViolation, "stageNum");
    if (declared != static_cast<long>(out.stages.size()))
      raise(Errc::SchemaViolation, "stageNum " + std::to_string(declared) + " does not match " +
                                       std::to_string(out.stages.size()) + " stage entries");
  }
  return out;
}

Cascade load_cascade_xml(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::FileNotFound, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cascade_xml(buf.str());
}

std::string write_cascade_xml(const Cascade& c) {
  // Deduplicated feature table in first-use order.
  std::map<std::string, std::size_t> feature_index;
  std::vector<const HaarFeature*> table;
  const auto feature_key = [](const HaarFeature& f) {
    std::string key;
    for (const auto& wr : f.rects) {
      key += std::to_string(wr.rect.x) + ',' + std::to_string(wr.rect.y) + ',' + std::to_string(wr.rect.w) +
             ',' + std::to_string(wr.rect.h) + ',' + format_double(wr.weight) + ';';
    }
    return key;
  };
  for (const Stage& stage : c.stages) {
    for (const WeakClassifier& weak : stage.classifier.weak) {
      const std::string key = feature_key(weak.feature);
      if (feature_index.emplace(key, table.size()).second) table.push_back(&weak.feature);
    }
  }

  std::ostringstream os;
  os << "<?xml version=\"1.0\"?>\n";
  os << "<opencv_storage>\n";
  os << "<cascade type_id=\"opencv-cascade-classifier\">\n";
  os << "  <stageType>BOOST</stageType>\n";
  os << "  <featureType>HAAR</featureType>\n";
  os << "  <height>" << c.base_h << "</height>\n";
  os << "  <width>" << c.base_w << "</width>\n";
  int max_weak = 1;
  for (const Stage& s : c.stages) max_weak = std::max(max_weak, static_cast<int>(s.classifier.weak.size()));
  os << "  <stageParams>\n";
  os << "    <boostType>DAB</boostType>\n";
  os << "    <maxDepth>1</maxDepth>\n";
  os << "    <maxWeakCount>" << max_weak << "</maxWeakCount></stageParams>\n";
  os << "  <featureParams>\n";
  os << "    <maxCatCount>0</maxCatCount>\n";
  os << "    <featSize>1</featSize>\n";
  os << "    <mode>BASIC</mode></featureParams>\n";
  os << "  <stageNum>" << c.stages.size() << "</stageNum>\n";
  os << "  <stages>\n";
  for (const Stage& stage : c.stages) {
    const StrongClassifier& sc = stage.classifier;
    // Our stump (threshold t, polarity p, vote alpha) becomes the leaf pair
    // (alpha, 0) for p = +1 and (0, alpha) for p = -1; offsets cancel, so
    // the stage threshold passes through unchanged.
    os << "    <_>\n";
    os << "      <maxWeakCount>" << sc.weak.size() << "</maxWeakCount>\n";
    os << "      <stageThreshold>" << format_double(sc.stage_threshold) << "</stageThreshold>\n";
    os << "      <weakClassifiers>\n";
    for (const WeakClassifier& weak : sc.weak) {
      const std::size_t fi = feature_index.at(feature_key(weak.feature));
      os << "        <_>\n";
      os << "          <internalNodes>0 -1 " << fi << " " << format_double(weak.threshold)
         << "</internalNodes>\n";
      if (weak.polarity > 0)
        os << "          <leafValues>" << format_double(weak.alpha) << " 0</leafValues></_>\n";
      else
        os << "          <leafValues>0 " << format_double(weak.alpha) << "</leafValues></_>\n";
    }
    os << "      </weakClassifiers></_>\n";
  }
  os << "  </stages>\n";
  os << "  <features>\n";
  for (const HaarFeature* f : table) {
    os << "    <_>\n";
    os << "      <rects>\n";
    for (const auto& wr : f->rects) {
      os << "        <_>" << wr.rect.x << " " << wr.rect.y << " " << wr.rect.w << " " << wr.rect.h << " "
         << format_double(wr.weight) << "</_>\n";
    }
    os << "      </rects>\n";
    os << "      <tilted>0</tilted></_>\n";
  }
  os << "  </features>\n";
  os << "</cascade>\n";
  os << "</opencv_storage>\n";
  return os.str();
}

}  // namespace vjdet
