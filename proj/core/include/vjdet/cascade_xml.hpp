#pragma once

#include <string>
#include <string_view>

#include "vjdet/cascade.hpp"

namespace vjdet {

/// Parses a new-style traincascade document (stageType BOOST, featureType
/// HAAR, stump trees). Leaf pairs map onto the stump model: vote weight
/// alpha = |l1 - l0|, polarity from which leaf is larger, the constant parts
/// folded into the stage threshold; decisions are preserved exactly except
/// on measure-zero threshold ties. LBP/HOG and tilted features are rejected
/// as UnsupportedFeatureType, deeper trees as UnsupportedTreeShape, the
/// legacy haartraining layout as UnsupportedFormat.
Cascade parse_cascade_xml(std::string_view bytes);

Cascade load_cascade_xml(const std::string& path);

/// Deterministic byte output: fixed element order, shortest round-trip
/// decimals. Zero-stage cascades write stageNum 0.
std::string write_cascade_xml(const Cascade& c);

}  // namespace vjdet
