#pragma once

#include <string>
#include <string_view>

#include "vjdet/cascade.hpp"

namespace vjdet {

/// Canonical JSON form: lossless for every cascade field including training
/// provenance, stable key order, shortest round-trip decimals. The schema is
/// documented in docs/cascade_schema.json.
std::string to_canonical_json(const Cascade& c);

Cascade from_canonical_json(std::string_view bytes);

Cascade load_cascade_json(const std::string& path);

/// Loads either format, dispatching on the leading bytes.
Cascade load_cascade_auto(const std::string& path);

std::string training_report_to_json(const TrainingReport& report);

}  // namespace vjdet
