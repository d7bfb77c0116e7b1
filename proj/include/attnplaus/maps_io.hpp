#pragma once

#include <string>
#include <vector>

#include "attnplaus/metrics.hpp"

namespace attnplaus {

// JSONL, one object per line:
// {"pair_id": "...", "premise": [floats], "hypothesis": [floats]}
std::vector<AttentionMap> read_maps_jsonl(const std::string& path);
void write_maps_jsonl(const std::vector<AttentionMap>& maps, const std::string& path);

// Single JSON document with the full report. Non-finite values (the
// undefined fraction, degenerate grid points) serialize as null; the ROC
// anchor threshold serializes as the string "inf".
std::string report_to_json(const EvalReport& report);
void write_report_json(const EvalReport& report, const std::string& path);

std::string roc_to_csv(const RocCurve& curve);
void write_roc_csv(const RocCurve& curve, const std::string& path);

}  // namespace attnplaus
