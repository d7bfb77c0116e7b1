#include "attnplaus/maps_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "attnplaus/errors.hpp"

namespace attnplaus {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<double> read_score_array(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_array())
    throw FormatError(std::string("attention map object lacks array '") + key + "'", line);
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& v : j[key]) {
    if (!v.is_number())
      throw FormatError(std::string("non-numeric entry in '") + key + "'", line);
    double x = v.get<double>();
    if (!std::isfinite(x) || x < 0.0)
      throw FormatError(std::string("entry in '") + key + "' is negative or not finite",
                        line);
    out.push_back(x);
  }
  return out;
}

ordered_json correlation_json(const Correlation& c) {
  return ordered_json{{"coefficient", c.coefficient}, {"p_value", c.p_value}};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace

std::vector<AttentionMap> read_maps_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open attention map file " + path);
  std::vector<AttentionMap> maps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw FormatError("line is not a JSON object", line_no);
    AttentionMap m;
    if (!j.contains("pair_id") || !j["pair_id"].is_string())
      throw FormatError("attention map object lacks string 'pair_id'", line_no);
    m.pair_id = j["pair_id"].get<std::string>();
    m.premise = read_score_array(j, "premise", line_no);
    m.hypothesis = read_score_array(j, "hypothesis", line_no);
    maps.push_back(std::move(m));
  }
  if (maps.empty()) throw DataError("no attention maps in " + path);
  return maps;
}

void write_maps_jsonl(const std::vector<AttentionMap>& maps, const std::string& path) {
  std::string body;
  for (const auto& m : maps) {
    ordered_json j;
    j["pair_id"] = m.pair_id;
    j["premise"] = m.premise;
    j["hypothesis"] = m.hypothesis;
    body += j.dump();
    body += '\n';
  }
  write_file(path, body);
}

std::string report_to_json(const EvalReport& report) {
  ordered_json j;
  j["pair_count"] = report.pair_count;
  j["auc"] = report.auc_value;

  ordered_json roc = ordered_json::array();
  for (const auto& p : report.roc.points) {
    ordered_json point;
    if (std::isinf(p.epsilon))
      point["epsilon"] = "inf";
    else
      point["epsilon"] = p.epsilon;
    point["tpr"] = p.tpr;
    point["fpr"] = p.fpr;
    roc.push_back(std::move(point));
  }
  j["roc"] = std::move(roc);

  ordered_json rows = ordered_json::array();
  for (const auto& row : report.auc_table.rows) {
    ordered_json r;
    r["epsilon"] = row.epsilon;
    r["auc_human"] = row.auc_human ? ordered_json(*row.auc_human) : ordered_json(nullptr);
    r["auc_model"] = row.auc_model ? ordered_json(*row.auc_model) : ordered_json(nullptr);
    rows.push_back(std::move(r));
  }
  j["auc_vs_epsilon"]["rows"] = std::move(rows);
  j["auc_vs_epsilon"]["fraction_human_better"] =
      std::isnan(report.auc_table.fraction_human_better)
          ? ordered_json(nullptr)
          : ordered_json(report.auc_table.fraction_human_better);
  j["auc_vs_epsilon"]["undefined_points"] = report.auc_table.undefined_points;

  j["global_correlation"]["pearson"]["premise"] =
      correlation_json(report.global.pearson_premise);
  j["global_correlation"]["pearson"]["hypothesis"] =
      correlation_json(report.global.pearson_hypothesis);
  j["global_correlation"]["pearson"]["general"] =
      correlation_json(report.global.pearson_general);
  j["global_correlation"]["spearman"]["premise"] =
      correlation_json(report.global.spearman_premise);
  j["global_correlation"]["spearman"]["hypothesis"] =
      correlation_json(report.global.spearman_hypothesis);
  j["global_correlation"]["spearman"]["general"] =
      correlation_json(report.global.spearman_general);

  auto instance_json = [](const std::vector<InstanceStat>& stats) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : stats) {
      arr.push_back(ordered_json{{"pair_id", s.pair_id},
                                 {"js", s.js},
                                 {"spearman", s.spearman},
                                 {"pearson", s.pearson}});
    }
    return arr;
  };
  j["per_instance"]["skipped"] = report.per_instance.skipped;
  j["per_instance"]["premise"] = instance_json(report.per_instance.premise);
  j["per_instance"]["hypothesis"] = instance_json(report.per_instance.hypothesis);

  return j.dump(2) + "\n";
}

void write_report_json(const EvalReport& report, const std::string& path) {
  write_file(path, report_to_json(report));
}

std::string roc_to_csv(const RocCurve& curve) {
  std::string csv = "epsilon,tpr,fpr\n";
  char buf[96];
  for (const auto& p : curve.points) {
    if (std::isinf(p.epsilon))
      std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g\n", p.tpr, p.fpr);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.epsilon, p.tpr, p.fpr);
    csv += buf;
  }
  return csv;
}

void write_roc_csv(const RocCurve& curve, const std::string& path) {
  write_file(path, roc_to_csv(curve));
}

}  // namespace attnplaus
