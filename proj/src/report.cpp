#include <json.hpp>

#include "sidnet/train.hpp"

namespace sidnet {

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["protocol"] = report.protocol;
  j["level"] = report.level;
  j["train_level"] = report.train_level;
  j["overall_accuracy"] = report.overall_accuracy;
  j["accuracy_online"] = report.accuracy_online;
  j["accuracy_offline"] = report.accuracy_offline;
  j["total"] = report.total;
  j["correct"] = report.correct;
  j["labels"] = report.labels;
  j["confusion"] = report.confusion;  // row-major, rows = true label
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  return j.dump(2) + "\n";
}

}  // namespace sidnet
