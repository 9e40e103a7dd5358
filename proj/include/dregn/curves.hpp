#pragma once

#include <string>
#include <vector>

namespace dregn {

struct CurvePoint {
    std::string method;
    int epoch = 0;
    long iteration = 0;
    double seconds = 0.0;
    double train_loss = 0.0;
    double val_recall = 0.0;
    double val_ndcg = 0.0;
};

// Parses a TrainLog CSV as written by TrainLog::write_csv.
std::vector<CurvePoint> read_curve_csv(const std::string& path);

void write_merged_csv(const std::vector<CurvePoint>& points, const std::string& path);

struct EfficiencySummary {
    std::string method;
    double final_recall = 0.0;
    long iterations_to_95pct = -1;  // first iteration reaching 95% of final recall
};

// One summary per method: the earliest logged iteration at which validation
// recall reaches 95% of that method's final recall.
std::vector<EfficiencySummary> efficiency_summary(const std::vector<CurvePoint>& points);

void write_summary_csv(const std::vector<EfficiencySummary>& rows, const std::string& path);

}  // namespace dregn
