#include "dregn/curves.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dregn {

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "method,epoch,iteration,seconds,train_loss,val_recall,val_ndcg")
        throw std::runtime_error("malformed train log header in " + path);
    std::vector<CurvePoint> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        CurvePoint p;
        std::string tok;
        auto next = [&](std::string& dst) {
            if (!std::getline(ss, dst, ','))
                throw std::runtime_error(path + ": truncated row at line " +
                                         std::to_string(line_no));
        };
        try {
            next(p.method);
            next(tok); p.epoch = std::stoi(tok);
            next(tok); p.iteration = std::stol(tok);
            next(tok); p.seconds = std::stod(tok);
            next(tok); p.train_loss = std::stod(tok);
            next(tok); p.val_recall = std::stod(tok);
            next(tok); p.val_ndcg = std::stod(tok);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error(path + ": malformed row at line " + std::to_string(line_no));
        }
        points.push_back(std::move(p));
    }
    return points;
}

void write_merged_csv(const std::vector<CurvePoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(12);
    out << "method,epoch,iteration,seconds,train_loss,val_recall,val_ndcg\n";
    for (const auto& p : points)
        out << p.method << ',' << p.epoch << ',' << p.iteration << ',' << p.seconds << ','
            << p.train_loss << ',' << p.val_recall << ',' << p.val_ndcg << '\n';
}

std::vector<EfficiencySummary> efficiency_summary(const std::vector<CurvePoint>& points) {
    std::vector<std::string> methods;
    for (const auto& p : points)
        if (std::find(methods.begin(), methods.end(), p.method) == methods.end())
            methods.push_back(p.method);

    std::vector<EfficiencySummary> rows;
    for (const auto& method : methods) {
        EfficiencySummary row;
        row.method = method;
        for (const auto& p : points)
            if (p.method == method) row.final_recall = p.val_recall;
        const double threshold = 0.95 * row.final_recall;
        for (const auto& p : points) {
            if (p.method != method) continue;
            if (p.val_recall >= threshold) {
                row.iterations_to_95pct = p.iteration;
                break;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_summary_csv(const std::vector<EfficiencySummary>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(12);
    out << "method,final_recall,iterations_to_95pct\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.final_recall << ',' << r.iterations_to_95pct << '\n';
}

}  // namespace dregn
