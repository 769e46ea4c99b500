#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fhelab/config.hpp"
#include "fhelab/cost.hpp"

namespace fhelab {

// A flat result table that renders to CSV or JSON (array of row objects).
struct Table {
    using Cell = std::variant<std::string, double, std::int64_t>;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    Table& add(std::vector<Cell> row);
    std::string csv() const;
    std::string json() const;
    std::string render(const std::string& format) const;  // "csv" or "json"
};

// doubles print with %.6g so reruns are byte-identical
std::string format_number(double v);

// column order of the published cost tables
Table cost_table(const std::vector<CostReport>& rows, const std::vector<std::string>& labels = {});

struct CellDeviation {
    std::string table, op, label, column;
    double model = 0, published = 0;
    double reference = 0;  // what the model is compared with: the published cell, or gop/gb for AI
    double deviation = 0;  // (model - reference) / reference
    bool gated = false, pass = true;
};

struct TableRun {
    std::string id, title, preset;
    std::vector<std::string> labels;
    std::vector<CostReport> rows;
    std::vector<CellDeviation> cells;
    bool pass() const;
};

// the row of the model a target row names (Bootstrap phases come from the bootstrap breakdown)
CostReport evaluate_row(const CostModel& m, const TargetRow& r, int level);
// runs the preset named by the table and compares every published cell
TableRun reproduce_table(const TargetTable& t, double tol);
// same, with a model the caller built
TableRun reproduce_table(const TargetTable& t, const CostModel& m, double tol);

Table deviation_table(const std::vector<TableRun>& runs);

struct GateLine {
    std::string name;
    bool pass = false;
    std::string detail;
};
Table gate_table(const std::vector<GateLine>& gates);

// grouped vertical bars, one group per label, one colour per series
struct BarSeries {
    std::string name;
    std::vector<double> values;
};
std::string svg_bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series);

// writes `text` to dir/name, creating dir; returns the path
std::string write_file(const std::string& dir, const std::string& name, const std::string& text);

}  // namespace fhelab
