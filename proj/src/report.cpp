#include "fhelab/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace fhelab {

std::string format_number(double v) {
    if (v == 0) return "0";  // no "-0"
    return fmt::format("{:.6g}", v);
}

Table& Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("row width does not match the header");
    rows.push_back(std::move(row));
    return *this;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Table::Cell& c) {
    if (auto s = std::get_if<std::string>(&c)) return *s;
    if (auto d = std::get_if<double>(&c)) return format_number(*d);
    return std::to_string(std::get<std::int64_t>(c));
}

}  // namespace

std::string Table::csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_escape(columns[i]);
    out += '\n';
    for (auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_escape(cell_text(r[i]));
        out += '\n';
    }
    return out;
}

std::string Table::json() const {
    // ordered_json keeps the column order
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (auto& r : rows) {
        nlohmann::ordered_json o;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (auto s = std::get_if<std::string>(&r[i])) o[columns[i]] = *s;
            else if (auto d = std::get_if<double>(&r[i])) o[columns[i]] = std::stod(format_number(*d));
            else o[columns[i]] = std::get<std::int64_t>(r[i]);
        }
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

std::string Table::render(const std::string& format) const {
    if (format == "csv") return csv();
    if (format == "json") return json();
    throw std::invalid_argument("unknown format: " + format);
}

Table cost_table(const std::vector<CostReport>& rows, const std::vector<std::string>& labels) {
    Table t;
    t.columns = {"name", "total_gop", "mult_gop", "dram_gb", "limb_read_gb", "limb_write_gb", "key_read_gb", "ai"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& r = rows[i];
        t.add({i < labels.size() ? labels[i] : r.name, r.gop, r.gmult, r.gb, r.read_gb, r.write_gb, r.key_gb, r.ai});
    }
    return t;
}

CostReport evaluate_row(const CostModel& m, const TargetRow& r, int level) {
    static const char* kPhases[] = {"CoeffToSlot", "PolyEval63", "SlotToCoeff"};
    if (r.op == "Bootstrap") return m.cost_of_bootstrap();
    for (auto ph : kPhases)
        if (r.op == ph) {
            for (auto& b : m.cost_of_bootstrap().breakdown)
                if (b.name == ph) return b;
        }
    return m.cost_of(r.op, level, r.arg);
}

bool TableRun::pass() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellDeviation& c) { return c.pass; });
}

TableRun reproduce_table(const TargetTable& t, double tol) {
    Preset p = load_preset(t.preset);
    CostModel m(p.model, p.opts, p.cal, p.hw);
    return reproduce_table(t, m, tol);
}

TableRun reproduce_table(const TargetTable& t, const CostModel& m, double tol) {
    TableRun run;
    run.id = t.id;
    run.title = t.title;
    run.preset = t.preset;
    auto value = [](const CostReport& r, const std::string& col) {
        if (col == "gop") return r.gop;
        if (col == "gmult") return r.gmult;
        if (col == "gb") return r.gb;
        if (col == "read_gb") return r.read_gb;
        if (col == "write_gb") return r.write_gb;
        if (col == "key_gb") return r.key_gb;
        if (col == "ai") return r.ai;
        throw std::invalid_argument("unknown target column " + col);
    };
    for (auto& tr : t.rows) {
        for (auto& [col, v] : tr.cells) value(CostReport{}, col);  // rejects unknown columns
        CostReport r = evaluate_row(m, tr, t.level);
        run.labels.push_back(tr.label);
        for (const std::string col : {"gop", "gmult", "gb", "read_gb", "write_gb", "key_gb", "ai"}) {
            if (!tr.cells.count(col)) continue;
            const double pub = tr.cells.at(col);
            CellDeviation c;
            c.table = t.id;
            c.op = tr.op;
            c.label = tr.label;
            c.column = col;
            c.model = value(r, col);
            c.published = pub;
            c.reference = pub;
            // printed AI is truncated: compare against the row's own ratio
            if (col == "ai" && tr.cells.count("gop") && tr.cells.count("gb") && tr.cells.at("gb") > 0)
                c.reference = tr.cells.at("gop") / tr.cells.at("gb");
            c.deviation = c.reference != 0 ? (c.model - c.reference) / c.reference : (c.model == 0 ? 0 : INFINITY);
            c.gated = tr.gated && std::find(t.gate.begin(), t.gate.end(), col) != t.gate.end();
            c.pass = !c.gated || std::fabs(c.deviation) <= tol;
            run.cells.push_back(c);
        }
        run.rows.push_back(std::move(r));
    }
    return run;
}

Table deviation_table(const std::vector<TableRun>& runs) {
    Table t;
    t.columns = {"table", "row", "column", "model", "published", "reference", "deviation", "gated", "status"};
    for (auto& run : runs)
        for (auto& c : run.cells)
            t.add({c.table, c.label, c.column, c.model, c.published, c.reference, c.deviation,
                   std::string(c.gated ? "yes" : "no"), std::string(!c.gated ? "info" : c.pass ? "pass" : "FAIL")});
    return t;
}

Table gate_table(const std::vector<GateLine>& gates) {
    Table t;
    t.columns = {"gate", "status", "detail"};
    for (auto& g : gates) t.add({g.name, std::string(g.pass ? "pass" : "FAIL"), g.detail});
    return t;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// 1, 2, 5 steps
double nice_step(double range, int ticks) {
    double raw = range / ticks, mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10 * mag;
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series) {
    static const char* kColors[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948"};
    const double left = 70, right = 20, top = 40, bottom = 110, group_w = 60;
    const double plot_w = std::max<double>(300, group_w * labels.size()), plot_h = 300;
    const double width = left + plot_w + right, height = top + plot_h + bottom;
    double vmax = 0;
    for (auto& s : series) {
        if (s.values.size() != labels.size()) throw std::invalid_argument("series length does not match labels");
        for (double v : s.values) vmax = std::max(vmax, v);
    }
    if (vmax <= 0) vmax = 1;
    const double step = nice_step(vmax, 5);
    const double ymax = std::ceil(vmax / step) * step;
    auto y = [&](double v) { return top + plot_h * (1 - v / ymax); };

    std::string o = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n",
        width, height);
    o += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    o += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", width / 2,
                     xml_escape(title));
    for (double v = 0; v <= ymax + step / 2; v += step) {
        o += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", left, y(v),
                         left + plot_w, y(v));
        o += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 6, y(v) + 4,
                         format_number(v));
    }
    o += fmt::format(
        "<text transform=\"translate(16,{:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n", top + plot_h / 2,
        xml_escape(y_label));
    const double slot = plot_w / std::max<std::size_t>(1, labels.size());
    const double bar_w = 0.8 * slot / std::max<std::size_t>(1, series.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double x0 = left + i * slot + 0.1 * slot;
        for (std::size_t s = 0; s < series.size(); ++s) {
            double v = series[s].values[i];
            o += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
                             x0 + s * bar_w, y(v), bar_w, top + plot_h - y(v), kColors[s % 6]);
        }
        double cx = left + (i + 0.5) * slot;
        o += fmt::format(
            "<text transform=\"translate({:.1f},{:.1f}) rotate(-45)\" text-anchor=\"end\">{}</text>\n", cx,
            top + plot_h + 14, xml_escape(labels[i]));
    }
    o += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, top + plot_h,
                     left + plot_w);
    for (std::size_t s = 0; s < series.size(); ++s) {
        double lx = left + 10 + 140 * s;
        o += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", lx, height - 20,
                         kColors[s % 6]);
        o += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", lx + 14, height - 11, xml_escape(series[s].name));
    }
    o += "</svg>\n";
    return o;
}

std::string write_file(const std::string& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
    return path;
}

}  // namespace fhelab
