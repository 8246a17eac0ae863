#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/eval.hpp"

namespace physioml {

namespace detail {

inline std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

/// Index of the best (largest) value among the classifier rows, skipping the
/// Random baseline row.
inline std::size_t best_row(const std::vector<EvalRow>& rows, bool use_auc) {
    std::size_t best = 1;
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const double v = use_auc ? rows[i].auc : rows[i].acc;
        const double b = use_auc ? rows[best].auc : rows[best].acc;
        if (v > b) best = i;
    }
    return best;
}

}  // namespace detail

/// Aligned text table, one column group of (Acc, AUC) per report. The best
/// classifier per column is marked with '*'; the Random row is the
/// comparison point and is never marked.
inline std::string render_text(std::span<const EvalReport> reports) {
    if (reports.empty()) throw Error(Errc::empty_input, "no reports to render");
    const std::size_t n_rows = reports[0].rows.size();
    for (const auto& r : reports) {
        if (r.rows.size() != n_rows) {
            throw Error(Errc::invalid_config, "reports disagree on classifier rows");
        }
    }
    const int name_w = 10;
    const int cell_w = 9;
    std::ostringstream out;

    out << std::string(name_w, ' ');
    for (const auto& r : reports) {
        std::string head = r.protocol + " seed=" + std::to_string(r.seed);
        out << " | " << head;
    }
    out << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-*s", name_w, "Model");
    out << buf;
    for (std::size_t ri = 0; ri < reports.size(); ++ri) {
        std::snprintf(buf, sizeof(buf), " | %-*s %-*s", cell_w, "Acc", cell_w, "AUC");
        out << buf;
    }
    out << "\n";
    out << std::string(name_w, '-');
    for (std::size_t ri = 0; ri < reports.size(); ++ri) {
        out << "-+-" << std::string(2 * cell_w + 1, '-');
    }
    out << "\n";

    std::vector<std::size_t> best_acc, best_auc;
    for (const auto& r : reports) {
        best_acc.push_back(detail::best_row(r.rows, false));
        best_auc.push_back(detail::best_row(r.rows, true));
    }
    for (std::size_t row = 0; row < n_rows; ++row) {
        std::snprintf(buf, sizeof(buf), "%-*s", name_w, reports[0].rows[row].model.c_str());
        out << buf;
        for (std::size_t ri = 0; ri < reports.size(); ++ri) {
            const auto& r = reports[ri].rows[row];
            std::string acc = detail::fmt3(r.acc) + (row == best_acc[ri] ? "*" : "");
            std::string auc = detail::fmt3(r.auc) + (row == best_auc[ri] ? "*" : "");
            std::snprintf(buf, sizeof(buf), " | %-*s %-*s", cell_w, acc.c_str(), cell_w, auc.c_str());
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

/// CSV with the same layout: a Model column, then an (acc, auc) pair per
/// protocol cell. Protocol descriptor and seed ride in the header cells so
/// the format round-trips.
inline std::string render_csv(std::span<const EvalReport> reports) {
    if (reports.empty()) throw Error(Errc::empty_input, "no reports to render");
    std::ostringstream out;
    out << "model";
    for (const auto& r : reports) {
        out << ",acc[" << r.protocol << " seed=" << r.seed << "]";
        out << ",auc[" << r.protocol << " seed=" << r.seed << "]";
    }
    out << "\n";
    for (std::size_t row = 0; row < reports[0].rows.size(); ++row) {
        out << reports[0].rows[row].model;
        for (const auto& r : reports) {
            out << ',' << detail::fmt6(r.rows[row].acc) << ',' << detail::fmt6(r.rows[row].auc);
        }
        out << "\n";
    }
    return out.str();
}

inline std::vector<EvalReport> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::parse_error, "empty report CSV", 1);
    std::vector<std::string> cells;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
    }
    if (cells.empty() || cells[0] != "model" || cells.size() < 3 || (cells.size() - 1) % 2 != 0) {
        throw Error(Errc::parse_error, "bad report CSV header", 1);
    }
    std::vector<EvalReport> reports((cells.size() - 1) / 2);
    for (std::size_t ri = 0; ri < reports.size(); ++ri) {
        const std::string& acc_cell = cells[1 + 2 * ri];
        const std::string& auc_cell = cells[2 + 2 * ri];
        if (acc_cell.rfind("acc[", 0) != 0 || auc_cell.rfind("auc[", 0) != 0 ||
            acc_cell.back() != ']' || auc_cell.back() != ']') {
            throw Error(Errc::parse_error, "bad report CSV column pair", 1);
        }
        std::string desc = acc_cell.substr(4, acc_cell.size() - 5);
        if (desc != auc_cell.substr(4, auc_cell.size() - 5)) {
            throw Error(Errc::parse_error, "acc/auc columns disagree", 1);
        }
        const auto seed_pos = desc.rfind(" seed=");
        if (seed_pos == std::string::npos) throw Error(Errc::parse_error, "missing seed in header", 1);
        reports[ri].protocol = desc.substr(0, seed_pos);
        reports[ri].seed = std::strtoull(desc.c_str() + seed_pos + 6, nullptr, 10);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> row;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        if (row.size() != 1 + 2 * reports.size()) {
            throw Error(Errc::parse_error, "wrong column count at line " + std::to_string(lineno), lineno);
        }
        for (std::size_t ri = 0; ri < reports.size(); ++ri) {
            EvalRow er;
            er.model = row[0];
            try {
                er.acc = std::stod(row[1 + 2 * ri]);
                er.auc = std::stod(row[2 + 2 * ri]);
            } catch (const std::exception&) {
                throw Error(Errc::parse_error, "bad metric at line " + std::to_string(lineno), lineno);
            }
            reports[ri].rows.push_back(std::move(er));
        }
    }
    return reports;
}

}  // namespace physioml
