#include "flame/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace flame {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& token, std::size_t row, const std::string& column) {
    const std::string text = strip(token);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty()) {
        throw DataError("non-numeric cell '" + token + "' at row " + std::to_string(row) +
                        ", column '" + column + "'");
    }
    return value;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

RawTable read_table(const std::string& path) {
    std::ifstream input(path);
    if (!input) {
        throw DataError("cannot open file: " + path);
    }
    RawTable table;
    std::string line;
    if (!std::getline(input, line)) {
        throw DataError("file is empty (no header row): " + path);
    }
    table.header = split_line(line);
    for (auto& name : table.header) name = strip(name);
    std::size_t row_number = 1;
    while (std::getline(input, line)) {
        ++row_number;
        if (strip(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw DataError("row " + std::to_string(row_number) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

}  // namespace

LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& positive_token) {
    RawTable table = read_table(path);
    const auto label_it =
        std::find(table.header.begin(), table.header.end(), strip(label_column));
    if (label_it == table.header.end()) {
        throw DataError("label column '" + label_column + "' not found in header of " + path);
    }
    if (table.rows.empty()) {
        throw DataError("empty dataset: file has a header but no data rows: " + path);
    }
    const std::size_t label_idx =
        static_cast<std::size_t>(std::distance(table.header.begin(), label_it));

    std::vector<std::string> tokens;
    for (const auto& row : table.rows) {
        const std::string token = strip(row[label_idx]);
        if (std::find(tokens.begin(), tokens.end(), token) == tokens.end()) {
            tokens.push_back(token);
        }
    }
    if (tokens.size() > 2) {
        std::string listing;
        for (const auto& t : tokens) listing += (listing.empty() ? "" : ", ") + t;
        throw DataError("label column '" + label_column + "' carries " +
                        std::to_string(tokens.size()) + " values (" + listing +
                        "); binary labels required");
    }
    if (tokens.size() < 2) {
        throw DataError("label column '" + label_column + "' is constant ('" + tokens.front() +
                        "'); both classes are required");
    }
    if (std::find(tokens.begin(), tokens.end(), strip(positive_token)) == tokens.end()) {
        throw DataError("positive label token '" + positive_token + "' does not occur in column '" +
                        label_column + "'");
    }

    const std::size_t d = table.header.size() - 1;
    if (d == 0) {
        throw DataError("no feature columns besides the label column in " + path);
    }
    Eigen::MatrixXd features(static_cast<Eigen::Index>(table.rows.size()),
                             static_cast<Eigen::Index>(d));
    Eigen::VectorXd labels(static_cast<Eigen::Index>(table.rows.size()));
    std::vector<std::string> names;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c != label_idx) names.push_back(table.header[c]);
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::size_t out_col = 0;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c == label_idx) continue;
            features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(out_col)) =
                parse_number(table.rows[r][c], r + 2, table.header[c]);
            ++out_col;
        }
        labels[static_cast<Eigen::Index>(r)] =
            strip(table.rows[r][label_idx]) == strip(positive_token) ? 1.0 : -1.0;
    }
    return LabeledDataset(std::move(features), std::move(labels), std::move(names));
}

Eigen::MatrixXd load_features_csv(const std::string& path, std::vector<std::string>* names) {
    RawTable table = read_table(path);
    if (table.rows.empty()) {
        throw DataError("empty dataset: file has a header but no data rows: " + path);
    }
    Eigen::MatrixXd features(static_cast<Eigen::Index>(table.rows.size()),
                             static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_number(table.rows[r][c], r + 2, table.header[c]);
        }
    }
    if (names != nullptr) *names = table.header;
    return features;
}

LabeledDataset variance_ratio_filter(const LabeledDataset& data, int keep,
                                     std::ostream* warnings) {
    if (keep < 1 || keep > data.dim()) {
        throw std::invalid_argument("variance_ratio_filter: keep must lie in [1, d]");
    }
    const Eigen::Index n = data.size();
    const Eigen::Index d = data.dim();

    // Rank key per feature: zero-mean features with spread sort above every
    // finite ratio, ordered among themselves by sd.
    std::vector<std::pair<int, double>> keys(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mean = data.features().col(j).mean();
        const double ss = (data.features().col(j).array() - mean).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (mean == 0.0 && sd > 0.0) {
            if (warnings != nullptr) {
                *warnings << "variance_ratio_filter: feature "
                          << (data.feature_names().empty() ? std::to_string(j)
                                                           : data.feature_names()[static_cast<std::size_t>(j)])
                          << " has zero mean; ranking it by sd above all finite ratios\n";
            }
            keys[static_cast<std::size_t>(j)] = {1, sd};
        } else {
            const double ratio = mean == 0.0 ? 0.0 : std::abs(sd / mean);
            keys[static_cast<std::size_t>(j)] = {0, ratio};
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const auto& ka = keys[static_cast<std::size_t>(a)];
        const auto& kb = keys[static_cast<std::size_t>(b)];
        if (ka.first != kb.first) return ka.first > kb.first;
        return ka.second > kb.second;
    });
    std::vector<Eigen::Index> kept(order.begin(), order.begin() + keep);
    std::sort(kept.begin(), kept.end());  // preserve original feature order

    Eigen::MatrixXd features(n, keep);
    std::vector<std::string> names;
    for (int out = 0; out < keep; ++out) {
        features.col(out) = data.features().col(kept[static_cast<std::size_t>(out)]);
        if (!data.feature_names().empty()) {
            names.push_back(data.feature_names()[static_cast<std::size_t>(kept[static_cast<std::size_t>(out)])]);
        }
    }
    return LabeledDataset(std::move(features), data.labels(), std::move(names));
}

}  // namespace flame
