#include "eldiv/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eldiv/errors.hpp"

namespace eldiv {

namespace {

const std::vector<double> kDay1 = {28, 26, 33, 24, 34, -44, 27, 16, 40, -2,
                                   29, 22, 24, 21, 25, 30,  23, 29, 31, 19};
const std::vector<double> kDay2 = {24, 20, 36, 32, 36, 28, 25, 21, 28, 29,
                                   37, 25, 28, 26, 30, 32, 36, 26, 30, 22};
const std::vector<double> kDay3 = {36, 23, 27, 27, 28, 27, 31, 27, 26,
                                   33, 26, 32, 32, 24, 39, 28, 24, 25,
                                   32, 25, 29, 27, 28, 29, 16, 23};

double parse_field(const std::string& field, int row, int col) {
    std::string trimmed = field;
    auto begin = trimmed.find_first_not_of(" \t\r");
    auto end = trimmed.find_last_not_of(" \t\r");
    if (begin == std::string::npos) {
        throw ParseError("empty field at row " + std::to_string(row) +
                         ", column " + std::to_string(col));
    }
    trimmed = trimmed.substr(begin, end - begin + 1);

    double value = 0.0;
    const char* first = trimmed.data();
    const char* last = first + trimmed.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("cannot parse '" + trimmed + "' at row " +
                         std::to_string(row) + ", column " +
                         std::to_string(col));
    }
    if (!std::isfinite(value)) {
        throw ParseError("non-finite value at row " + std::to_string(row) +
                         ", column " + std::to_string(col));
    }
    return value;
}

}  // namespace

const std::vector<double>& newcomb_day(int day) {
    switch (day) {
        case 1: return kDay1;
        case 2: return kDay2;
        case 3: return kDay3;
        default: throw DomainError("newcomb day must be 1, 2 or 3");
    }
}

std::vector<double> newcomb_all() {
    std::vector<double> all = kDay1;
    all.insert(all.end(), kDay2.begin(), kDay2.end());
    all.insert(all.end(), kDay3.begin(), kDay3.end());
    return all;
}

Sample resolve_dataset(const std::string& spec, bool header) {
    if (spec == "newcomb:day1") return Sample::from_values(newcomb_day(1));
    if (spec == "newcomb:day2") return Sample::from_values(newcomb_day(2));
    if (spec == "newcomb:day3") return Sample::from_values(newcomb_day(3));
    if (spec == "newcomb:all") return Sample::from_values(newcomb_all());
    if (spec.rfind("newcomb:", 0) == 0) {
        throw ParseError("unknown embedded dataset '" + spec + "'");
    }
    return load_csv(spec, header);
}

Sample load_csv(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    bool skipped_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (header && !skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string field;
        int col = 0;
        while (std::getline(ss, field, ',')) {
            ++col;
            fields.push_back(parse_field(field, lineno, col));
        }
        if (!rows.empty() && fields.size() != rows.front().size()) {
            throw ParseError("row " + std::to_string(lineno) + " has " +
                             std::to_string(fields.size()) +
                             " fields, expected " +
                             std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw ParseError("no data rows in '" + path + "'");

    Sample s;
    s.obs.resize(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            s.obs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
        }
    }
    return s;
}

}  // namespace eldiv
