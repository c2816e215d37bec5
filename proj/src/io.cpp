#include "tuq/io.hpp"

#include "tuq/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tuq {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("write_csv: cannot open " + path);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c > 0) out << ',';
        out << header[c];
    }
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << ',';
            out << row[c];
        }
        out << "\n";
    }
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M) {
    std::ofstream out(path);
    if (!out) throw Error("write_matrix_csv: cannot open " + path);
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (c > 0) out << ',';
            out << format_double(M(r, c));
        }
        out << "\n";
    }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_matrix_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": not a number: \"" + cell + "\"");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd M(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return M;
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_file_bytes: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace tuq
