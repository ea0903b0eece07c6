#include "stgp/dataset.hpp"
#include "stgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace stgp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& tok, const std::string& name, int row,
                    const char* col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos])))
            ++pos;
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        std::ostringstream os;
        os << name << ": row " << row << ": cannot parse column '" << col
           << "' value '" << tok << "'";
        throw DataError(os.str());
    }
}

} // namespace

Dataset parse_dataset_csv(std::istream& in, const std::string& name,
                          bool allow_duplicates) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(name + ": empty file");
    auto header = split_csv_line(line);
    int ix = -1, iy = -1, it = -1, iv = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        std::string h = header[k];
        h.erase(std::remove_if(h.begin(), h.end(), ::isspace), h.end());
        if (h == "x") ix = static_cast<int>(k);
        else if (h == "y") iy = static_cast<int>(k);
        else if (h == "t") it = static_cast<int>(k);
        else if (h == "value") iv = static_cast<int>(k);
    }
    if (ix < 0 || iy < 0 || it < 0 || iv < 0)
        throw DataError(name + ": header must contain columns x,y,t,value");

    Dataset data;
    std::vector<double> vals;
    std::map<std::tuple<double, double, double>, int> seen;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto toks = split_csv_line(line);
        int need = std::max(std::max(ix, iy), std::max(it, iv));
        if (static_cast<int>(toks.size()) <= need) {
            std::ostringstream os;
            os << name << ": row " << row << ": expected at least " << need + 1
               << " columns, got " << toks.size();
            throw DataError(os.str());
        }
        SpaceTimePoint p;
        p.x = parse_number(toks[ix], name, row, "x");
        p.y = parse_number(toks[iy], name, row, "y");
        p.t = parse_number(toks[it], name, row, "t");
        double v = parse_number(toks[iv], name, row, "value");
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t) ||
            !std::isfinite(v)) {
            std::ostringstream os;
            os << name << ": row " << row << ": non-finite entry";
            throw DataError(os.str());
        }
        auto key = std::make_tuple(p.x, p.y, p.t);
        auto ins = seen.emplace(key, row);
        if (!ins.second && !allow_duplicates) {
            std::ostringstream os;
            os << name << ": row " << row << ": duplicate (x,y,t) of row "
               << ins.first->second << " (configure a nugget to permit duplicates)";
            throw DataError(os.str());
        }
        data.points.push_back(p);
        vals.push_back(v);
    }
    if (data.points.empty()) throw DataError(name + ": no data rows");
    data.values = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    return data;
}

Dataset read_dataset_csv(const std::string& path, bool allow_duplicates) {
    std::ifstream in(path);
    if (!in.good()) throw DataError("cannot open dataset file: " + path);
    return parse_dataset_csv(in, path, allow_duplicates);
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out.good()) throw DataError("cannot write dataset file: " + path);
    out << "x,y,t,value\n";
    char buf[128];
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n",
                      data.points[i].x, data.points[i].y, data.points[i].t,
                      data.values[static_cast<Eigen::Index>(i)]);
        out << buf;
    }
    if (!out.good()) throw DataError("write failed: " + path);
}

std::vector<double> unique_times(const std::vector<SpaceTimePoint>& points) {
    std::set<double> s;
    for (const auto& p : points) s.insert(p.t);
    return {s.begin(), s.end()};
}

} // namespace stgp
