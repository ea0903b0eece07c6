#ifndef STGP_DATASET_HPP
#define STGP_DATASET_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stgp/kernels.hpp"

namespace stgp {

struct Dataset {
    std::vector<SpaceTimePoint> points;
    Eigen::VectorXd values;

    std::size_t size() const { return points.size(); }
};

// CSV with header columns x,y,t,value (any column order, '.' decimal).
// Duplicate (x,y,t) rows are rejected unless allow_duplicates is set
// (a nugget makes them statistically meaningful).
Dataset read_dataset_csv(const std::string& path, bool allow_duplicates = false);
Dataset parse_dataset_csv(std::istream& in, const std::string& name,
                          bool allow_duplicates = false);
void write_dataset_csv(const std::string& path, const Dataset& data);

// distinct sorted time points
std::vector<double> unique_times(const std::vector<SpaceTimePoint>& points);

} // namespace stgp

#endif
