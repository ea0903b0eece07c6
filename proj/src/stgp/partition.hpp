#ifndef STGP_PARTITION_HPP
#define STGP_PARTITION_HPP

#include <cstdint>
#include <vector>

namespace stgp {

// Random equisized partitions: R_s replicates of M_s disjoint exhaustive
// location blocks, and R_t replicates of M_t time blocks. Block sizes within
// a replicate differ by at most one.
struct PartitionPlan {
    std::vector<std::vector<std::vector<int>>> spatial_blocks;
    std::vector<std::vector<std::vector<int>>> temporal_blocks;
    std::uint64_t seed = 0;
    int m_s = 1, r_s = 1, m_t = 1, r_t = 1;
};

PartitionPlan make_partitions(int n_locations, int n_times, int m_s, int r_s,
                              int m_t, int r_t, std::uint64_t seed);

} // namespace stgp

#endif
