#include "stgp/partition.hpp"
#include "stgp/errors.hpp"
#include "stgp/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace stgp {

namespace {

std::vector<std::vector<std::vector<int>>> replicated_partitions(
    int n, int m, int r, std::uint64_t seed, std::uint64_t stream_tag) {
    std::vector<std::vector<std::vector<int>>> reps(r);
    for (int rep = 0; rep < r; ++rep) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(Rng::derive(seed, stream_tag + static_cast<std::uint64_t>(rep)));
        rng.shuffle(perm);
        auto& blocks = reps[rep];
        blocks.resize(m);
        for (int i = 0; i < n; ++i) blocks[i % m].push_back(perm[i]);
        for (auto& b : blocks) std::sort(b.begin(), b.end());
    }
    return reps;
}

} // namespace

PartitionPlan make_partitions(int n_locations, int n_times, int m_s, int r_s,
                              int m_t, int r_t, std::uint64_t seed) {
    if (n_locations < 1 || n_times < 1)
        throw DomainError("make_partitions: empty index sets");
    if (m_s < 1 || m_s > n_locations)
        throw DomainError("make_partitions: M_s must lie in [1, " +
                          std::to_string(n_locations) + "], got " +
                          std::to_string(m_s));
    if (m_t < 1 || m_t > n_times)
        throw DomainError("make_partitions: M_t must lie in [1, " +
                          std::to_string(n_times) + "], got " +
                          std::to_string(m_t));
    if (r_s < 1 || r_t < 1)
        throw DomainError("make_partitions: R_s and R_t must be >= 1");

    PartitionPlan plan;
    plan.seed = seed;
    plan.m_s = m_s;
    plan.r_s = r_s;
    plan.m_t = m_t;
    plan.r_t = r_t;
    plan.spatial_blocks =
        replicated_partitions(n_locations, m_s, r_s, seed, 0x53504154ULL);
    plan.temporal_blocks =
        replicated_partitions(n_times, m_t, r_t, seed, 0x54454D50ULL);
    return plan;
}

} // namespace stgp
