#include "stgp/rng.hpp"
#include "stgp/specialfn.hpp"

namespace stgp {

double Rng::normal() { return norm_quantile(uniform()); }

std::uint64_t Rng::derive(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 finalizer on the combined state
    std::uint64_t z = master + stream * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace stgp
