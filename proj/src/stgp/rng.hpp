#ifndef STGP_RNG_HPP
#define STGP_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace stgp {

// Project-wide RNG. All randomness comes from mt19937_64 streams; normal
// deviates use the inverse-CDF method on a 53-bit uniform, so a (seed,
// draw-order) pair yields bit-identical results on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t integer() { return eng_(); }

    // uniform on (0,1), strictly inside the interval
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(); // norm_quantile(uniform())

    // integer in [0, n), bias-free fixed-point multiply
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(eng_()) * n) >> 64);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    // independent stream seed from a master seed and a stream index
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream);

private:
    std::mt19937_64 eng_;
};

} // namespace stgp

#endif
