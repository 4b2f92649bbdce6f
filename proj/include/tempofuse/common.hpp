#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tempofuse {

// Error categories map onto CLI exit codes: usage 1, data 2, numeric 3.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

void warn(const std::string& msg);

// Deterministic RNG built on mt19937_64 with explicit bit-to-double
// conversion. std::*_distribution output is implementation-defined, so all
// sampling here is spelled out to keep seeded runs byte-identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double next_double();

    double uniform(double lo, double hi);

    // Uniform integer in [0, n) by rejection.
    std::uint64_t next_below(std::uint64_t n);

    bool bernoulli(double p);

    // Knuth's method; fine for the small rates used here.
    std::uint64_t poisson(double lambda);

    std::uint64_t binomial(std::uint64_t n, double p);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    // splitmix64-scrambled xorshift state; simple, fast, and fully specified.
    std::uint64_t state_;
};

// FNV-1a over a byte string, used to stamp artifacts with the config that
// produced them.
std::uint64_t fnv1a64(const std::string& bytes);
std::string to_hex(std::uint64_t value);

}  // namespace tempofuse
