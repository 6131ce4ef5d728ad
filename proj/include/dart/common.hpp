#ifndef DART_COMMON_HPP
#define DART_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dart {

// Error hierarchy: ShapeError for tensor/grid geometry violations,
// DataError for malformed files or datasets, NumericError for NaN/Inf
// aborts during training.
struct DartError : std::runtime_error {
    explicit DartError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ShapeError : DartError {
    explicit ShapeError(const std::string& msg) : DartError(msg) {}
};
struct DataError : DartError {
    explicit DataError(const std::string& msg) : DartError(msg) {}
};
struct NumericError : DartError {
    explicit NumericError(const std::string& msg) : DartError(msg) {}
};

// Deterministic RNG. std::mt19937_64 supplies bits but all distributions
// are hand-rolled so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ULL) {
        // splitmix warmup so nearby seeds decorrelate
        next_u64();
        next_u64();
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return double(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(2.0 * M_PI * u2);
        have_cached_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    // Knuth's method; lambda stays small in this codebase
    int poisson(double lambda) {
        double l = std::exp(-lambda), p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }

    int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

private:
    uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    uint64_t z = base ^ (index * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    return z ^ (z >> 29);
}

}  // namespace dart

#endif
