#ifndef DART_DTSR_HPP
#define DART_DTSR_HPP

#include <string>
#include <vector>

namespace dart {

// DTSR tensor file: magic "DTSR1\n", ASCII header lines "dims=d1,d2,..."
// and "dtype=f32", then raw little-endian float32 values in row-major order.
void write_dtsr(const std::string& path, const std::vector<int>& dims,
                const std::vector<float>& values);

struct DtsrTensor {
    std::vector<int> dims;
    std::vector<float> values;
};
DtsrTensor read_dtsr(const std::string& path);

}  // namespace dart

#endif
