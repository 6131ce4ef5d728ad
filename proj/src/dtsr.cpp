#include "dart/dtsr.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dart/common.hpp"

namespace dart {

namespace {
constexpr char kMagic[] = "DTSR1\n";

void put_f32_le(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    char b[4] = {char(bits & 0xFF), char((bits >> 8) & 0xFF),
                 char((bits >> 16) & 0xFF), char((bits >> 24) & 0xFF)};
    os.write(b, 4);
}

float get_f32_le(const unsigned char* p) {
    uint32_t bits = uint32_t(p[0]) | (uint32_t(p[1]) << 8) |
                    (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}
}  // namespace

void write_dtsr(const std::string& path, const std::vector<int>& dims,
                const std::vector<float>& values) {
    size_t n = 1;
    for (int d : dims) {
        if (d <= 0) throw DataError("write_dtsr: non-positive dimension");
        n *= size_t(d);
    }
    if (n != values.size())
        throw DataError("write_dtsr: dims product " + std::to_string(n) +
                        " != value count " + std::to_string(values.size()));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("write_dtsr: cannot open " + path);
    f.write(kMagic, 6);
    f << "dims=";
    for (size_t i = 0; i < dims.size(); ++i) f << (i ? "," : "") << dims[i];
    f << "\ndtype=f32\n";
    for (float v : values) put_f32_le(f, v);
    if (!f) throw DataError("write_dtsr: write failed for " + path);
}

DtsrTensor read_dtsr(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_dtsr: cannot open " + path);
    char magic[6];
    f.read(magic, 6);
    if (!f || std::memcmp(magic, kMagic, 6) != 0)
        throw DataError("read_dtsr: bad magic in " + path);
    std::string dims_line, dtype_line;
    if (!std::getline(f, dims_line) || !std::getline(f, dtype_line))
        throw DataError("read_dtsr: truncated header in " + path);
    if (dims_line.rfind("dims=", 0) != 0)
        throw DataError("read_dtsr: missing dims header in " + path);
    if (dtype_line != "dtype=f32")
        throw DataError("read_dtsr: unsupported dtype in " + path);

    DtsrTensor t;
    std::stringstream ss(dims_line.substr(5));
    std::string tok;
    size_t n = 1;
    while (std::getline(ss, tok, ',')) {
        int d = std::stoi(tok);
        if (d <= 0) throw DataError("read_dtsr: non-positive dim in " + path);
        t.dims.push_back(d);
        n *= size_t(d);
    }
    if (t.dims.empty()) throw DataError("read_dtsr: empty dims in " + path);

    std::vector<unsigned char> raw(n * 4);
    f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (size_t(f.gcount()) != raw.size())
        throw DataError("read_dtsr: truncated payload in " + path);
    t.values.resize(n);
    for (size_t i = 0; i < n; ++i) t.values[i] = get_f32_le(raw.data() + i * 4);
    return t;
}

}  // namespace dart
