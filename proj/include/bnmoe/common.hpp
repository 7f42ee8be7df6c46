#ifndef BNMOE_COMMON_HPP
#define BNMOE_COMMON_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bnmoe {

// Error taxonomy used across the library. CLI maps these to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ParamError : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };
struct SplitError : Error { using Error::Error; };
struct FileError : Error { using Error::Error; };
struct MissingCellError : DataError { using DataError::DataError; };

// Dense row-major matrix. Everything in this project is small enough
// that a flat vector with explicit indexing beats pulling in a BLAS.
template <class T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    T* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const T* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::vector<T> row(std::size_t r) const {
        return std::vector<T>(row_ptr(r), row_ptr(r) + cols);
    }
    std::vector<T> col(std::size_t c) const {
        std::vector<T> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
        return out;
    }
    bool operator==(const Mat& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

using MatD = Mat<double>;
using MatI = Mat<int>;

// splitmix64 step; used to derive independent sub-seeds from one master seed
// so distinct pipeline stages never consume from a shared RNG stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace bnmoe

#endif
