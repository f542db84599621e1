// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat little-endian binary arrays with a JSON sidecar.
//
//   foo.bin   raw elements, row-major, little-endian
//   foo.json  {"shape": [...], "dtype": "float32"|"float64"|"complex64",
//              "axes": [...], "byte_order": "little"}
//
// complex64 stores interleaved float32 (re, im) pairs.

#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace textsense {

enum class DType { float32, float64, complex64 };

std::string to_string(DType dtype);
DType dtype_from_string(const std::string& name);

template <typename T>
struct NdArray {
  std::vector<std::size_t> shape;
  std::vector<std::string> axes;
  std::vector<T> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

using RealArray = NdArray<double>;
using ComplexArray = NdArray<std::complex<double>>;

/// Writes `array` to `bin_path` and its sidecar next to it. Real arrays may be
/// stored as float32 or float64.
void write_array(const std::filesystem::path& bin_path, const RealArray& array,
                 DType dtype = DType::float64);
void write_array(const std::filesystem::path& bin_path, const ComplexArray& array);

RealArray read_real_array(const std::filesystem::path& bin_path);
ComplexArray read_complex_array(const std::filesystem::path& bin_path);

std::filesystem::path sidecar_path(const std::filesystem::path& bin_path);

}  // namespace textsense
