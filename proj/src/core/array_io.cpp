// SPDX-License-Identifier: Apache-2.0
#include "textsense/core/array_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace textsense {
namespace {

static_assert(std::endian::native == std::endian::little,
              "array_io assumes a little-endian host");

using nlohmann::json;

template <typename T>
void validate_shape(const NdArray<T>& array) {
  if (array.element_count() != array.data.size()) {
    throw std::invalid_argument("array shape does not match element count");
  }
  if (!array.axes.empty() && array.axes.size() != array.shape.size()) {
    throw std::invalid_argument("axis names must match shape rank");
  }
}

void write_sidecar(const std::filesystem::path& bin_path, const std::vector<std::size_t>& shape,
                   const std::vector<std::string>& axes, DType dtype) {
  json j;
  j["shape"] = shape;
  j["dtype"] = to_string(dtype);
  j["axes"] = axes;
  j["byte_order"] = "little";
  std::ofstream out(sidecar_path(bin_path));
  if (!out) throw std::runtime_error("cannot write " + sidecar_path(bin_path).string());
  out << j.dump(2) << '\n';
}

struct Sidecar {
  std::vector<std::size_t> shape;
  std::vector<std::string> axes;
  DType dtype;
};

Sidecar read_sidecar(const std::filesystem::path& bin_path) {
  std::ifstream in(sidecar_path(bin_path));
  if (!in) throw std::runtime_error("cannot open " + sidecar_path(bin_path).string());
  const json j = json::parse(in);
  if (j.value("byte_order", "little") != "little") {
    throw std::runtime_error("unsupported byte order in " + sidecar_path(bin_path).string());
  }
  return {j.at("shape").get<std::vector<std::size_t>>(),
          j.value("axes", std::vector<std::string>{}),
          dtype_from_string(j.at("dtype").get<std::string>())};
}

template <typename Scalar>
void write_raw(const std::filesystem::path& path, const std::vector<Scalar>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(Scalar)));
}

template <typename Scalar>
std::vector<Scalar> read_raw(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != count * sizeof(Scalar)) {
    throw std::runtime_error(path.string() + ": expected " +
                             std::to_string(count * sizeof(Scalar)) + " bytes, found " +
                             std::to_string(bytes));
  }
  in.seekg(0);
  std::vector<Scalar> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  return values;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

std::string to_string(DType dtype) {
  switch (dtype) {
    case DType::float32: return "float32";
    case DType::float64: return "float64";
    case DType::complex64: return "complex64";
  }
  return "unknown";
}

DType dtype_from_string(const std::string& name) {
  if (name == "float32") return DType::float32;
  if (name == "float64") return DType::float64;
  if (name == "complex64") return DType::complex64;
  throw std::invalid_argument("unknown dtype '" + name + "'");
}

std::filesystem::path sidecar_path(const std::filesystem::path& bin_path) {
  auto p = bin_path;
  p.replace_extension(".json");
  return p;
}

void write_array(const std::filesystem::path& bin_path, const RealArray& array, DType dtype) {
  validate_shape(array);
  if (dtype == DType::float64) {
    write_raw(bin_path, array.data);
  } else if (dtype == DType::float32) {
    std::vector<float> narrow(array.data.begin(), array.data.end());
    write_raw(bin_path, narrow);
  } else {
    throw std::invalid_argument("real arrays cannot be written as complex64");
  }
  write_sidecar(bin_path, array.shape, array.axes, dtype);
}

void write_array(const std::filesystem::path& bin_path, const ComplexArray& array) {
  validate_shape(array);
  std::vector<float> interleaved;
  interleaved.reserve(array.data.size() * 2);
  for (const auto& z : array.data) {
    interleaved.push_back(static_cast<float>(z.real()));
    interleaved.push_back(static_cast<float>(z.imag()));
  }
  write_raw(bin_path, interleaved);
  write_sidecar(bin_path, array.shape, array.axes, DType::complex64);
}

RealArray read_real_array(const std::filesystem::path& bin_path) {
  const Sidecar meta = read_sidecar(bin_path);
  const std::size_t count = product(meta.shape);
  RealArray array{meta.shape, meta.axes, {}};
  if (meta.dtype == DType::float64) {
    array.data = read_raw<double>(bin_path, count);
  } else if (meta.dtype == DType::float32) {
    const auto narrow = read_raw<float>(bin_path, count);
    array.data.assign(narrow.begin(), narrow.end());
  } else {
    throw std::runtime_error(bin_path.string() + " holds complex64, expected a real array");
  }
  return array;
}

ComplexArray read_complex_array(const std::filesystem::path& bin_path) {
  const Sidecar meta = read_sidecar(bin_path);
  if (meta.dtype != DType::complex64) {
    throw std::runtime_error(bin_path.string() + " holds " + to_string(meta.dtype) +
                             ", expected complex64");
  }
  const std::size_t count = product(meta.shape);
  const auto interleaved = read_raw<float>(bin_path, count * 2);
  ComplexArray array{meta.shape, meta.axes, {}};
  array.data.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    array.data.emplace_back(interleaved[2 * i], interleaved[2 * i + 1]);
  return array;
}

}  // namespace textsense
