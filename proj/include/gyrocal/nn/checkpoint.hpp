#pragma once

// Versioned binary checkpoint, little-endian:
//   "GYRN" | u32 version | u32 tag_len | tag bytes
//   | u32 input_channels | u32 input_length | u32 layer_count
//   | per layer: u32 kind, i32 in, i32 out, i32 kernel, i32 stride, u64 n_weights, u64 n_bias
//   | per layer: f64[n_weights] f64[n_bias]
//   | u32 crc32 of everything before it

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "gyrocal/nn/network.hpp"

namespace gyrocal::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class ByteWriter {
 public:
  template <class T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.append(s); }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void put_doubles(std::span<const double> v) {
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  const std::string& bytes() const noexcept { return buf_; }
  std::string& bytes() noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : buf_(bytes) {}
  template <class T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  std::string get_string();
  void get_doubles(std::span<double> out) { take(out.data(), out.size() * sizeof(double)); }
  std::string_view get_bytes(std::size_t n);
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return buf_.size() - pos_; }

 private:
  void take(void* dst, std::size_t n);
  std::string_view buf_;
  std::size_t pos_ = 0;
};

std::string encode_checkpoint(const Network& net, std::string_view tag = {});
Network decode_checkpoint(std::string_view bytes, std::string* tag = nullptr);

void save_checkpoint(const std::filesystem::path& path, const Network& net, std::string_view tag = {});
Network load_checkpoint(const std::filesystem::path& path, std::string* tag = nullptr);

}  // namespace gyrocal::nn
