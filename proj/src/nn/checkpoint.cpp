#include "gyrocal/nn/checkpoint.hpp"

#include <cstring>

#include "gyrocal/errors.hpp"
#include "gyrocal/io_util.hpp"

namespace gyrocal::nn {

namespace {
constexpr char kMagic[4] = {'G', 'Y', 'R', 'N'};
}

void ByteReader::take(void* dst, std::size_t n) {
  if (n > remaining()) throw FormatError("binary data truncated at byte " + std::to_string(pos_));
  std::memcpy(dst, buf_.data() + pos_, n);
  pos_ += n;
}

std::string ByteReader::get_string() {
  const auto n = get<std::uint32_t>();
  return std::string(get_bytes(n));
}

std::string_view ByteReader::get_bytes(std::size_t n) {
  if (n > remaining()) throw FormatError("binary data truncated at byte " + std::to_string(pos_));
  const std::string_view s = buf_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::string encode_checkpoint(const Network& net, std::string_view tag) {
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put(kCheckpointVersion);
  w.put_string(tag);
  w.put(static_cast<std::uint32_t>(net.input_shape().channels));
  w.put(static_cast<std::uint32_t>(net.input_shape().length));
  w.put(static_cast<std::uint32_t>(net.layers().size()));
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const LayerSpec& l = net.layers()[i];
    w.put(static_cast<std::uint32_t>(l.kind));
    for (std::int32_t v : {l.in, l.out, l.kernel, l.stride}) w.put(v);
    w.put(static_cast<std::uint64_t>(net.weight_count(i)));
    w.put(static_cast<std::uint64_t>(net.bias_count(i)));
  }
  w.put_doubles(net.params());
  const std::string& b = w.bytes();
  w.put(crc32(b));
  return w.bytes();
}

Network decode_checkpoint(std::string_view bytes, std::string* tag) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (crc32(body) != stored) throw FormatError("checkpoint: checksum mismatch");

  ByteReader r(body);
  r.get_bytes(4);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  std::string t = r.get_string();
  const auto channels = static_cast<int>(r.get<std::uint32_t>());
  const auto length = static_cast<int>(r.get<std::uint32_t>());
  const auto n_layers = r.get<std::uint32_t>();
  std::vector<LayerSpec> layers;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> counts;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    l.kind = static_cast<LayerKind>(r.get<std::uint32_t>());
    l.in = r.get<std::int32_t>();
    l.out = r.get<std::int32_t>();
    l.kernel = r.get<std::int32_t>();
    l.stride = r.get<std::int32_t>();
    const auto n_weights = r.get<std::uint64_t>();
    const auto n_bias = r.get<std::uint64_t>();
    counts.emplace_back(n_weights, n_bias);
    layers.push_back(l);
  }
  Network net(Shape{channels, length}, std::move(layers));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].first != net.weight_count(i) || counts[i].second != net.bias_count(i)) {
      throw FormatError("checkpoint: parameter counts of layer " + std::to_string(i) + " do not match its shape");
    }
  }
  r.get_doubles(net.params());
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  if (tag) *tag = std::move(t);
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, std::string_view tag) {
  write_text_file(path, encode_checkpoint(net, tag));
}

Network load_checkpoint(const std::filesystem::path& path, std::string* tag) {
  return decode_checkpoint(read_text_file(path), tag);
}

}  // namespace gyrocal::nn
