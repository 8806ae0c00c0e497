// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "vaelfa/errors.hpp"

namespace vaelfa {
namespace {

constexpr std::uint8_t kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kPreambleSize = 10;  // magic + version + u16 length

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) |
           (v >> 24);
  }
  return v;
}

// Minimal parser for the python dict literal in an NPY header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  struct Header {
    std::string descr;
    bool fortran_order = true;
    std::vector<std::size_t> shape;
  };

  Header parse() {
    Header h;
    bool seen_descr = false, seen_order = false, seen_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        h.descr = parse_string();
        seen_descr = true;
      } else if (key == "fortran_order") {
        h.fortran_order = parse_bool();
        seen_order = true;
      } else if (key == "shape") {
        h.shape = parse_tuple();
        seen_shape = true;
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after header dict");
    if (!seen_descr || !seen_order || !seen_shape) {
      fail("header must declare descr, fortran_order and shape");
    }
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError("malformed NPY header: " + why);
  }

  char peek() const {
    if (pos_ >= text_.size()) fail("unexpected end of header");
    return text_[pos_];
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    skip_ws();
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected quoted string");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  bool parse_bool() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::vector<std::size_t> parse_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        fail("expected non-negative integer in shape");
      }
      std::size_t value = 0;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        if (value > (std::size_t{1} << 40)) fail("shape dimension too large");
        ++pos_;
      }
      dims.push_back(value);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    return dims;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_npy(const LatentTensor& t) {
  const Shape& s = t.shape();
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                     std::to_string(s.channels) + ", " +
                     std::to_string(s.height) + ", " + std::to_string(s.width) +
                     "), }";
  // Pad with spaces so the data block starts on a 64-byte boundary.
  const std::size_t unpadded = kPreambleSize + dict.size() + 1;
  const std::size_t padded = (unpadded + 63) / 64 * 64;
  dict.append(padded - unpadded, ' ');
  dict.push_back('\n');

  std::vector<std::uint8_t> out;
  out.reserve(padded + t.size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(dict.size() & 0xff));
  out.push_back(static_cast<std::uint8_t>(dict.size() >> 8));
  out.insert(out.end(), dict.begin(), dict.end());
  for (float v : t.data()) {
    std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(v));
    std::uint8_t raw[4];
    std::memcpy(raw, &bits, 4);
    out.insert(out.end(), raw, raw + 4);
  }
  return out;
}

LatentTensor decode_npy(const std::vector<std::uint8_t>& bytes,
                        std::optional<Shape> expected_shape) {
  if (bytes.size() < kPreambleSize ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not an NPY file (bad magic)");
  }
  if (bytes[6] != 1 || bytes[7] != 0) {
    throw FormatError("unsupported NPY version " + std::to_string(bytes[6]) +
                      "." + std::to_string(bytes[7]) + " (need 1.0)");
  }
  const std::size_t header_len = bytes[8] | (std::size_t{bytes[9]} << 8);
  if (bytes.size() < kPreambleSize + header_len) {
    throw FormatError("NPY header truncated");
  }
  const std::string_view header_text(
      reinterpret_cast<const char*>(bytes.data()) + kPreambleSize, header_len);
  const auto header = HeaderParser(header_text).parse();

  if (header.descr != "<f4") {
    throw FormatError("unsupported element type '" + header.descr +
                      "' (need '<f4')");
  }
  if (header.fortran_order) {
    throw FormatError("Fortran-ordered arrays are not supported");
  }
  if (header.shape.size() != 3) {
    throw FormatError("expected a 3-D (C, H, W) array, got " +
                      std::to_string(header.shape.size()) + " dimensions");
  }
  const Shape shape{header.shape[0], header.shape[1], header.shape[2]};
  if (shape.size() == 0) {
    throw FormatError("zero-sized dimension in shape " + to_string(shape));
  }
  if (expected_shape && *expected_shape != shape) {
    throw FormatError("shape mismatch: file has " + to_string(shape) +
                      ", expected " + to_string(*expected_shape));
  }
  const std::size_t offset = kPreambleSize + header_len;
  if (bytes.size() - offset != shape.size() * 4) {
    throw FormatError("NPY payload has " + std::to_string(bytes.size() - offset) +
                      " bytes, expected " + std::to_string(shape.size() * 4));
  }

  std::vector<float> data(shape.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + offset + 4 * k, 4);
    data[k] = std::bit_cast<float>(to_little_endian(bits));
  }
  LatentTensor t(shape, std::move(data));
  if (!t.all_finite()) throw FormatError("NPY payload contains NaN or Inf");
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

LatentTensor load_latent(const std::filesystem::path& path,
                         std::optional<Shape> expected_shape) {
  LatentTensor t = decode_npy(read_file_bytes(path), expected_shape);
  t.set_label(path.filename().string());
  return t;
}

void save_latent(const LatentTensor& t, const std::filesystem::path& path) {
  write_file_bytes(path, encode_npy(t));
}

}  // namespace vaelfa
