#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "streamgaze/error.hpp"
#include "streamgaze/io.hpp"

namespace streamgaze {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kRed{255, 0, 0};
inline constexpr Rgb kGreen{0, 255, 0};

/// 8-bit interleaved RGB raster.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = kBlack)
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3) {
    if (width < 0 || height < 0) throw DataError("negative image size");
    for (std::size_t i = 0; i < data_.size(); i += 3) {
      data_[i] = fill.r;
      data_[i + 1] = fill.g;
      data_[i + 2] = fill.b;
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &data_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw DataError("cannot encode an empty image");
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width());
  desc.height = static_cast<png_uint_32>(img.height());
  desc.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, img.bytes().data(), 0, nullptr))
    throw DataError(std::string("png sizing failed: ") + desc.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, img.bytes().data(), 0, nullptr))
    throw DataError(std::string("png encode failed: ") + desc.message);
  out.resize(size);
  return out;
}

inline Image decode_png(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>") {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size()))
    throw DataError(origin + ": " + desc.message);
  desc.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(desc.width), static_cast<int>(desc.height));
  if (!png_image_finish_read(&desc, nullptr, img.bytes().data(), 0, nullptr)) {
    png_image_free(&desc);
    throw DataError(origin + ": " + desc.message);
  }
  return img;
}

namespace detail {

inline Image decode_ppm(const std::string& data, const std::string& origin) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return data.substr(start, pos - start);
  };
  if (token() != "P6") throw DataError(origin + ": not a binary PPM");
  int w = std::stoi(token()), h = std::stoi(token()), maxval = std::stoi(token());
  if (maxval != 255) throw DataError(origin + ": only 8-bit PPM supported");
  ++pos;
  Image img(w, h);
  if (data.size() - pos < img.bytes().size()) throw DataError(origin + ": truncated PPM");
  std::memcpy(img.bytes().data(), data.data() + pos, img.bytes().size());
  return img;
}

}  // namespace detail

/// Reads .png or binary .ppm.
inline Image read_image(const std::filesystem::path& path) {
  std::string data = io::read_text(path);
  if (path.extension() == ".ppm") return detail::decode_ppm(data, path.string());
  return decode_png({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()}, path.string());
}

inline void write_image(const Image& img, const std::filesystem::path& path) {
  if (path.extension() == ".ppm") {
    std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.bytes().data()), img.bytes().size());
    io::write_text(path, out);
    return;
  }
  auto png = encode_png(img);
  io::write_text(path, std::string(reinterpret_cast<const char*>(png.data()), png.size()));
}

/// Indexed, timestamped frames of one video.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual double timestamp(std::size_t index) const = 0;
  virtual Image frame(std::size_t index) const = 0;

  /// Index of the latest frame whose timestamp is <= t, or none if t precedes the video.
  std::optional<std::size_t> index_at_or_before(double t) const {
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (timestamp(mid) <= t) lo = mid + 1;
      else hi = mid;
    }
    if (lo == 0) return std::nullopt;
    return lo - 1;
  }
};

class MemoryFrameSource : public FrameSource {
 public:
  MemoryFrameSource(std::vector<Image> frames, std::vector<double> timestamps)
      : frames_(std::move(frames)), timestamps_(std::move(timestamps)) {
    if (frames_.size() != timestamps_.size()) throw DataError("frame/timestamp count mismatch");
  }
  std::size_t size() const override { return frames_.size(); }
  double timestamp(std::size_t i) const override { return timestamps_.at(i); }
  Image frame(std::size_t i) const override { return frames_.at(i); }

 private:
  std::vector<Image> frames_;
  std::vector<double> timestamps_;
};

/// Directory of numbered images listed by frames.csv (frame_index,timestamp_s,file).
class DirectoryFrameSource : public FrameSource {
 public:
  explicit DirectoryFrameSource(std::filesystem::path dir) : dir_(std::move(dir)) {
    auto table = io::read_csv(dir_ / "frames.csv");
    const std::string origin = (dir_ / "frames.csv").string();
    int c_idx = table.require("frame_index", origin);
    int c_ts = table.require("timestamp_s", origin);
    int c_file = table.require("file", origin);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      if (static_cast<std::size_t>(std::stoll(row[c_idx])) != r) throw DataError(origin + ": frame indices must be dense");
      double ts = io::to_double(row[c_ts], origin);
      if (!timestamps_.empty() && ts <= timestamps_.back())
        throw DataError(origin + ": timestamps must be strictly increasing");
      timestamps_.push_back(ts);
      files_.push_back(row[c_file]);
    }
  }
  std::size_t size() const override { return files_.size(); }
  double timestamp(std::size_t i) const override { return timestamps_.at(i); }
  Image frame(std::size_t i) const override { return read_image(dir_ / files_.at(i)); }
  const std::vector<double>& timestamps() const noexcept { return timestamps_; }

 private:
  std::filesystem::path dir_;
  std::vector<double> timestamps_;
  std::vector<std::string> files_;
};

}  // namespace streamgaze
