#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <system_error>

#include "adavsr/png_io.hpp"
#include "adavsr/video.hpp"

namespace adavsr {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) { throw Error(message); }
void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

Image8 read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error("cannot open " + path.string());
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw Error("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  Image8 img;
  try {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.height = static_cast<int>(png_get_image_height(png, info));
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.channels = png_get_channels(png, info);
    if (img.channels != 1 && img.channels != 3) throw Error("unsupported channel layout");
    img.data.resize(static_cast<size_t>(img.height) * img.width * img.channels);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = img.data.data() + static_cast<size_t>(y) * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } catch (const Error& e) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(path.string() + ": " + e.what());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const Image8& image, const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width, image.height, 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y)
      rows[y] = const_cast<png_bytep>(image.data.data()) + static_cast<size_t>(y) * image.width * image.channels;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  } catch (const Error& e) {
    png_destroy_write_struct(&png, &info);
    throw Error(path.string() + ": " + e.what());
  }
  png_destroy_write_struct(&png, &info);
}

Video load_video(const fs::path& directory) {
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw Error("not a directory: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  if (files.empty()) throw Error("no PNG frames in " + directory.string());
  if (files.size() < 2) throw Error("frame_count < 2 in " + directory.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& file : files) {
    Image8 img = read_png(file);
    if (!frames.empty()) {
      const Frame& first = frames.front();
      if (img.height != first.height() || img.width != first.width() || img.channels != first.channels())
        throw Error("mismatched dimensions: " + file.filename().string());
    }
    std::vector<float> planar(img.data.size());
    const size_t plane = static_cast<size_t>(img.height) * img.width;
    for (size_t p = 0; p < plane; ++p)
      for (int c = 0; c < img.channels; ++c)
        planar[c * plane + p] = static_cast<float>(img.data[p * img.channels + c]) / 255.0f;
    frames.emplace_back(img.height, img.width, img.channels, std::move(planar));
  }
  return Video::from_frames(frames);
}

void save_video(const Video& video, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec || !fs::is_directory(directory)) throw Error("cannot create directory " + directory.string());
  const size_t plane = static_cast<size_t>(video.height()) * video.width();
  for (int t = 0; t < video.frame_count(); ++t) {
    Image8 img{video.height(), video.width(), video.channels(), std::vector<std::uint8_t>(video.frame_size())};
    auto src = video.frame_samples(t);
    for (size_t p = 0; p < plane; ++p)
      for (int c = 0; c < video.channels(); ++c)
        img.data[p * video.channels() + c] = static_cast<std::uint8_t>(std::lround(src[c * plane + p] * 255.0f));
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", t);
    write_png(img, directory / name);
  }
}

}  // namespace adavsr
