#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adavsr/metrics.hpp"
#include "adavsr/png_io.hpp"

namespace adavsr {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, size_t line_no, const std::string& column) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error("log line " + std::to_string(line_no) + ": bad value '" + s + "' in column " + column);
}

using Rgb = std::array<std::uint8_t, 3>;

class Canvas {
 public:
  Canvas(int w, int h) : img_{h, w, 3, std::vector<std::uint8_t>(static_cast<size_t>(w) * h * 3, 255)} {}

  void put(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    auto* p = &img_.data[(static_cast<size_t>(y) * img_.width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      put(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  const Image8& image() const { return img_; }

 private:
  Image8 img_;
};

struct Series {
  const std::vector<double>* y;
  Rgb color;
};

void render(const std::vector<double>& x, const std::vector<Series>& series, const std::filesystem::path& path) {
  constexpr int kW = 640, kH = 400, kMargin = 40;
  Canvas canvas(kW, kH);
  const Rgb axis{0, 0, 0}, grid{220, 220, 220};
  for (int i = 1; i < 5; ++i) {
    const int y = kMargin + i * (kH - 2 * kMargin) / 5;
    canvas.line(kMargin, y, kW - kMargin, y, grid);
  }
  canvas.line(kMargin, kH - kMargin, kW - kMargin, kH - kMargin, axis);
  canvas.line(kMargin, kMargin, kMargin, kH - kMargin, axis);

  double lo = INFINITY, hi = -INFINITY;
  for (const Series& s : series)
    for (double v : *s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) {
    write_png(canvas.image(), path);
    return;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double x0 = x.front(), x1 = x.size() > 1 ? x.back() : x.front() + 1.0;
  auto px = [&](double v) { return kMargin + static_cast<int>(std::lround((v - x0) / (x1 - x0) * (kW - 2 * kMargin))); };
  auto py = [&](double v) {
    return kH - kMargin - static_cast<int>(std::lround((v - lo) / (hi - lo) * (kH - 2 * kMargin)));
  };
  for (const Series& s : series) {
    for (size_t i = 0; i + 1 < s.y->size(); ++i)
      canvas.line(px(x[i]), py((*s.y)[i]), px(x[i + 1]), py((*s.y)[i + 1]), s.color);
    if (s.y->size() == 1) canvas.put(px(x[0]), py((*s.y)[0]), s.color);
  }
  write_png(canvas.image(), path);
}

}  // namespace

LogSeries read_log_csv(const std::filesystem::path& log_csv) {
  std::ifstream in(log_csv);
  if (!in) throw Error("cannot open log " + log_csv.string());
  std::string line;
  size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] != '#') {
      header = split(line);
      break;
    }
  }
  auto column = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_step = column("step"), c_inner = column("loss_inner_mean"), c_test = column("loss_test_mean"),
            c_psnr = column("psnr_db");
  if (c_step < 0 || c_inner < 0 || c_test < 0)
    throw Error("log line " + std::to_string(line_no) + ": header must contain step, loss_inner_mean, loss_test_mean");

  LogSeries s;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw Error("log line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                  " fields, got " + std::to_string(cells.size()));
    s.step.push_back(parse_number(cells[c_step], line_no, "step"));
    s.loss_inner.push_back(parse_number(cells[c_inner], line_no, "loss_inner_mean"));
    s.loss_test.push_back(parse_number(cells[c_test], line_no, "loss_test_mean"));
    if (c_psnr >= 0) s.psnr_db.push_back(parse_number(cells[c_psnr], line_no, "psnr_db"));
  }
  if (s.step.empty()) throw Error("log " + log_csv.string() + " has no data rows");
  return s;
}

void emit_plots(const std::filesystem::path& log_csv, const std::filesystem::path& out_dir) {
  const LogSeries s = read_log_csv(log_csv);
  std::filesystem::create_directories(out_dir);
  render(s.step, {{&s.loss_inner, {200, 40, 40}}, {&s.loss_test, {40, 80, 200}}}, out_dir / "loss.png");
  render(s.step, {{&s.psnr_db, {30, 140, 60}}}, out_dir / "psnr.png");
}

}  // namespace adavsr
