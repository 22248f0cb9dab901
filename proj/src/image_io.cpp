#include "smx/image_io.hpp"

#include <algorithm>
#include <filesystem>

#include <opencv2/imgcodecs.hpp>

namespace smx {

ImageTensor load_png(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);  // BGR, promotes grayscale
  if (m.empty()) fail(ErrorCode::io_error, "cannot decode image " + path);
  ImageTensor t(1, 3, m.rows, m.cols, ValueDomain::unit);
  for (int y = 0; y < m.rows; ++y) {
    const unsigned char* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < m.cols; ++x) {
      t.at(0, 0, y, x) = row[3 * x + 2] / 255.0f;  // R
      t.at(0, 1, y, x) = row[3 * x + 1] / 255.0f;  // G
      t.at(0, 2, y, x) = row[3 * x + 0] / 255.0f;  // B
    }
  }
  return t;
}

void save_png(const ImageTensor& img, const std::string& path) {
  if (img.n != 1 || img.c != 3) fail(ErrorCode::invalid_shape, "save_png expects 1x3xHxW");
  cv::Mat m(img.h, img.w, CV_8UC3);
  for (int y = 0; y < img.h; ++y) {
    unsigned char* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < img.w; ++x) {
      auto q = [&](int c) {
        float v = std::clamp(img.at(0, c, y, x), 0.0f, 1.0f);
        return static_cast<unsigned char>(v * 255.0f + 0.5f);
      };
      row[3 * x + 0] = q(2);
      row[3 * x + 1] = q(1);
      row[3 * x + 2] = q(0);
    }
  }
  const std::string tmp = path + ".tmp.png";
  if (!cv::imwrite(tmp, m)) fail(ErrorCode::io_error, "cannot write " + path);
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> list_pngs(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(ErrorCode::io_error, dir + " is not a directory");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace smx
