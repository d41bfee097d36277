#include "uois/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace uois {

namespace {

cv::Mat read_unchanged(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) {
    throw FormatError("cannot decode image " + path.string());
  }
  return mat;
}

void write_png(const std::filesystem::path& path, const cv::Mat& mat) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), mat)) {
    throw Error("cannot write image " + path.string());
  }
}

}  // namespace

ColorImage read_color_png(const std::filesystem::path& path) {
  cv::Mat mat = read_unchanged(path);
  if (mat.depth() != CV_8U) {
    throw FormatError(path.string() + ": expected 8-bit colour image");
  }
  cv::Mat rgb;
  switch (mat.channels()) {
    case 1: cv::cvtColor(mat, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw FormatError(path.string() + ": unsupported channel count");
  }
  ColorImage image(rgb.rows, rgb.cols);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      image.at(y, x) = Rgb{row[x][0], row[x][1], row[x][2]};
    }
  }
  return image;
}

DepthImage read_depth_png(const std::filesystem::path& path) {
  cv::Mat mat = read_unchanged(path);
  if (mat.channels() != 1 || mat.depth() != CV_16U) {
    throw FormatError(path.string() + ": expected 16-bit single-channel depth");
  }
  DepthImage image(mat.rows, mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<std::uint16_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      image.at(y, x) = row[x];
    }
  }
  return image;
}

LabelImage read_label_png(const std::filesystem::path& path) {
  cv::Mat mat = read_unchanged(path);
  if (mat.channels() != 1 || (mat.depth() != CV_8U && mat.depth() != CV_16U)) {
    throw FormatError(path.string() + ": expected 8- or 16-bit single-channel labels");
  }
  LabelImage image(mat.rows, mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    for (int x = 0; x < mat.cols; ++x) {
      image.at(y, x) = mat.depth() == CV_8U ? mat.at<std::uint8_t>(y, x) : mat.at<std::uint16_t>(y, x);
    }
  }
  return image;
}

void write_color_png(const std::filesystem::path& path, const ColorImage& image) {
  cv::Mat mat(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Rgb& p = image.at(y, x);
      row[x] = cv::Vec3b(p.b, p.g, p.r);
    }
  }
  write_png(path, mat);
}

void write_depth_png(const std::filesystem::path& path, const DepthImage& image) {
  cv::Mat mat(image.height(), image.width(), CV_16UC1);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      mat.at<std::uint16_t>(y, x) = image.at(y, x);
    }
  }
  write_png(path, mat);
}

void write_label_png(const std::filesystem::path& path, const LabelImage& image) {
  cv::Mat mat(image.height(), image.width(), CV_16UC1);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const std::uint32_t id = image.at(y, x);
      if (id > 0xffff) {
        throw InvalidInput("label id exceeds 16 bits");
      }
      mat.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(id);
    }
  }
  write_png(path, mat);
}

}  // namespace uois
