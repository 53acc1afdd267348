#include "storyboard/frames.hpp"

#include "storyboard/error.hpp"
#include "storyboard/image_io.hpp"
#include "storyboard/kernels.hpp"
#include "storyboard/subprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

namespace storyboard {

namespace fs = std::filesystem;

Frame::Frame(int width, int height, std::vector<std::uint8_t> rgb, std::size_t index,
             std::optional<double> timestamp)
    : width_(width), height_(height), pixels_(std::move(rgb)), index_(index), timestamp_(timestamp) {
    if (width <= 0 || height <= 0) throw InvalidArgument("frame dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * height * 3)
        throw InvalidArgument("frame pixel buffer does not match width*height*3");
    if (timestamp && *timestamp < 0.0) throw InvalidArgument("frame timestamp must be >= 0");
}

Frame Frame::filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                    std::size_t index) {
    if (width <= 0 || height <= 0) throw InvalidArgument("frame dimensions must be positive");
    std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < px.size(); i += 3) {
        px[i] = r;
        px[i + 1] = g;
        px[i + 2] = b;
    }
    return Frame(width, height, std::move(px), index);
}

Frame Frame::with_index(std::size_t index, std::optional<double> timestamp) const {
    Frame copy = *this;
    copy.index_ = index;
    copy.timestamp_ = timestamp;
    return copy;
}

bool Frame::same_pixels(const Frame& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && pixels_ == other.pixels_;
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0) throw InvalidArgument("image dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(width) * height)
        throw InvalidArgument("gray buffer does not match width*height");
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : GrayImage(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                              static_cast<std::size_t>(std::max(height, 0)),
                                          fill)) {}

FrameSequence::FrameSequence(std::vector<Frame> frames, double fps) : frames_(std::move(frames)), fps_(fps) {
    if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
    for (std::size_t i = 1; i < frames_.size(); ++i) {
        if (frames_[i].index() <= frames_[i - 1].index())
            throw InvalidArgument("frame indices must be strictly increasing");
        if (frames_[i].width() != frames_[0].width() || frames_[i].height() != frames_[0].height())
            throw InvalidArgument("mixed dimensions in frame sequence");
    }
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

FrameSequence load_directory(const fs::path& dir, double fps) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidArgument("no frames in " + dir.string());

    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        Frame f = image_io::read_image(files[i]);
        if (!frames.empty() && (f.width() != frames[0].width() || f.height() != frames[0].height()))
            throw InvalidArgument("mixed dimensions: " + files[i].filename().string() + " is " +
                                  std::to_string(f.width()) + "x" + std::to_string(f.height()) +
                                  ", expected " + std::to_string(frames[0].width()) + "x" +
                                  std::to_string(frames[0].height()));
        frames.push_back(f.with_index(i, static_cast<double>(i) / fps));
    }
    return FrameSequence(std::move(frames), fps);
}

std::string substitute(std::string arg, const std::string& key, const std::string& value) {
    for (std::size_t pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size()))
        arg.replace(pos, key.size(), value);
    return arg;
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("storyboard-decode-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace

FrameSequence load_frames(const fs::path& source, const LoadOptions& options) {
    const double fps = options.fps_hint.value_or(24.0);
    if (!(fps > 0.0)) throw InvalidArgument("fps hint must be positive");
    if (!fs::exists(source)) throw IoError("source does not exist: " + source.string());
    if (fs::is_directory(source)) return load_directory(source, fps);

    TempDir scratch;
    std::vector<std::string> argv;
    for (const auto& arg : options.decoder_command)
        argv.push_back(substitute(substitute(arg, "{input}", source.string()), "{outdir}", scratch.path().string()));
    ProcessResult run = run_process(argv);
    if (run.exit_code != 0)
        throw SubprocessError("decoder exited with status " + std::to_string(run.exit_code) + ": " +
                                  run.stderr_text,
                              run.exit_code, run.stderr_text);
    return load_directory(scratch.path(), fps);
}

Frame resize(const Frame& frame, int width, int height) {
    if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
    if (width == frame.width() && height == frame.height()) return frame;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height * 3);
    kernels::parallel::resize_bilinear(frame.pixels(), frame.width(), frame.height(), out, width, height, 3);
    return Frame(width, height, std::move(out), frame.index(), frame.timestamp());
}

GrayImage resize(const GrayImage& image, int width, int height) {
    if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
    if (width == image.width() && height == image.height()) return image;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height);
    kernels::parallel::resize_bilinear(image.values(), image.width(), image.height(), out, width, height, 1);
    return GrayImage(width, height, std::move(out));
}

Frame resize_to_width(const Frame& frame, int target_width) {
    if (target_width < 1) throw InvalidArgument("target width must be >= 1");
    const long long num = static_cast<long long>(frame.height()) * target_width;
    // round half up of h * target / w
    const int height = static_cast<int>(std::max(1LL, (2 * num + frame.width()) / (2LL * frame.width())));
    return resize(frame, target_width, height);
}

GrayImage to_grayscale(const Frame& frame) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(frame.width()) * frame.height());
    kernels::parallel::rgb_to_luma(frame.pixels(), out);
    return GrayImage(frame.width(), frame.height(), std::move(out));
}

Frame to_rgb(const GrayImage& image, std::size_t index) {
    std::vector<std::uint8_t> out(image.size() * 3);
    auto v = image.values();
    for (std::size_t i = 0; i < v.size(); ++i) out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = v[i];
    return Frame(image.width(), image.height(), std::move(out), index);
}

}  // namespace storyboard
