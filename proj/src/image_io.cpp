#include "storyboard/image_io.hpp"

#include "storyboard/error.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

namespace storyboard::image_io {

namespace fs = std::filesystem;

namespace {

struct Raster {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;
};

struct MemoryReader {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_error_fn(png_structp png, png_const_charp message) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    if (text) *text = message;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_mem(png_structp png, png_bytep out, png_size_t length) {
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (reader->offset + length > reader->bytes.size()) png_error(png, "truncated PNG data");
    std::memcpy(out, reader->bytes.data() + reader->offset, length);
    reader->offset += length;
}

void png_write_mem(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_mem(png_structp) {}

bool looks_like_png(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool looks_like_jpeg(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

Raster decode_png(std::span<const std::uint8_t> bytes) {
    if (!looks_like_png(bytes)) throw IoError("not a PNG stream");
    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                             png_warning_fn);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    MemoryReader reader{bytes, 0};
    Raster raster;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode failed: " + error);
    }
    png_set_read_fn(png, &reader, png_read_mem);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    raster.width = static_cast<int>(png_get_image_width(png, info));
    raster.height = static_cast<int>(png_get_image_height(png, info));
    raster.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    raster.data.resize(stride * raster.height);
    rows.resize(raster.height);
    for (int y = 0; y < raster.height; ++y) rows[y] = raster.data.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return raster;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

Raster decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    Raster raster;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError(std::string("JPEG decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    raster.width = static_cast<int>(cinfo.output_width);
    raster.height = static_cast<int>(cinfo.output_height);
    raster.channels = cinfo.output_components;
    const std::size_t stride = static_cast<std::size_t>(raster.width) * raster.channels;
    raster.data.resize(stride * raster.height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = raster.data.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return raster;
}

Raster decode_any(std::span<const std::uint8_t> bytes) {
    if (looks_like_png(bytes)) return decode_png(bytes);
    if (looks_like_jpeg(bytes)) return decode_jpeg(bytes);
    throw IoError("unrecognized image format");
}

Frame raster_to_frame(const Raster& r) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(r.width) * r.height * 3);
    const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* p = r.data.data() + i * r.channels;
        if (r.channels <= 2) {
            rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = p[0];
        } else {
            rgb[i * 3] = p[0];
            rgb[i * 3 + 1] = p[1];
            rgb[i * 3 + 2] = p[2];
        }
    }
    return Frame(r.width, r.height, std::move(rgb));
}

std::vector<std::uint8_t> encode(int width, int height, int channels, const std::uint8_t* data) {
    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                              png_warning_fn);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    std::vector<png_const_bytep> rows(height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed: " + error);
    }
    png_set_write_fn(png, &out, png_write_mem, png_flush_mem);
    png_set_IHDR(png, info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) rows[y] = data + y * stride;
    png_write_rows(png, const_cast<png_bytepp>(rows.data()), height);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

std::string read_text(const fs::path& path) {
    auto bytes = read_file(path);
    return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

PngInfo read_png_info(const fs::path& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open " + path.string());
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(fp, &std::fclose);
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError(path.string() + " is not a PNG");
    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                             png_warning_fn);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": " + error);
    }
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    PngInfo result;
    result.width = static_cast<int>(png_get_image_width(png, info));
    result.height = static_cast<int>(png_get_image_height(png, info));
    result.channels = png_get_channels(png, info);
    result.bit_depth = png_get_bit_depth(png, info);
    png_destroy_read_struct(&png, &info, nullptr);
    return result;
}

Frame read_image(const fs::path& path) {
    auto bytes = read_file(path);
    try {
        return raster_to_frame(decode_any(bytes));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

GrayImage read_gray_png(const fs::path& path) {
    auto bytes = read_file(path);
    try {
        return decode_png_gray(bytes);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const Frame& frame) {
    return encode(frame.width(), frame.height(), 3, frame.pixels().data());
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
    return encode(image.width(), image.height(), 1, image.values().data());
}

Frame decode_png_rgb(std::span<const std::uint8_t> bytes) {
    return raster_to_frame(decode_png(bytes));
}

GrayImage decode_png_gray(std::span<const std::uint8_t> bytes) {
    Raster r = decode_png(bytes);
    if (r.channels <= 2) {
        std::vector<std::uint8_t> v(static_cast<std::size_t>(r.width) * r.height);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = r.data[i * r.channels];
        return GrayImage(r.width, r.height, std::move(v));
    }
    return to_grayscale(raster_to_frame(r));
}

void write_png(const fs::path& path, const Frame& frame) { write_file(path, encode_png(frame)); }

void write_png(const fs::path& path, const GrayImage& image) { write_file(path, encode_png(image)); }

}  // namespace storyboard::image_io
