#include "pal/observe.hpp"

#include <zlib.h>

#include <cstdio>
// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <cstring>
#include <unordered_map>

namespace pal {

std::optional<ImageFormat> parse_image_format(std::string_view token) {
    std::string t(token);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
    if (t == "PNG") return ImageFormat::Png;
    if (t == "BMP") return ImageFormat::Bmp;
    if (t == "JPEG") return ImageFormat::Jpeg;
    if (t == "JPG") return ImageFormat::Jpg;
    if (t == "WBMP") return ImageFormat::Wbmp;
    if (t == "GIF") return ImageFormat::Gif;
    return std::nullopt;
}

std::string format_name(ImageFormat format) {
    switch (format) {
        case ImageFormat::Png: return "PNG";
        case ImageFormat::Bmp: return "BMP";
        case ImageFormat::Jpeg: return "JPEG";
        case ImageFormat::Jpg: return "JPG";
        case ImageFormat::Wbmp: return "WBMP";
        case ImageFormat::Gif: return "GIF";
    }
    return "PNG";
}

namespace {

using Bytes = std::vector<std::uint8_t>;

void put_be32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_le16(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_le32(Bytes& out, std::uint32_t v) {
    put_le16(out, v & 0xFFFF);
    put_le16(out, v >> 16);
}

void png_chunk(Bytes& out, const char* type, const Bytes& data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + start, static_cast<uInt>(out.size() - start));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
}

// Adaptive per-row filtering (minimum sum of absolute residuals) followed by
// maximum-effort deflate.
Bytes encode_png(const ScreenFrame& f) {
    const std::size_t stride = static_cast<std::size_t>(f.width) * 3;
    Bytes filtered;
    filtered.reserve((stride + 1) * f.height);
    std::array<Bytes, 5> candidates;
    for (auto& c : candidates) c.resize(stride);
    const Bytes zero(stride, 0);
    for (int y = 0; y < f.height; ++y) {
        const std::uint8_t* row = &f.rgb[y * stride];
        const std::uint8_t* prev = y > 0 ? &f.rgb[(y - 1) * stride] : zero.data();
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= 3 ? row[i - 3] : 0;
            int b = prev[i];
            int c = i >= 3 ? prev[i - 3] : 0;
            int x = row[i];
            candidates[0][i] = static_cast<std::uint8_t>(x);
            candidates[1][i] = static_cast<std::uint8_t>(x - a);
            candidates[2][i] = static_cast<std::uint8_t>(x - b);
            candidates[3][i] = static_cast<std::uint8_t>(x - ((a + b) >> 1));
            candidates[4][i] = static_cast<std::uint8_t>(x - paeth(a, b, c));
        }
        int best = 0;
        long best_sum = -1;
        for (int k = 0; k < 5; ++k) {
            long sum = 0;
            for (auto v : candidates[k]) sum += v < 128 ? v : 256 - v;
            if (best_sum < 0 || sum < best_sum) {
                best_sum = sum;
                best = k;
            }
        }
        filtered.push_back(static_cast<std::uint8_t>(best));
        filtered.insert(filtered.end(), candidates[best].begin(), candidates[best].end());
    }

    uLongf packed_size = compressBound(static_cast<uLong>(filtered.size()));
    Bytes packed(packed_size);
    if (compress2(packed.data(), &packed_size, filtered.data(), static_cast<uLong>(filtered.size()), 9) != Z_OK) {
        throw std::runtime_error("deflate failed");
    }
    packed.resize(packed_size);

    Bytes out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    Bytes ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(f.width));
    put_be32(ihdr, static_cast<std::uint32_t>(f.height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit truecolour, no interlace
    png_chunk(out, "IHDR", ihdr);
    png_chunk(out, "IDAT", packed);
    png_chunk(out, "IEND", {});
    return out;
}

Bytes encode_bmp(const ScreenFrame& f) {
    const std::uint32_t row_bytes = (static_cast<std::uint32_t>(f.width) * 3 + 3) & ~3u;
    const std::uint32_t pixel_bytes = row_bytes * static_cast<std::uint32_t>(f.height);
    Bytes out;
    out.reserve(54 + pixel_bytes);
    out.push_back('B');
    out.push_back('M');
    put_le32(out, 54 + pixel_bytes);
    put_le32(out, 0);
    put_le32(out, 54);
    put_le32(out, 40);
    put_le32(out, static_cast<std::uint32_t>(f.width));
    put_le32(out, static_cast<std::uint32_t>(f.height));  // positive: bottom-up rows
    put_le16(out, 1);
    put_le16(out, 24);
    put_le32(out, 0);
    put_le32(out, pixel_bytes);
    put_le32(out, 2835);  // 72 dpi
    put_le32(out, 2835);
    put_le32(out, 0);
    put_le32(out, 0);
    for (int y = f.height - 1; y >= 0; --y) {
        const std::uint8_t* row = &f.rgb[static_cast<std::size_t>(y) * f.width * 3];
        for (int x = 0; x < f.width; ++x) {
            out.push_back(row[x * 3 + 2]);
            out.push_back(row[x * 3 + 1]);
            out.push_back(row[x * 3]);
        }
        for (std::uint32_t pad = static_cast<std::uint32_t>(f.width) * 3; pad < row_bytes; ++pad) out.push_back(0);
    }
    return out;
}

Bytes encode_jpeg(const ScreenFrame& f, int quality) {
    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jerr.error_exit = [](j_common_ptr info) {
        char message[JMSG_LENGTH_MAX];
        (*info->err->format_message)(info, message);
        throw std::runtime_error(std::string("jpeg: ") + message);
    };
    jpeg_create_compress(&cinfo);
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    try {
        jpeg_mem_dest(&cinfo, &buffer, &size);
        cinfo.image_width = static_cast<JDIMENSION>(f.width);
        cinfo.image_height = static_cast<JDIMENSION>(f.height);
        cinfo.input_components = 3;
        cinfo.in_color_space = JCS_RGB;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, quality, TRUE);
        jpeg_start_compress(&cinfo, TRUE);
        while (cinfo.next_scanline < cinfo.image_height) {
            JSAMPROW row = const_cast<JSAMPROW>(&f.rgb[static_cast<std::size_t>(cinfo.next_scanline) * f.width * 3]);
            jpeg_write_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_compress(&cinfo);
    } catch (...) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        throw;
    }
    Bytes out(buffer, buffer + size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

void put_wbmp_int(Bytes& out, std::uint32_t v) {
    std::uint8_t groups[5];
    int n = 0;
    do {
        groups[n++] = v & 0x7F;
        v >>= 7;
    } while (v != 0);
    while (n-- > 0) out.push_back(static_cast<std::uint8_t>(groups[n] | (n > 0 ? 0x80 : 0)));
}

Bytes encode_wbmp(const ScreenFrame& f) {
    Bytes out = {0x00, 0x00};
    put_wbmp_int(out, static_cast<std::uint32_t>(f.width));
    put_wbmp_int(out, static_cast<std::uint32_t>(f.height));
    const int row_bytes = (f.width + 7) / 8;
    for (int y = 0; y < f.height; ++y) {
        std::size_t start = out.size();
        out.resize(start + row_bytes, 0);
        for (int x = 0; x < f.width; ++x) {
            const std::uint8_t* p = &f.rgb[(static_cast<std::size_t>(y) * f.width + x) * 3];
            int luminance = (299 * p[0] + 587 * p[1] + 114 * p[2]) / 1000;
            if (luminance >= 128) out[start + x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
        }
    }
    return out;
}

// Variable-width LZW as GIF specifies it, packed least-significant bit first.
class GifLzw {
public:
    GifLzw(int min_code_size, Bytes& out) : min_(min_code_size), out_(out) { reset(); }

    void encode(const std::vector<std::uint8_t>& indices) {
        emit(clear_code());
        int prefix = -1;
        for (std::uint8_t k : indices) {
            if (prefix < 0) {
                prefix = k;
                continue;
            }
            std::uint32_t key = (static_cast<std::uint32_t>(prefix) << 8) | k;
            auto it = table_.find(key);
            if (it != table_.end()) {
                prefix = it->second;
                continue;
            }
            emit(prefix);
            if (next_ < 4096) {
                table_.emplace(key, next_++);
                if (next_ > (1 << width_) && width_ < 12) ++width_;
            } else {
                emit(clear_code());
                reset();
            }
            prefix = k;
        }
        if (prefix >= 0) emit(prefix);
        emit(clear_code() + 1);
        if (bits_ > 0) block_.push_back(static_cast<std::uint8_t>(acc_));
        flush_block(true);
    }

private:
    int clear_code() const { return 1 << min_; }

    void reset() {
        table_.clear();
        width_ = min_ + 1;
        next_ = clear_code() + 2;
    }

    void emit(int code) {
        acc_ |= static_cast<std::uint32_t>(code) << bits_;
        bits_ += width_;
        while (bits_ >= 8) {
            block_.push_back(static_cast<std::uint8_t>(acc_ & 0xFF));
            acc_ >>= 8;
            bits_ -= 8;
            if (block_.size() == 255) flush_block(false);
        }
    }

    void flush_block(bool final) {
        if (!block_.empty()) {
            out_.push_back(static_cast<std::uint8_t>(block_.size()));
            out_.insert(out_.end(), block_.begin(), block_.end());
            block_.clear();
        }
        if (final) out_.push_back(0);
    }

    int min_;
    Bytes& out_;
    std::unordered_map<std::uint32_t, int> table_;
    int width_ = 0;
    int next_ = 0;
    std::uint32_t acc_ = 0;
    int bits_ = 0;
    Bytes block_;
};

Bytes encode_gif(const ScreenFrame& f) {
    // Exact palette when the frame has at most 256 colours, otherwise a
    // 3-3-2 bit reduction.
    std::unordered_map<std::uint32_t, std::uint8_t> index;
    std::vector<std::uint32_t> colours;
    const std::size_t pixels = static_cast<std::size_t>(f.width) * f.height;
    bool reduced = false;
    for (std::size_t i = 0; i < pixels && !reduced; ++i) {
        std::uint32_t c = (f.rgb[i * 3] << 16) | (f.rgb[i * 3 + 1] << 8) | f.rgb[i * 3 + 2];
        if (index.contains(c)) continue;
        if (colours.size() == 256) {
            reduced = true;
            break;
        }
        index.emplace(c, static_cast<std::uint8_t>(colours.size()));
        colours.push_back(c);
    }
    std::vector<std::uint8_t> indices(pixels);
    if (reduced) {
        colours.clear();
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t r = ((i >> 5) & 7) * 255 / 7, g = ((i >> 2) & 7) * 255 / 7, b = (i & 3) * 255 / 3;
            colours.push_back((r << 16) | (g << 8) | b);
        }
        for (std::size_t i = 0; i < pixels; ++i) {
            indices[i] = static_cast<std::uint8_t>((f.rgb[i * 3] & 0xE0) | ((f.rgb[i * 3 + 1] >> 3) & 0x1C) |
                                                   (f.rgb[i * 3 + 2] >> 6));
        }
    } else {
        for (std::size_t i = 0; i < pixels; ++i) {
            std::uint32_t c = (f.rgb[i * 3] << 16) | (f.rgb[i * 3 + 1] << 8) | f.rgb[i * 3 + 2];
            indices[i] = index.at(c);
        }
    }
    int bits = 1;
    while ((1u << bits) < colours.size()) ++bits;
    const int table_bits = std::max(bits, 1);

    Bytes out = {'G', 'I', 'F', '8', '9', 'a'};
    put_le16(out, static_cast<std::uint32_t>(f.width));
    put_le16(out, static_cast<std::uint32_t>(f.height));
    out.push_back(static_cast<std::uint8_t>(0x80 | ((table_bits - 1) << 4) | (table_bits - 1)));
    out.push_back(0);  // background index
    out.push_back(0);  // aspect ratio
    for (int i = 0; i < (1 << table_bits); ++i) {
        std::uint32_t c = i < static_cast<int>(colours.size()) ? colours[i] : 0;
        out.push_back(static_cast<std::uint8_t>(c >> 16));
        out.push_back(static_cast<std::uint8_t>(c >> 8));
        out.push_back(static_cast<std::uint8_t>(c));
    }
    out.push_back(0x2C);
    put_le16(out, 0);
    put_le16(out, 0);
    put_le16(out, static_cast<std::uint32_t>(f.width));
    put_le16(out, static_cast<std::uint32_t>(f.height));
    out.push_back(0);
    const int min_code_size = std::max(2, table_bits);
    out.push_back(static_cast<std::uint8_t>(min_code_size));
    GifLzw(min_code_size, out).encode(indices);
    out.push_back(0x3B);
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const ScreenFrame& frame, ImageFormat format, int jpeg_quality) {
    if (frame.width < 1 || frame.height < 1 ||
        frame.rgb.size() != static_cast<std::size_t>(frame.width) * frame.height * 3) {
        throw std::invalid_argument("frame buffer does not match its dimensions");
    }
    switch (format) {
        case ImageFormat::Png: return encode_png(frame);
        case ImageFormat::Bmp: return encode_bmp(frame);
        case ImageFormat::Jpeg:
        case ImageFormat::Jpg: return encode_jpeg(frame, jpeg_quality);
        case ImageFormat::Wbmp: return encode_wbmp(frame);
        case ImageFormat::Gif: return encode_gif(frame);
    }
    throw std::invalid_argument("unsupported image format");
}

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (i < bytes.size()) {
        std::uint32_t v = bytes[i] << 16;
        if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length must be a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else if ((v[k] = value(c)) < 0 || pad > 0) {
                throw std::invalid_argument("invalid base64 input");
            }
        }
        std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<std::uint8_t>(n >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
    }
    return out;
}

}  // namespace pal
