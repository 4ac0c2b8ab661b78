#include <zlib.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "hbpn/image.hpp"

namespace hbpn {

namespace {

const unsigned char kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t read_be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void write_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

[[noreturn]] void fail(const std::filesystem::path& path,
                       const std::string& reason) {
  throw ImageError(path.string() + ": " + reason);
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  in.seekg(0, std::ios::end);
  const std::streamoff len = in.tellg();
  in.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(len));
  in.read(reinterpret_cast<char*>(buf.data()), len);
  if (!in) fail(path, "short read");
  return buf;
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

struct PngRaw {
  int width = 0, height = 0, channels = 0;
  std::vector<unsigned char> pixels;  // interleaved, 8-bit
};

PngRaw decode_png(const std::filesystem::path& path,
                  const std::vector<unsigned char>& buf) {
  if (buf.size() < 8 || std::memcmp(buf.data(), kPngSig, 8) != 0) {
    fail(path, "not a PNG file (bad signature)");
  }
  std::size_t pos = 8;
  int width = 0, height = 0, color_type = -1;
  std::vector<unsigned char> idat;
  std::vector<unsigned char> palette;  // rgb triples
  bool seen_ihdr = false, seen_iend = false;
  while (pos + 8 <= buf.size() && !seen_iend) {
    const std::uint32_t len = read_be32(&buf[pos]);
    if (pos + 12 + len > buf.size()) fail(path, "truncated chunk");
    const char* type = reinterpret_cast<const char*>(&buf[pos + 4]);
    const unsigned char* data = &buf[pos + 8];
    const std::uint32_t crc_stored = read_be32(&buf[pos + 8 + len]);
    const std::uint32_t crc_calc = crc32(
        crc32(0, &buf[pos + 4], 4), data, len);
    if (crc_stored != crc_calc) fail(path, "chunk CRC mismatch");
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail(path, "bad IHDR length");
      width = static_cast<int>(read_be32(data));
      height = static_cast<int>(read_be32(data + 4));
      const int bit_depth = data[8];
      color_type = data[9];
      if (bit_depth != 8) {
        fail(path, "unsupported bit depth " + std::to_string(bit_depth) +
                       " (only 8-bit PNG is handled)");
      }
      if (color_type != 0 && color_type != 2 && color_type != 3 &&
          color_type != 4 && color_type != 6) {
        fail(path, "unsupported color type " + std::to_string(color_type));
      }
      if (data[12] != 0) fail(path, "interlaced PNG is not supported");
      seen_ihdr = true;
    } else if (std::memcmp(type, "PLTE", 4) == 0) {
      palette.assign(data, data + len);
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_iend = true;
    }
    pos += 12 + len;
  }
  if (!seen_ihdr) fail(path, "missing IHDR");
  if (width < 1 || height < 1) fail(path, "bad dimensions");
  if (idat.empty()) fail(path, "missing IDAT");

  const int src_ch = color_type == 0 ? 1
                     : color_type == 2 ? 3
                     : color_type == 3 ? 1
                     : color_type == 4 ? 2
                                       : 4;
  const std::size_t stride = static_cast<std::size_t>(width) * src_ch;
  std::vector<unsigned char> raw((stride + 1) * height);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  const int zrc = uncompress(raw.data(), &raw_len, idat.data(),
                             static_cast<uLong>(idat.size()));
  if (zrc != Z_OK || raw_len != raw.size()) fail(path, "IDAT inflate failed");

  // unfilter in place into a separate pixel buffer
  std::vector<unsigned char> px(stride * height);
  const int bpp = src_ch;
  for (int y = 0; y < height; ++y) {
    const unsigned char filter = raw[y * (stride + 1)];
    const unsigned char* src = &raw[y * (stride + 1) + 1];
    unsigned char* cur = &px[y * stride];
    const unsigned char* up = y > 0 ? &px[(y - 1) * stride] : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
      const int b = up ? up[i] : 0;
      const int c = (up && i >= static_cast<std::size_t>(bpp)) ? up[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: fail(path, "bad filter type " + std::to_string(filter));
      }
      cur[i] = static_cast<unsigned char>(v & 0xff);
    }
  }

  PngRaw out;
  out.width = width;
  out.height = height;
  out.channels = 3;
  out.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(width) * height; ++i) {
    const unsigned char* s = &px[i * src_ch];
    unsigned char r, g, b;
    switch (color_type) {
      case 0:
      case 4:
        r = g = b = s[0];
        break;
      case 2:
      case 6:
        r = s[0];
        g = s[1];
        b = s[2];
        break;
      default: {  // palette
        const std::size_t pi = static_cast<std::size_t>(s[0]) * 3;
        if (pi + 2 >= palette.size()) fail(path, "palette index out of range");
        r = palette[pi];
        g = palette[pi + 1];
        b = palette[pi + 2];
      }
    }
    out.pixels[i * 3] = r;
    out.pixels[i * 3 + 1] = g;
    out.pixels[i * 3 + 2] = b;
  }
  return out;
}

void append_chunk(std::vector<unsigned char>& out, const char* type,
                  const unsigned char* data, std::size_t len) {
  write_be32(out, static_cast<std::uint32_t>(len));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + len);
  std::uint32_t crc = crc32(0, &out[type_at], 4);
  if (len > 0) crc = crc32(crc, data, static_cast<uInt>(len));
  write_be32(out, crc);
}

void write_png(const std::filesystem::path& path, const unsigned char* pixels,
               int width, int height, int channels) {
  std::vector<unsigned char> out(kPngSig, kPngSig + 8);
  unsigned char ihdr[13];
  ihdr[0] = static_cast<unsigned char>(width >> 24);
  ihdr[1] = static_cast<unsigned char>(width >> 16);
  ihdr[2] = static_cast<unsigned char>(width >> 8);
  ihdr[3] = static_cast<unsigned char>(width);
  ihdr[4] = static_cast<unsigned char>(height >> 24);
  ihdr[5] = static_cast<unsigned char>(height >> 16);
  ihdr[6] = static_cast<unsigned char>(height >> 8);
  ihdr[7] = static_cast<unsigned char>(height);
  ihdr[8] = 8;
  ihdr[9] = channels == 3 ? 2 : 0;
  ihdr[10] = ihdr[11] = ihdr[12] = 0;
  append_chunk(out, "IHDR", ihdr, 13);

  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<unsigned char> raw((stride + 1) * height);
  for (int y = 0; y < height; ++y) {
    raw[y * (stride + 1)] = 0;  // filter None
    std::memcpy(&raw[y * (stride + 1) + 1], pixels + y * stride, stride);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> z(bound);
  if (compress2(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK) {
    fail(path, "deflate failed");
  }
  append_chunk(out, "IDAT", z.data(), bound);
  append_chunk(out, "IEND", nullptr, 0);

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) fail(path, "short write");
}

struct PnmRaw {
  int width = 0, height = 0, channels = 0;
  std::vector<unsigned char> pixels;
};

PnmRaw decode_pnm(const std::filesystem::path& path,
                  const std::vector<unsigned char>& buf) {
  std::size_t pos = 0;
  auto skip_space = [&]() {
    while (pos < buf.size()) {
      if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else if (std::isspace(buf[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() {
    skip_space();
    int v = 0;
    bool any = false;
    while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
      v = v * 10 + (buf[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) fail(path, "malformed PNM header");
    return v;
  };
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6')) {
    fail(path, "not a binary PGM/PPM file");
  }
  PnmRaw out;
  out.channels = buf[1] == '6' ? 3 : 1;
  pos = 2;
  out.width = read_int();
  out.height = read_int();
  const int maxval = read_int();
  if (maxval != 255) {
    fail(path, "unsupported maxval " + std::to_string(maxval));
  }
  ++pos;  // single whitespace after maxval
  const std::size_t need =
      static_cast<std::size_t>(out.width) * out.height * out.channels;
  if (pos + need > buf.size()) fail(path, "truncated pixel data");
  out.pixels.assign(buf.begin() + pos, buf.begin() + pos + need);
  return out;
}

void write_pnm(const std::filesystem::path& path, const unsigned char* pixels,
               int width, int height, int channels) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << (channels == 3 ? "P6" : "P5") << "\n"
    << width << " " << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(pixels),
          static_cast<std::streamsize>(static_cast<std::size_t>(width) *
                                       height * channels));
  if (!f) fail(path, "short write");
}

ImageRGB from_bytes(int width, int height, int channels,
                    const unsigned char* px) {
  ImageRGB img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::int64_t i = static_cast<std::int64_t>(y) * width + x;
      const unsigned char* s = px + i * channels;
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = (channels == 3 ? s[c] : s[0]) / 255.0f;
      }
    }
  }
  return img;
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  for (auto& ch : e) ch = static_cast<char>(std::tolower(ch));
  return e;
}

}  // namespace

ImageRGB load_image(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  if (buf.size() >= 8 && std::memcmp(buf.data(), kPngSig, 8) == 0) {
    const PngRaw png = decode_png(path, buf);
    return from_bytes(png.width, png.height, 3, png.pixels.data());
  }
  if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '5' || buf[1] == '6')) {
    const PnmRaw pnm = decode_pnm(path, buf);
    return from_bytes(pnm.width, pnm.height, pnm.channels, pnm.pixels.data());
  }
  fail(path, "unrecognized image format (want PNG or binary PPM/PGM)");
}

void save_image(const ImageRGB& img, const std::filesystem::path& path) {
  std::vector<unsigned char> px(static_cast<std::size_t>(img.width) *
                                img.height * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::int64_t i = static_cast<std::int64_t>(y) * img.width + x;
      for (int c = 0; c < 3; ++c) px[i * 3 + c] = quantize_byte(img.at(c, y, x));
    }
  }
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    write_png(path, px.data(), img.width, img.height, 3);
  } else if (ext == ".ppm") {
    write_pnm(path, px.data(), img.width, img.height, 3);
  } else {
    fail(path, "unsupported output extension '" + ext + "' (want .png/.ppm)");
  }
}

void save_gray(const std::vector<float>& plane, int height, int width,
               const std::filesystem::path& path) {
  if (static_cast<std::int64_t>(plane.size()) !=
      static_cast<std::int64_t>(height) * width) {
    throw ImageError("save_gray: plane size does not match " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  std::vector<unsigned char> px(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) px[i] = quantize_byte(plane[i]);
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    write_png(path, px.data(), width, height, 1);
  } else if (ext == ".pgm") {
    write_pnm(path, px.data(), width, height, 1);
  } else {
    fail(path, "unsupported output extension '" + ext + "' (want .png/.pgm)");
  }
}

}  // namespace hbpn
