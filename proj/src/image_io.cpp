#include "evseg/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "evseg/common.hpp"

namespace evseg {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    check_data(!tok.empty(), "truncated header in " + path);
    return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
    try {
        const int v = std::stoi(tok);
        check_data(v > 0, "non-positive dimension in " + path);
        return v;
    } catch (const std::logic_error&) {
        throw DataError("malformed header field '" + tok + "' in " + path);
    }
}

struct PnmHeader {
    int channels, h, w;
};

PnmHeader read_header(std::istream& in, const std::string& path) {
    const std::string magic = next_token(in, path);
    check_data(magic == "P5" || magic == "P6", "unsupported format '" + magic + "' in " + path);
    PnmHeader hdr;
    hdr.channels = magic == "P5" ? 1 : 3;
    hdr.w = parse_dim(next_token(in, path), path);
    hdr.h = parse_dim(next_token(in, path), path);
    const int maxval = parse_dim(next_token(in, path), path);
    check_data(maxval == 255, "only maxval 255 supported, got " +
                                  std::to_string(maxval) + " in " + path);
    return hdr;
}

std::vector<uint8_t> read_payload(std::istream& in, int64_t n, const std::string& path) {
    std::vector<uint8_t> bytes(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(bytes.data()), n);
    check_data(in.gcount() == n, "truncated pixel data in " + path);
    return bytes;
}

void write_pnm(const std::string& path, int h, int w, const std::vector<uint8_t>& bytes,
               int channels) {
    std::ofstream out(path, std::ios::binary);
    check_data(out.good(), "cannot open " + path + " for writing");
    out << (channels == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    check_data(out.good(), "write failed for " + path);
}

}  // namespace

Tensor load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check_data(in.good(), "cannot open " + path);
    const PnmHeader hdr = read_header(in, path);
    const int64_t n = static_cast<int64_t>(hdr.h) * hdr.w * hdr.channels;
    const std::vector<uint8_t> bytes = read_payload(in, n, path);
    Tensor img({hdr.h, hdr.w, hdr.channels});
    for (int64_t i = 0; i < n; ++i) img[i] = bytes[static_cast<size_t>(i)] / 255.0;
    return img;
}

void save_image(const std::string& path, const Tensor& img) {
    check_shape(img.rank() == 3 && (img.dim(2) == 1 || img.dim(2) == 3),
                "save_image: (H,W,1) or (H,W,3) required, got " + img.shape_str());
    std::vector<uint8_t> bytes(static_cast<size_t>(img.size()));
    for (int64_t i = 0; i < img.size(); ++i) {
        const double scaled = std::lround(std::clamp(img[i], 0.0, 1.0) * 255.0);
        bytes[static_cast<size_t>(i)] = static_cast<uint8_t>(scaled);
    }
    write_pnm(path, img.dim(0), img.dim(1), bytes, img.dim(2));
}

IntImage load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check_data(in.good(), "cannot open " + path);
    const PnmHeader hdr = read_header(in, path);
    check_data(hdr.channels == 1, "mask must be greyscale: " + path);
    const int64_t n = static_cast<int64_t>(hdr.h) * hdr.w;
    const std::vector<uint8_t> bytes = read_payload(in, n, path);
    IntImage mask(hdr.h, hdr.w);
    for (int64_t i = 0; i < n; ++i) mask.v[static_cast<size_t>(i)] = bytes[static_cast<size_t>(i)];
    return mask;
}

void save_mask(const std::string& path, const IntImage& mask) {
    std::vector<uint8_t> bytes(static_cast<size_t>(mask.size()));
    for (int64_t i = 0; i < mask.size(); ++i) {
        const int32_t id = mask.v[static_cast<size_t>(i)];
        check_data(id >= 0 && id <= 255, "mask id " + std::to_string(id) + " not storable");
        bytes[static_cast<size_t>(i)] = static_cast<uint8_t>(id);
    }
    write_pnm(path, mask.h, mask.w, bytes, 1);
}

}  // namespace evseg
