#include "optomvm/ml/idx.hpp"

#include <cstdio>
#include <fstream>

#include "optomvm/errors.hpp"

namespace optomvm {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;   // ubyte, 3 dimensions
constexpr std::uint32_t kLabelMagic = 0x00000801;   // ubyte, 1 dimension

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path,
                        std::size_t offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw format_error("idx: " + path.string() + ": truncated at byte offset " +
                           std::to_string(offset));
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

Mat IdxImages::to_matrix(int first, int n) const {
    if (first < 0 || n < 1 || first + n > count)
        throw domain_error("IdxImages::to_matrix: image range out of bounds");
    const int width = rows * cols;
    Mat m(n, width);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < width; ++p)
            m(i, p) = data[static_cast<std::size_t>(first + i) * width + p] / 255.0;
    return m;
}

IdxImages load_idx_images(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("idx: cannot open " + path.string());
    const std::uint32_t magic = read_be32(in, path, 0);
    if (magic != kImageMagic)
        throw format_error("idx: " + path.string() + ": bad magic at byte offset 0 (got 0x" +
                           [&] {
                               char buf[16];
                               std::snprintf(buf, sizeof buf, "%08x", magic);
                               return std::string(buf);
                           }() +
                           ", want 0x00000803)");
    IdxImages img;
    img.count = static_cast<int>(read_be32(in, path, 4));
    img.rows = static_cast<int>(read_be32(in, path, 8));
    img.cols = static_cast<int>(read_be32(in, path, 12));
    if (img.count < 1 || img.rows < 1 || img.cols < 1)
        throw format_error("idx: " + path.string() + ": bad dimensions in header");
    const std::size_t payload =
        static_cast<std::size_t>(img.count) * img.rows * img.cols;
    img.data.resize(payload);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(payload));
    if (static_cast<std::size_t>(in.gcount()) != payload)
        throw format_error("idx: " + path.string() + ": truncated payload at byte offset " +
                           std::to_string(16 + in.gcount()));
    return img;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("idx: cannot open " + path.string());
    const std::uint32_t magic = read_be32(in, path, 0);
    if (magic != kLabelMagic)
        throw format_error("idx: " + path.string() + ": bad magic at byte offset 0 (want 0x00000801)");
    const std::uint32_t count = read_be32(in, path, 4);
    std::vector<std::uint8_t> labels(count);
    in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        throw format_error("idx: " + path.string() + ": truncated payload at byte offset " +
                           std::to_string(8 + in.gcount()));
    return labels;
}

void save_idx_images(const std::filesystem::path& path, const IdxImages& images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("idx: cannot write " + path.string());
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.count));
    write_be32(out, static_cast<std::uint32_t>(images.rows));
    write_be32(out, static_cast<std::uint32_t>(images.cols));
    out.write(reinterpret_cast<const char*>(images.data.data()),
              static_cast<std::streamsize>(images.data.size()));
    if (!out) throw format_error("idx: write failed for " + path.string());
}

void save_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("idx: cannot write " + path.string());
    write_be32(out, kLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!out) throw format_error("idx: write failed for " + path.string());
}

} // namespace optomvm
