#include "optomvm/ml/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "optomvm/errors.hpp"

namespace optomvm {

namespace {

// Next header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

int parse_int(const std::string& tok, const std::filesystem::path& path, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw format_error("pgm: " + path.string() + ": malformed " + what + " '" + tok + "'");
    }
}

} // namespace

Mat load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("pgm: cannot open " + path.string());
    const std::string magic = next_token(in);
    if (magic != "P5" && magic != "P2")
        throw format_error("pgm: " + path.string() + ": unsupported magic '" + magic + "'");
    const int width = parse_int(next_token(in), path, "width");
    const int height = parse_int(next_token(in), path, "height");
    const int maxval = parse_int(next_token(in), path, "maxval");
    if (maxval != 255)
        throw format_error("pgm: " + path.string() + ": maxval must be 255, got " +
                           std::to_string(maxval));

    Mat img(height, width);
    if (magic == "P5") {
        // The single whitespace after maxval was consumed by next_token.
        std::vector<unsigned char> buf(static_cast<std::size_t>(width) * height);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size())
            throw format_error("pgm: " + path.string() + ": truncated pixel data");
        for (std::size_t i = 0; i < buf.size(); ++i) img.a[i] = buf[i];
    } else {
        for (std::size_t i = 0; i < img.a.size(); ++i) {
            int v;
            if (!(in >> v) || v < 0 || v > 255)
                throw format_error("pgm: " + path.string() + ": bad ASCII pixel at index " +
                                   std::to_string(i));
            img.a[i] = v;
        }
    }
    return img;
}

void save_pgm(const std::filesystem::path& path, const Mat& image, PgmEncoding encoding) {
    if (image.rows < 1 || image.cols < 1) throw domain_error("save_pgm: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("pgm: cannot write " + path.string());
    auto byte_of = [](double v) {
        const long r = std::lround(v);
        return static_cast<unsigned char>(r < 0 ? 0 : (r > 255 ? 255 : r));
    };
    if (encoding == PgmEncoding::binary) {
        out << "P5\n" << image.cols << " " << image.rows << "\n255\n";
        std::vector<unsigned char> buf(image.a.size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = byte_of(image.a[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    } else {
        out << "P2\n" << image.cols << " " << image.rows << "\n255\n";
        for (int r = 0; r < image.rows; ++r) {
            for (int c = 0; c < image.cols; ++c) {
                if (c) out << " ";
                out << static_cast<int>(byte_of(image(r, c)));
            }
            out << "\n";
        }
    }
    if (!out) throw format_error("pgm: write failed for " + path.string());
}

} // namespace optomvm
