#include "bowg/features.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bowg {

namespace {

constexpr std::string_view k_magic = "BOWG-FEAT";
constexpr std::string_view k_version = "v1";

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void fail(const std::string& origin, std::size_t line_no, const std::string& what) {
    throw parse_error(fmt::format("{}:{}: {}", origin, line_no, what));
}

double parse_double(std::string_view tok, const std::string& origin, std::size_t line_no) {
    char* end = nullptr;
    const std::string s(tok);
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) fail(origin, line_no, fmt::format("bad number '{}'", s));
    return v;
}

long long parse_int(std::string_view tok, const std::string& origin, std::size_t line_no) {
    char* end = nullptr;
    const std::string s(tok);
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) fail(origin, line_no, fmt::format("bad integer '{}'", s));
    return v;
}

}  // namespace

std::vector<frame_features> parse_features(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) fail(origin, 1, "empty file, expected header");
    ++line_no;
    const auto head = split_ws(line);
    if (head.size() != 3 || head[0] != k_magic || head[1] != k_version)
        fail(origin, line_no, "expected header 'BOWG-FEAT v1 <descriptor_bits>'");
    const long long bits = parse_int(head[2], origin, line_no);
    if (bits <= 0 || bits % 8 != 0) fail(origin, line_no, fmt::format("descriptor width {} is not a positive multiple of 8", bits));
    const std::size_t hex_len = static_cast<std::size_t>(bits) / 4;

    std::vector<frame_features> frames;
    long long prev_id = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] != "frame" || tok.size() != 6)
            fail(origin, line_no, "expected 'frame <id> <timestamp> <width> <height> <n>'");

        frame_features f;
        const long long id = parse_int(tok[1], origin, line_no);
        if (id <= prev_id) fail(origin, line_no, fmt::format("frame id {} not strictly increasing", id));
        prev_id = id;
        f.frame_id = static_cast<frame_id_t>(id);
        f.timestamp = parse_double(tok[2], origin, line_no);
        f.width = static_cast<int>(parse_int(tok[3], origin, line_no));
        f.height = static_cast<int>(parse_int(tok[4], origin, line_no));
        const long long n = parse_int(tok[5], origin, line_no);
        if (n < 0) fail(origin, line_no, "negative feature count");

        f.keypoints.reserve(static_cast<std::size_t>(n));
        f.descriptors.reserve(static_cast<std::size_t>(n));
        for (long long i = 0; i < n; ++i) {
            if (!std::getline(in, line)) fail(origin, line_no + 1, "unexpected end of file inside frame");
            ++line_no;
            auto ft = split_ws(line);
            if (ft.size() != 6) fail(origin, line_no, "expected '<x> <y> <size> <angle|-> <octave> <hex>'");
            keypoint kp;
            kp.x = parse_double(ft[0], origin, line_no);
            kp.y = parse_double(ft[1], origin, line_no);
            kp.size = parse_double(ft[2], origin, line_no);
            if (kp.size <= 0) fail(origin, line_no, "keypoint size must be > 0");
            if (ft[3] != "-") kp.angle = parse_double(ft[3], origin, line_no);
            kp.octave = static_cast<int>(parse_int(ft[4], origin, line_no));
            if (ft[5].size() != hex_len)
                fail(origin, line_no,
                     fmt::format("descriptor width mismatch: got {} hex chars, header says {}", ft[5].size(), hex_len));
            binary_descriptor d;
            try {
                d = binary_descriptor::from_hex(ft[5]);
            } catch (const parse_error& e) {
                fail(origin, line_no, e.what());
            }
            f.keypoints.push_back(kp);
            f.descriptors.push_back(std::move(d));
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<frame_features> load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error(fmt::format("cannot open features file '{}'", path.string()));
    return parse_features(in, path.filename().string());
}

std::string serialize_features(std::span<const frame_features> frames, unsigned descriptor_bits) {
    std::string out = fmt::format("{} {} {}\n", k_magic, k_version, descriptor_bits);
    for (const auto& f : frames) {
        out += fmt::format("frame {} {} {} {} {}\n", f.frame_id, f.timestamp, f.width, f.height, f.keypoints.size());
        for (std::size_t i = 0; i < f.keypoints.size(); ++i) {
            const auto& kp = f.keypoints[i];
            const std::string angle = kp.angle ? fmt::format("{}", *kp.angle) : "-";
            out += fmt::format("{} {} {} {} {} {}\n", kp.x, kp.y, kp.size, angle, kp.octave,
                               f.descriptors[i].to_hex());
        }
    }
    return out;
}

void save_features(const std::filesystem::path& path, std::span<const frame_features> frames,
                   unsigned descriptor_bits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(fmt::format("cannot open '{}' for writing", path.string()));
    out << serialize_features(frames, descriptor_bits);
    if (!out) throw io_error(fmt::format("write failed on '{}'", path.string()));
}

image_u8 load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot open image '{}'", path.string()));

    auto next_token = [&in, &path]() {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {  // comment to end of line
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
        if (tok.empty()) throw parse_error(fmt::format("{}: truncated PGM header", path.string()));
        return tok;
    };

    if (next_token() != "P5") throw parse_error(fmt::format("{}: not a binary PGM (P5)", path.string()));
    image_u8 img;
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255)
        throw parse_error(fmt::format("{}: unsupported PGM dimensions or maxval", path.string()));

    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw parse_error(fmt::format("{}: truncated PGM pixel data", path.string()));
    return img;
}

void save_pgm(const std::filesystem::path& path, const image_u8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(fmt::format("cannot open '{}' for writing", path.string()));
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace bowg
