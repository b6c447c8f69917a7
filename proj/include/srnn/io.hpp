#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "srnn/dataset.hpp"
#include "srnn/error.hpp"
#include "srnn/matrix.hpp"

namespace srnn {

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError(path, 0, "cannot open file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

// Shortest text that reads back to the same double; identical on every IEEE platform.
inline std::string format_number(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::vector<std::string_view> split_line(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = line.find(sep, start);
        out.push_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_field(std::string_view field, const std::string& path, std::size_t line) {
    field = trim(field);
    T value{};
    const auto r = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || r.ec != std::errc{} || r.ptr != field.data() + field.size())
        throw ParseError(path, line, "malformed value '" + std::string(field) + "'");
    return value;
}

inline std::vector<std::string_view> lines_of(const std::string& text) {
    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        const std::size_t nl = rest.find('\n');
        lines.push_back(rest.substr(0, nl));
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    return lines;
}

}  // namespace detail

// One row per timestep, one comma-separated column per channel. Expected sizes of 0
// mean "take them from the file".
inline Matrix read_dense_csv(const std::string& path, std::size_t steps = 0, std::size_t channels = 0) {
    const std::string text = detail::read_file(path);
    std::vector<std::vector<double>> rows;
    const auto lines = detail::lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = detail::trim(lines[i]);
        if (line.empty()) {
            if (i + 1 == lines.size()) break;
            throw ParseError(path, i + 1, "empty row");
        }
        std::vector<double> row;
        for (auto field : detail::split_line(line)) row.push_back(detail::parse_field<double>(field, path, i + 1));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path, i + 1, "row has " + std::to_string(row.size()) + " values, expected " +
                                              std::to_string(rows.front().size()));
        if (channels && row.size() != channels)
            throw ParseError(path, i + 1, "row has " + std::to_string(row.size()) + " values, expected " +
                                              std::to_string(channels));
        rows.push_back(std::move(row));
    }
    if (steps && rows.size() != steps)
        throw ParseError(path, 0, "has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(steps));
    Matrix m(rows.size(), rows.empty() ? channels : rows.front().size());
    for (std::size_t t = 0; t < rows.size(); ++t) std::copy(rows[t].begin(), rows[t].end(), m.row(t).begin());
    return m;
}

inline std::string dense_csv(const Matrix& m) {
    std::string out;
    for (std::size_t t = 0; t < m.rows(); ++t) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += detail::format_number(m(t, c));
        }
        out += '\n';
    }
    return out;
}

inline void write_dense_csv(const std::string& path, const Matrix& m) { detail::write_file(path, dense_csv(m)); }

// Header "t,channel", then one event per row.
inline Matrix read_event_csv(const std::string& path, std::size_t steps, std::size_t channels) {
    const std::string text = detail::read_file(path);
    const auto lines = detail::lines_of(text);
    if (lines.empty() || detail::trim(lines[0]) != "t,channel") throw ParseError(path, 1, "expected header 't,channel'");
    Matrix m(steps, channels);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = detail::trim(lines[i]);
        if (line.empty()) {
            if (i + 1 == lines.size()) break;
            throw ParseError(path, i + 1, "empty row");
        }
        const auto fields = detail::split_line(line);
        if (fields.size() != 2) throw ParseError(path, i + 1, "expected 2 fields, got " + std::to_string(fields.size()));
        const auto t = detail::parse_field<long long>(fields[0], path, i + 1);
        const auto c = detail::parse_field<long long>(fields[1], path, i + 1);
        if (t < 0 || static_cast<std::size_t>(t) >= steps)
            throw ParseError(path, i + 1, "time " + std::to_string(t) + " outside [0, " + std::to_string(steps) + ")");
        if (c < 0 || static_cast<std::size_t>(c) >= channels)
            throw ParseError(path, i + 1, "channel " + std::to_string(c) + " outside [0, " + std::to_string(channels) + ")");
        m(static_cast<std::size_t>(t), static_cast<std::size_t>(c)) = 1;
    }
    return m;
}

inline std::string event_csv(const Matrix& raster) {
    std::string out = "t,channel\n";
    for (std::size_t t = 0; t < raster.rows(); ++t)
        for (std::size_t c = 0; c < raster.cols(); ++c) {
            const double v = raster(t, c);
            if (v != 0 && v != 1) throw std::invalid_argument("event_csv: raster entry is not 0/1");
            if (v == 1) out += std::to_string(t) + "," + std::to_string(c) + "\n";
        }
    return out;
}

inline void write_event_csv(const std::string& path, const Matrix& raster) { detail::write_file(path, event_csv(raster)); }

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be32(const std::string& bytes, std::size_t at, const std::string& path) {
    if (at + 4 > bytes.size()) throw ParseError(path, 0, "truncated header");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
    return v;
}

inline void append_be32(std::string& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out += static_cast<char>((v >> shift) & 0xff);
}

}  // namespace detail

// MNIST-style IDX pair. Each image is read row by row as a one-channel sequence of
// rows*cols steps with intensities scaled to [0, 1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit = 0) {
    const std::string img = detail::read_file(images_path);
    const std::string lab = detail::read_file(labels_path);
    if (detail::read_be32(img, 0, images_path) != kIdxImageMagic)
        throw ParseError(images_path, 0, "bad magic number, expected 0x00000803");
    if (detail::read_be32(lab, 0, labels_path) != kIdxLabelMagic)
        throw ParseError(labels_path, 0, "bad magic number, expected 0x00000801");
    const std::size_t count = detail::read_be32(img, 4, images_path);
    const std::size_t rows = detail::read_be32(img, 8, images_path);
    const std::size_t cols = detail::read_be32(img, 12, images_path);
    const std::size_t label_count = detail::read_be32(lab, 4, labels_path);
    if (label_count != count)
        throw ParseError(labels_path, 0, std::to_string(label_count) + " labels for " + std::to_string(count) + " images");
    if (img.size() != 16 + count * rows * cols) throw ParseError(images_path, 0, "file size does not match header");
    if (lab.size() != 8 + count) throw ParseError(labels_path, 0, "file size does not match header");
    const std::size_t n = limit ? std::min(limit, count) : count;
    Dataset d{TaskKind::sequence_classification, rows * cols, 1, 10, {}};
    for (std::size_t i = 0; i < n; ++i) {
        Sample s{Matrix(rows * cols, 1), {}};
        for (std::size_t p = 0; p < rows * cols; ++p)
            s.input(p, 0) = static_cast<unsigned char>(img[16 + i * rows * cols + p]) / 255.0;
        s.target.label = static_cast<unsigned char>(lab[8 + i]);
        if (s.target.label >= 10) throw ParseError(labels_path, 0, "label " + std::to_string(s.target.label) + " >= 10");
        d.samples.push_back(std::move(s));
    }
    return d;
}

inline void write_idx(const std::string& images_path, const std::string& labels_path,
                      const std::vector<std::vector<std::uint8_t>>& images, std::size_t rows, std::size_t cols,
                      const std::vector<std::uint8_t>& labels) {
    require_shape(images.size() == labels.size(), "write_idx: image/label count mismatch");
    std::string img, lab;
    detail::append_be32(img, kIdxImageMagic);
    detail::append_be32(img, static_cast<std::uint32_t>(images.size()));
    detail::append_be32(img, static_cast<std::uint32_t>(rows));
    detail::append_be32(img, static_cast<std::uint32_t>(cols));
    for (const auto& im : images) {
        require_shape(im.size() == rows * cols, "write_idx: image size mismatch");
        img.append(im.begin(), im.end());
    }
    detail::append_be32(lab, kIdxLabelMagic);
    detail::append_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.append(labels.begin(), labels.end());
    detail::write_file(images_path, img);
    detail::write_file(labels_path, lab);
}

inline constexpr const char* kDatasetFormat = "srnn-dataset/1";

enum class SampleEncoding { dense, events };

// Writes <dir>/manifest.json and one CSV per sample under <dir>/samples/.
inline void save_dataset(const std::string& dir, const Dataset& d, SampleEncoding encoding) {
    validate(d);
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "samples");
    nlohmann::ordered_json manifest;
    manifest["format"] = kDatasetFormat;
    manifest["kind"] = to_string(d.kind);
    manifest["steps"] = d.steps;
    manifest["channels"] = d.channels;
    manifest["classes"] = d.classes;
    manifest["encoding"] = encoding == SampleEncoding::events ? "events" : "dense";
    auto& samples = manifest["samples"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < d.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "samples/%06zu.csv", i);
        const auto& s = d.samples[i];
        detail::write_file((fs::path(dir) / name).string(),
                           encoding == SampleEncoding::events ? event_csv(s.input) : dense_csv(s.input));
        nlohmann::ordered_json entry;
        entry["file"] = name;
        if (d.kind == TaskKind::streaming)
            entry["step_labels"] = s.target.step_labels;
        else
            entry["label"] = s.target.label;
        samples.push_back(std::move(entry));
    }
    detail::write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(1) + "\n");
}

inline Dataset load_dataset(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(detail::read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(manifest_path, 0, e.what());
    }
    try {
        if (m.at("format").get<std::string>() != kDatasetFormat)
            throw ParseError(manifest_path, 0, "format must be '" + std::string(kDatasetFormat) + "'");
        Dataset d;
        const std::string kind = m.at("kind").get<std::string>();
        if (kind == "streaming")
            d.kind = TaskKind::streaming;
        else if (kind == "sequence-classification")
            d.kind = TaskKind::sequence_classification;
        else
            throw ParseError(manifest_path, 0, "unknown kind '" + kind + "'");
        d.steps = m.at("steps").get<std::size_t>();
        d.channels = m.at("channels").get<std::size_t>();
        d.classes = m.at("classes").get<std::size_t>();
        const std::string encoding = m.at("encoding").get<std::string>();
        if (encoding != "dense" && encoding != "events")
            throw ParseError(manifest_path, 0, "unknown encoding '" + encoding + "'");
        const fs::path base = fs::path(manifest_path).parent_path();
        for (const auto& entry : m.at("samples")) {
            const std::string file = (base / entry.at("file").get<std::string>()).string();
            Sample s;
            s.input = encoding == "events" ? read_event_csv(file, d.steps, d.channels)
                                           : read_dense_csv(file, d.steps, d.channels);
            if (d.kind == TaskKind::streaming)
                s.target.step_labels = entry.at("step_labels").get<std::vector<int>>();
            else
                s.target.label = entry.at("label").get<int>();
            d.samples.push_back(std::move(s));
        }
        validate(d);
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(manifest_path, 0, e.what());
    } catch (const ShapeError& e) {
        throw ParseError(manifest_path, 0, e.what());
    }
}

}  // namespace srnn
