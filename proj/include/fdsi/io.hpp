#pragma once

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/record.hpp"

namespace fdsi {

/// Shortest round-trip decimal representation; locale independent.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc())
        throw Error(ErrorCategory::io, "invalid numeric field: '" + text + "'");
    return value;
}

namespace detail {

inline std::string join_bins(const std::vector<std::size_t>& bins) {
    std::string out;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(bins[i]);
    }
    return out;
}

inline std::vector<std::size_t> split_bins(const std::string& text) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(std::stoull(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

}  // namespace detail

/// Record container: text header (inspectable) followed by little-endian
/// float64 payload, channel-major in realization/period/sample order.
/// Round-trips are bit exact.
inline void write_record(const Record& record, const std::filesystem::path& path) {
    record.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "' for writing");

    std::ostringstream header;
    header << "FDSIREC 1\n";
    header << "sample_rate " << format_double(record.sample_rate) << "\n";
    header << "n_samples " << record.n_samples_per_period << "\n";
    header << "n_periods " << record.n_periods << "\n";
    header << "n_realizations " << record.n_realizations << "\n";
    std::string names;
    for (const auto& [name, data] : record.channels) {
        (void)data;
        if (!names.empty()) names += ',';
        names += name;
    }
    header << "channels " << names << "\n";
    header << "grid_kind " << grid_kind_name(record.grid.kind) << "\n";
    header << "grid_group " << record.grid.group_size << " " << record.grid.drops_per_group << "\n";
    header << "grid_channel " << record.grid.channel_index << " " << record.grid.n_channels << "\n";
    header << "grid_band " << record.grid.band_min_bin << " " << record.grid.band_max_bin << "\n";
    header << "grid_seed " << record.grid.seed << "\n";
    header << "excited_bins " << detail::join_bins(record.grid.excited_bins) << "\n";
    header << "detection_bins " << detail::join_bins(record.grid.detection_bins) << "\n";
    header << "config_hash " << record.config_hash << "\n";
    header << "seed " << record.seed << "\n";
    header << "data float64le\n";
    header << "end_header\n";
    out << header.str();

    for (const auto& [name, data] : record.channels) {
        (void)name;
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) throw Error(ErrorCategory::io, "short write to '" + path.string() + "'");
}

inline Record read_record(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "'");

    Record record;
    std::vector<std::string> channel_names;
    std::string line;
    if (!std::getline(in, line) || line != "FDSIREC 1")
        throw Error(ErrorCategory::io, "'" + path.string() + "': not a record file (bad magic)");
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        const auto space = line.find(' ');
        const std::string key = line.substr(0, space);
        const std::string value = space == std::string::npos ? "" : line.substr(space + 1);
        try {
        if (key == "sample_rate") {
            record.sample_rate = parse_double(value);
            record.grid.sample_rate = record.sample_rate;
        } else if (key == "n_samples") {
            record.n_samples_per_period = std::stoull(value);
            record.grid.n_samples = record.n_samples_per_period;
        } else if (key == "n_periods") {
            record.n_periods = std::stoull(value);
        } else if (key == "n_realizations") {
            record.n_realizations = std::stoull(value);
        } else if (key == "channels") {
            std::size_t pos = 0;
            while (pos < value.size()) {
                std::size_t next = value.find(',', pos);
                if (next == std::string::npos) next = value.size();
                channel_names.push_back(value.substr(pos, next - pos));
                pos = next + 1;
            }
        } else if (key == "grid_kind") {
            if (value == "full") record.grid.kind = GridKind::full;
            else if (value == "odd") record.grid.kind = GridKind::odd;
            else if (value == "odd_sparse") record.grid.kind = GridKind::odd_sparse;
            else if (value == "zippered") record.grid.kind = GridKind::zippered;
            else throw Error(ErrorCategory::io, "unknown grid kind '" + value + "'");
        } else if (key == "grid_group") {
            std::istringstream ss(value);
            ss >> record.grid.group_size >> record.grid.drops_per_group;
        } else if (key == "grid_channel") {
            std::istringstream ss(value);
            ss >> record.grid.channel_index >> record.grid.n_channels;
        } else if (key == "grid_band") {
            std::istringstream ss(value);
            ss >> record.grid.band_min_bin >> record.grid.band_max_bin;
        } else if (key == "grid_seed") {
            record.grid.seed = std::stoull(value);
        } else if (key == "excited_bins") {
            record.grid.excited_bins = detail::split_bins(value);
        } else if (key == "detection_bins") {
            record.grid.detection_bins = detail::split_bins(value);
        } else if (key == "config_hash") {
            record.config_hash = std::stoull(value);
        } else if (key == "seed") {
            record.seed = std::stoull(value);
        } else if (key == "data") {
            if (value != "float64le")
                throw Error(ErrorCategory::io, "unsupported data encoding '" + value + "'");
        } else {
            throw Error(ErrorCategory::io, "unknown header field '" + key + "'");
        }
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error(ErrorCategory::io,
                        "'" + path.string() + "': malformed header field '" + key + "'");
        }
    }
    if (line != "end_header")
        throw Error(ErrorCategory::io, "'" + path.string() + "': header not terminated");

    const std::size_t per_channel = record.samples_per_channel();
    const std::streamoff payload_start = in.tellg();
    for (const auto& name : channel_names) {
        std::vector<double> data(per_channel);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(per_channel * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != per_channel * sizeof(double)) {
            const std::streamoff at = payload_start == -1 ? -1 : payload_start;
            throw Error(ErrorCategory::io,
                        "'" + path.string() + "': truncated payload for channel '" + name +
                            "' (expected M*P*N = " + std::to_string(per_channel) +
                            " float64 values starting at byte offset " + std::to_string(at) + ")");
        }
        record.channels[name] = std::move(data);
    }
    try {
        record.validate();
    } catch (const Error& e) {
        throw Error(ErrorCategory::io, "'" + path.string() + "': " + e.what());
    }
    return record;
}

}  // namespace fdsi
