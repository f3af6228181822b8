#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fdsi/io.hpp"
#include "fdsi/pipeline.hpp"

namespace fdsi {

namespace svg {

/// Minimal standalone SVG plot: linear axes, polylines and markers in data
/// coordinates, enough for the four-class distortion view and FRF overlays.
class Plot {
public:
    Plot(double width, double height, std::string title, std::string x_label, std::string y_label)
        : width_(width), height_(height), title_(std::move(title)),
          x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void set_range(double x_min, double x_max, double y_min, double y_max) {
        // degenerate ranges (single-line grids, flat data) get widened so the
        // coordinate mapping stays finite
        if (!(x_max > x_min)) {
            x_min -= 1.0;
            x_max += 1.0;
        }
        if (!(y_max > y_min)) {
            y_min -= 1.0;
            y_max += 1.0;
        }
        x_min_ = x_min;
        x_max_ = x_max;
        y_min_ = y_min;
        y_max_ = y_max;
    }

    void polyline(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& color, double stroke = 1.2) {
        std::string points;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(y[i])) continue;
            points += format_double(px(x[i])) + "," + format_double(py(y[i])) + " ";
        }
        body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                 format_double(stroke) + "\" points=\"" + points + "\"/>\n";
    }

    enum class Marker { dot, bullet, star, cross };

    void scatter(const std::vector<double>& x, const std::vector<double>& y,
                 const std::string& color, Marker marker, double size = 2.2) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(y[i]) || y[i] < y_min_) continue;
            const double cx = px(x[i]), cy = py(y[i]);
            switch (marker) {
                case Marker::dot:
                case Marker::bullet:
                    body_ += "<circle cx=\"" + format_double(cx) + "\" cy=\"" + format_double(cy) +
                             "\" r=\"" + format_double(marker == Marker::dot ? size : size * 1.25) +
                             "\" fill=\"" + color + "\"/>\n";
                    break;
                case Marker::star: {
                    const double s = size * 1.6;
                    body_ += "<path stroke=\"" + color + "\" stroke-width=\"1\" fill=\"none\" d=\"M" +
                             format_double(cx - s) + " " + format_double(cy) + " L" + format_double(cx + s) +
                             " " + format_double(cy) + " M" + format_double(cx) + " " +
                             format_double(cy - s) + " L" + format_double(cx) + " " + format_double(cy + s) +
                             " M" + format_double(cx - 0.7 * s) + " " + format_double(cy - 0.7 * s) + " L" +
                             format_double(cx + 0.7 * s) + " " + format_double(cy + 0.7 * s) + " M" +
                             format_double(cx - 0.7 * s) + " " + format_double(cy + 0.7 * s) + " L" +
                             format_double(cx + 0.7 * s) + " " + format_double(cy - 0.7 * s) + "\"/>\n";
                    break;
                }
                case Marker::cross: {
                    const double s = size * 1.4;
                    body_ += "<path stroke=\"" + color + "\" stroke-width=\"1\" fill=\"none\" d=\"M" +
                             format_double(cx - s) + " " + format_double(cy - s) + " L" +
                             format_double(cx + s) + " " + format_double(cy + s) + " M" +
                             format_double(cx - s) + " " + format_double(cy + s) + " L" +
                             format_double(cx + s) + " " + format_double(cy - s) + "\"/>\n";
                    break;
                }
            }
        }
    }

    void legend_entry(const std::string& color, const std::string& label) {
        const double y = 18.0 + 14.0 * static_cast<double>(legend_count_++);
        body_ += "<rect x=\"" + format_double(width_ - 180.0) + "\" y=\"" + format_double(y - 8.0) +
                 "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
        body_ += "<text x=\"" + format_double(width_ - 165.0) + "\" y=\"" + format_double(y) +
                 "\" font-size=\"11\" font-family=\"sans-serif\">" + label + "</text>\n";
    }

    std::string render() const {
        std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width_) +
               "\" height=\"" + format_double(height_) + "\" viewBox=\"0 0 " + format_double(width_) +
               " " + format_double(height_) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        // frame
        out += "<rect x=\"" + format_double(margin_left_) + "\" y=\"" + format_double(margin_top_) +
               "\" width=\"" + format_double(plot_w()) + "\" height=\"" + format_double(plot_h()) +
               "\" fill=\"none\" stroke=\"black\"/>\n";
        out += "<text x=\"" + format_double(width_ / 2) +
               "\" y=\"14\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" +
               title_ + "</text>\n";
        out += "<text x=\"" + format_double(width_ / 2) + "\" y=\"" + format_double(height_ - 4) +
               "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" + x_label_ +
               "</text>\n";
        out += "<text x=\"12\" y=\"" + format_double(height_ / 2) +
               "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" transform=\"rotate(-90 "
               "12 " + format_double(height_ / 2) + ")\">" + y_label_ + "</text>\n";
        // axis ticks: 5 per axis
        for (int i = 0; i <= 5; ++i) {
            const double fx = x_min_ + (x_max_ - x_min_) * i / 5.0;
            const double fy = y_min_ + (y_max_ - y_min_) * i / 5.0;
            out += "<text x=\"" + format_double(px(fx)) + "\" y=\"" +
                   format_double(margin_top_ + plot_h() + 14.0) +
                   "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" +
                   round_label(fx) + "</text>\n";
            out += "<text x=\"" + format_double(margin_left_ - 6.0) + "\" y=\"" +
                   format_double(py(fy) + 3.0) +
                   "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" +
                   round_label(fy) + "</text>\n";
        }
        out += body_;
        out += "</svg>\n";
        return out;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCategory::io, "cannot write plot '" + path.string() + "'");
        out << render();
    }

private:
    static std::string round_label(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return buf;
    }
    double plot_w() const { return width_ - margin_left_ - margin_right_; }
    double plot_h() const { return height_ - margin_top_ - margin_bottom_; }
    double px(double x) const { return margin_left_ + (x - x_min_) / (x_max_ - x_min_) * plot_w(); }
    double py(double y) const {
        return margin_top_ + (1.0 - (y - y_min_) / (y_max_ - y_min_)) * plot_h();
    }

    double width_, height_;
    std::string title_, x_label_, y_label_;
    double x_min_ = 0.0, x_max_ = 1.0, y_min_ = 0.0, y_max_ = 1.0;
    double margin_left_ = 52.0, margin_right_ = 14.0, margin_top_ = 24.0, margin_bottom_ = 34.0;
    std::string body_;
    int legend_count_ = 0;
};

}  // namespace svg

enum class ReportKind { distortion, frf, fit, closedloop };

inline ReportKind report_kind_from_string(const std::string& s) {
    if (s == "distortion") return ReportKind::distortion;
    if (s == "frf") return ReportKind::frf;
    if (s == "fit") return ReportKind::fit;
    if (s == "closedloop") return ReportKind::closedloop;
    throw Error(ErrorCategory::usage, "unknown report kind '" + s + "'");
}

namespace detail {

// table header shared by every per-bin report; '.' decimal separator, fixed
// column order
inline constexpr const char* kTableHeader =
    "level_index,bin,frequency_hz,class,level_db,noise_floor_db,frf_re,frf_im,var_noise,var_total";

inline void append_table_rows(std::ofstream& out, std::size_t level_index, const LevelResult& level,
                              const FrequencyGrid& grid) {
    const auto& d = level.distortion;
    for (std::size_t k = 0; k < d.level_db.size(); ++k) {
        if (d.bin_class[k] == BinClass::out_of_band) continue;
        out << level_index << ',' << k << ',' << format_double(grid.bin_frequency(k)) << ','
            << bin_class_name(d.bin_class[k]) << ',' << format_double(d.level_db[k]) << ','
            << format_double(d.noise_floor_db[k]);
        const auto idx = level.frf.index_of(k);
        if (idx) {
            out << ',' << format_double(level.frf.g[*idx].real()) << ','
                << format_double(level.frf.g[*idx].imag()) << ','
                << (level.frf.has_var_noise ? format_double(level.frf.var_noise[*idx]) : std::string())
                << ','
                << (level.frf.has_var_total ? format_double(level.frf.var_total[*idx]) : std::string());
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

inline std::vector<double> frequencies_of(const std::vector<std::size_t>& bins,
                                          const FrequencyGrid& grid) {
    std::vector<double> f;
    f.reserve(bins.size());
    for (std::size_t k : bins) f.push_back(grid.bin_frequency(k));
    return f;
}

inline double finite_min(const std::vector<double>& v, double fallback) {
    double out = fallback;
    for (double x : v)
        if (std::isfinite(x) && x > -390.0) out = std::min(out, x);
    return out;
}

inline double finite_max(const std::vector<double>& v, double fallback) {
    double out = fallback;
    for (double x : v)
        if (std::isfinite(x)) out = std::max(out, x);
    return out;
}

inline const char* level_color(std::size_t i) {
    static const char* colors[] = {"#000000", "#c0392b", "#2471a3", "#1e8449",
                                   "#af601a", "#6c3483", "#117864", "#7b241c"};
    return colors[i % 8];
}

}  // namespace detail

/// Emits (a) a delimited numeric table with one row per in-band bin and (b) a
/// standalone SVG plot. Distortion plots follow the four-class colour scheme:
/// black dots excited output, red bullets odd nonlinearities, blue stars even
/// nonlinearities, green line disturbing noise level.
inline void emit_report(const ResultBundle& bundle, ReportKind kind,
                        const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto& grid = bundle.grid;
    if (bundle.levels.empty()) throw Error(ErrorCategory::usage, "emit_report: bundle has no levels");

    const std::string prefix = [&] {
        switch (kind) {
            case ReportKind::distortion: return "distortion";
            case ReportKind::frf: return "frf";
            case ReportKind::fit: return "fit";
            case ReportKind::closedloop: return "closedloop";
        }
        return "report";
    }();

    // reports that need an optional artifact check availability up front
    if (kind == ReportKind::fit)
        for (const auto& level : bundle.levels)
            if (!level.fit)
                throw Error(ErrorCategory::usage,
                            "emit_report: fit not present in bundle (available kinds: distortion, frf" +
                                std::string(bundle.levels.front().closed_loop ? ", closedloop" : "") + ")");
    if (kind == ReportKind::closedloop)
        for (const auto& level : bundle.levels)
            if (!level.closed_loop)
                throw Error(ErrorCategory::usage,
                            "emit_report: closedloop outputs not present in bundle (available kinds: "
                            "distortion, frf" +
                                std::string(bundle.levels.front().fit ? ", fit" : "") + ")");

    // --- table ---
    std::ofstream table(out_dir / (prefix + ".csv"), std::ios::binary);
    if (!table) throw Error(ErrorCategory::io, "cannot write report table");
    table << detail::kTableHeader << '\n';
    for (std::size_t i = 0; i < bundle.levels.size(); ++i)
        detail::append_table_rows(table, i, bundle.levels[i], grid);
    table.close();

    const double f_lo = grid.bin_frequency(grid.band_min_bin);
    const double f_hi = grid.bin_frequency(grid.band_max_bin);

    // --- plots ---
    switch (kind) {
        case ReportKind::distortion: {
            for (std::size_t i = 0; i < bundle.levels.size(); ++i) {
                const auto& d = bundle.levels[i].distortion;
                std::vector<double> fx_e, fy_e, fx_o, fy_o, fx_v, fy_v, fx_n, fy_n;
                for (std::size_t k = 0; k < d.level_db.size(); ++k) {
                    switch (d.bin_class[k]) {
                        case BinClass::excited:
                            fx_e.push_back(grid.bin_frequency(k));
                            fy_e.push_back(d.level_db[k]);
                            break;
                        case BinClass::odd_detection:
                            fx_o.push_back(grid.bin_frequency(k));
                            fy_o.push_back(d.level_db[k]);
                            break;
                        case BinClass::even_detection:
                            fx_v.push_back(grid.bin_frequency(k));
                            fy_v.push_back(d.level_db[k]);
                            break;
                        case BinClass::out_of_band: break;
                    }
                    if (d.has_noise_floor && grid.in_band(k) && d.noise_floor_db[k] > -390.0) {
                        fx_n.push_back(grid.bin_frequency(k));
                        fy_n.push_back(d.noise_floor_db[k]);
                    }
                }
                const double hi = detail::finite_max(d.level_db, 0.0) + 10.0;
                double lo = detail::finite_min(d.level_db, hi - 60.0) - 10.0;
                lo = std::max(lo, hi - 180.0);
                svg::Plot plot(640, 420, "Output spectrum and distortion classes, level " +
                                             std::to_string(i), "frequency [Hz]", "level [dB]");
                plot.set_range(f_lo, f_hi, lo, hi);
                plot.scatter(fx_e, fy_e, "black", svg::Plot::Marker::dot);
                plot.scatter(fx_o, fy_o, "red", svg::Plot::Marker::bullet);
                plot.scatter(fx_v, fy_v, "blue", svg::Plot::Marker::star);
                if (!fx_n.empty()) plot.polyline(fx_n, fy_n, "green", 1.5);
                plot.legend_entry("black", "excited output");
                plot.legend_entry("red", "odd nonlinearities");
                plot.legend_entry("blue", "even nonlinearities");
                plot.legend_entry("green", "noise level");
                plot.save(out_dir / (prefix + "_level" + std::to_string(i) + ".svg"));
            }
            break;
        }
        case ReportKind::frf: {
            svg::Plot plot(640, 420, "FRF magnitude per excitation level", "frequency [Hz]",
                           "|G| [dB]");
            double lo = 1e300, hi = -1e300;
            std::vector<std::vector<double>> mags;
            for (const auto& level : bundle.levels) {
                std::vector<double> mag;
                for (const auto& g : level.frf.g) mag.push_back(amplitude_db(std::abs(g)));
                lo = std::min(lo, detail::finite_min(mag, 0.0));
                hi = std::max(hi, detail::finite_max(mag, 0.0));
                mags.push_back(std::move(mag));
            }
            plot.set_range(f_lo, f_hi, lo - 5.0, hi + 5.0);
            for (std::size_t i = 0; i < bundle.levels.size(); ++i) {
                plot.polyline(detail::frequencies_of(bundle.levels[i].frf.bins, grid), mags[i],
                              detail::level_color(i));
                plot.legend_entry(detail::level_color(i),
                                  "rms " + std::to_string(bundle.levels[i].rms));
            }
            plot.save(out_dir / (prefix + ".svg"));
            break;
        }
        case ReportKind::fit: {
            svg::Plot plot(640, 420, "Measured FRF vs parametric fit", "frequency [Hz]", "|G| [dB]");
            double lo = 1e300, hi = -1e300;
            std::vector<std::vector<double>> meas, fitted;
            for (const auto& level : bundle.levels) {
                std::vector<double> m, f;
                for (std::size_t i = 0; i < level.frf.bins.size(); ++i) {
                    m.push_back(amplitude_db(std::abs(level.frf.g[i])));
                    f.push_back(amplitude_db(
                        std::abs(level.fit->model.response_at_bin(level.frf.bins[i], grid.n_samples))));
                }
                lo = std::min({lo, detail::finite_min(m, 0.0), detail::finite_min(f, 0.0)});
                hi = std::max({hi, detail::finite_max(m, 0.0), detail::finite_max(f, 0.0)});
                meas.push_back(std::move(m));
                fitted.push_back(std::move(f));
            }
            plot.set_range(f_lo, f_hi, lo - 5.0, hi + 5.0);
            for (std::size_t i = 0; i < bundle.levels.size(); ++i) {
                const auto freq = detail::frequencies_of(bundle.levels[i].frf.bins, grid);
                plot.scatter(freq, meas[i], detail::level_color(i), svg::Plot::Marker::dot, 1.6);
                plot.polyline(freq, fitted[i], detail::level_color(i));
            }
            plot.legend_entry("black", "dots: measured / line: fit");
            plot.save(out_dir / (prefix + ".svg"));
            break;
        }
        case ReportKind::closedloop: {
            svg::Plot plot(640, 420, "Indirect BLA estimate", "frequency [Hz]", "|G| [dB]");
            double lo = 1e300, hi = -1e300;
            std::vector<std::vector<double>> mags;
            for (const auto& level : bundle.levels) {
                std::vector<double> mag;
                for (const auto& g : level.closed_loop->indirect.g_bla)
                    mag.push_back(amplitude_db(std::abs(g)));
                lo = std::min(lo, detail::finite_min(mag, 0.0));
                hi = std::max(hi, detail::finite_max(mag, 0.0));
                mags.push_back(std::move(mag));
            }
            plot.set_range(f_lo, f_hi, lo - 5.0, hi + 5.0);
            for (std::size_t i = 0; i < bundle.levels.size(); ++i) {
                plot.polyline(detail::frequencies_of(bundle.levels[i].closed_loop->indirect.bins, grid),
                              mags[i], detail::level_color(i));
                plot.legend_entry(detail::level_color(i),
                                  "rms " + std::to_string(bundle.levels[i].rms));
            }
            plot.save(out_dir / (prefix + ".svg"));
            break;
        }
    }
}

}  // namespace fdsi
