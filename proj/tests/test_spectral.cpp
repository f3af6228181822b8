#include <doctest.h>

#include <fdsi/bla.hpp>
#include <fdsi/fft.hpp>
#include <fdsi/record.hpp>
#include <fdsi/spectral.hpp>

using namespace fdsi;

namespace {

Record make_record(const FrequencyGrid& grid, std::size_t periods, std::size_t realizations,
                   const std::vector<double>& u, const std::vector<double>& y) {
    Record r;
    r.sample_rate = grid.sample_rate;
    r.n_samples_per_period = grid.n_samples;
    r.n_periods = periods;
    r.n_realizations = realizations;
    r.grid = grid;
    r.channels["u"] = u;
    r.channels["y"] = y;
    r.validate();
    return r;
}

std::vector<double> tile(const std::vector<double>& x, std::size_t count) {
    std::vector<double> out;
    out.reserve(x.size() * count);
    for (std::size_t i = 0; i < count; ++i) out.insert(out.end(), x.begin(), x.end());
    return out;
}

}  // namespace

TEST_CASE("period DFTs: tone support, repeatability, parseval") {
    const std::size_t n = 128;
    const auto grid = build_grid(128.0, n, 6.5, 7.5, GridKind::full, 0);
    std::vector<double> period(n);
    for (std::size_t t = 0; t < n; ++t) period[t] = std::cos(2.0 * kPi * 7.0 * t / n);
    const auto record = make_record(grid, 3, 1, tile(period, 3), tile(period, 3));
    const auto set = period_dfts(record);

    for (std::size_t p = 0; p < 3; ++p) {
        const auto& spec = set.spectrum("y", 0, p);
        for (std::size_t k = 0; k < spec.size(); ++k) {
            if (k == 7)
                CHECK(std::abs(spec[k]) == doctest::Approx(n / 2.0).epsilon(1e-12));
            else
                CHECK(std::abs(spec[k]) < 1e-9);
        }
        // identical periods give identical spectra
        CHECK(spec == set.spectrum("y", 0, 0));
    }
    // parseval: time power equals spectral power under the stated convention
    double tp = 0.0;
    for (double v : period) tp += v * v;
    tp /= n;
    const auto& spec = set.spectrum("y", 0, 0);
    double sp = std::norm(spec[0]) + std::norm(spec[n / 2]);
    for (std::size_t k = 1; k < n / 2; ++k) sp += 2.0 * std::norm(spec[k]);
    sp /= static_cast<double>(n) * n;
    CHECK(tp == doctest::Approx(sp).epsilon(1e-10));
}

TEST_CASE("line statistics") {
    const std::size_t n = 64;
    const auto grid = build_grid(64.0, n, 4.5, 5.5, GridKind::full, 0);
    std::vector<double> period(n);
    for (std::size_t t = 0; t < n; ++t) period[t] = std::sin(2.0 * kPi * 5.0 * t / n);

    SUBCASE("identical periods have zero variance") {
        const auto record = make_record(grid, 4, 1, tile(period, 4), tile(period, 4));
        const auto avg = pooled_line_statistics(period_dfts(record));
        REQUIRE(avg.has_variances);
        for (std::size_t k = 0; k < avg.n_bins(); ++k) {
            CHECK(avg.var_u[k] == doctest::Approx(0.0).scale(1.0));
            CHECK(avg.var_y[k] == doctest::Approx(0.0).scale(1.0));
        }
    }

    SUBCASE("single period: variances marked absent") {
        const auto record = make_record(grid, 1, 1, period, period);
        const auto avg = pooled_line_statistics(period_dfts(record));
        CHECK(!avg.has_variances);
    }

    SUBCASE("white noise variance matches N*sigma^2 within 5%") {
        const double sigma = 0.3;
        const std::size_t periods = 10000;
        Rng rng(2024);
        std::vector<double> y(n * periods);
        for (auto& v : y) v = period[0];  // overwritten below
        for (std::size_t p = 0; p < periods; ++p)
            for (std::size_t t = 0; t < n; ++t) y[p * n + t] = period[t] + rng.normal(sigma);
        const auto record = make_record(grid, periods, 1, tile(period, periods), y);
        const auto avg = pooled_line_statistics(period_dfts(record));
        const double expected = n * sigma * sigma;
        double mean_var = 0.0;
        for (std::size_t k = 1; k < n / 2; ++k) mean_var += avg.var_y[k];
        mean_var /= (n / 2.0 - 1.0);
        CHECK(mean_var == doctest::Approx(expected).epsilon(0.05));
        // variance of the mean is var/P
        CHECK(avg.n_averages == periods);
    }

    SUBCASE("covariance of independent noise channels shrinks as 3 sigma bound") {
        const double sigma = 1.0;
        const std::size_t periods = 4096;
        Rng rng(7);
        std::vector<double> u(n * periods), y(n * periods);
        for (auto& v : u) v = rng.normal(sigma);
        for (auto& v : y) v = rng.normal(sigma);
        const auto record = make_record(grid, periods, 1, u, y);
        const auto avg = pooled_line_statistics(period_dfts(record));
        // |covar| of independent channels: mean 0, std ~ N*sigma^2/sqrt(P)
        const double bound = 3.0 * n * sigma * sigma / std::sqrt(static_cast<double>(periods));
        std::size_t inside = 0, total = 0;
        for (std::size_t k = 1; k < n / 2; ++k) {
            ++total;
            if (std::abs(avg.covar_yu[k]) < bound) ++inside;
        }
        CHECK(static_cast<double>(inside) / total > 0.95);
    }

    SUBCASE("cauchy-schwarz: |covar|^2 <= var_u * var_y") {
        Rng rng(123);
        const std::size_t periods = 16;
        std::vector<double> u(n * periods), y(n * periods);
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = rng.normal();
            y[i] = 0.7 * u[i] + 0.5 * rng.normal();  // correlated channels
        }
        const auto record = make_record(grid, periods, 1, u, y);
        const auto avg = pooled_line_statistics(period_dfts(record));
        for (std::size_t k = 0; k < avg.n_bins(); ++k)
            CHECK(std::norm(avg.covar_yu[k]) <= avg.var_u[k] * avg.var_y[k] * (1.0 + 1e-12));
    }

    SUBCASE("matches a naive two-pass reference bit for bit") {
        Rng rng(99);
        const std::size_t periods = 8;
        std::vector<double> u(n * periods), y(n * periods);
        for (auto& v : u) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        const auto record = make_record(grid, periods, 1, u, y);
        const auto set = period_dfts(record);
        const auto avg = pooled_line_statistics(set);
        // naive reference
        for (std::size_t k = 0; k < avg.n_bins(); ++k) {
            cdouble mu(0.0, 0.0);
            for (std::size_t p = 0; p < periods; ++p) mu += set.spectrum("y", 0, p)[k];
            mu /= static_cast<double>(periods);
            double var = 0.0;
            for (std::size_t p = 0; p < periods; ++p) var += std::norm(set.spectrum("y", 0, p)[k] - mu);
            var /= static_cast<double>(periods - 1);
            CHECK(avg.mean_y[k] == mu);
            CHECK(avg.var_y[k] == var);
        }
    }
}

TEST_CASE("distortion classification") {
    const double fs = 1000.0;
    const std::size_t n = 512;
    const auto grid = build_grid(fs, n, 10.0, 150.0, GridKind::odd_sparse, 77,
                                 {.group_size = 5, .drops_per_group = 1});
    const auto ms = synthesize_multisine(grid, 1.0, 3);

    auto analyze = [&](const StaticPolynomial& poly) {
        const auto record = steady_state_record(Plant{poly}, ms,
                                                {.periods_discard = 0, .periods_keep = 2, .realizations = 2},
                                                NoiseSpec{}, 5);
        const auto stats = per_realization_line_statistics(period_dfts(record));
        return classify_distortions(stats, grid);
    };

    SUBCASE("squarer: even detection hot, odd detection at numerical zero") {
        const auto report = analyze(StaticPolynomial::power(2));
        CHECK(report.even_detection_level_db > report.odd_detection_level_db + 180.0);
        for (std::size_t k : grid.detection_bins)
            CHECK(report.level_db[k] < report.even_detection_level_db - 180.0);
    }

    SUBCASE("cuber: odd detection hot, even bins at numerical zero") {
        const auto report = analyze(StaticPolynomial::power(3));
        CHECK(report.odd_detection_level_db > report.even_detection_level_db + 180.0);
    }

    SUBCASE("linear plant: detection lines at the (zero) noise floor") {
        const auto report = analyze(StaticPolynomial::identity());
        // no power transfer across bins: every detection level is numerically nil
        const double excited = report.excited_level_db;
        CHECK(report.odd_detection_level_db < excited - 180.0);
        CHECK(report.even_detection_level_db < excited - 180.0);
    }

    SUBCASE("classification derives from the grid only") {
        const auto report = analyze(StaticPolynomial::power(2));
        for (std::size_t k : grid.excited_bins) CHECK(report.bin_class[k] == BinClass::excited);
        for (std::size_t k : grid.detection_bins) CHECK(report.bin_class[k] == BinClass::odd_detection);
        for (std::size_t k : grid.even_detection_bins())
            CHECK(report.bin_class[k] == BinClass::even_detection);
    }
}

TEST_CASE("frf estimation") {
    const double fs = 1000.0;
    const std::size_t n = 512;
    const auto grid = build_grid(fs, n, 10.0, 200.0, GridKind::odd, 31);
    const auto ms = synthesize_multisine(grid, 1.0, 8);
    const LtiFilter plant({0.3, 0.15}, {1.0, -0.8, 0.3});

    SUBCASE("noise-free periodic division recovers G to 1e-10") {
        const auto record = steady_state_record(Plant{plant}, ms,
                                                {.periods_discard = 2, .periods_keep = 2, .realizations = 1},
                                                NoiseSpec{}, 6);
        const auto est = estimate_frf(pooled_line_statistics(period_dfts(record)), grid);
        REQUIRE(est.bins.size() == grid.excited_bins.size());
        for (std::size_t i = 0; i < est.bins.size(); ++i) {
            const cdouble expected = plant.response_at_bin(est.bins[i], n);
            CHECK(std::abs(est.g[i] - expected) <= 1e-10 * std::abs(expected));
        }
    }

    SUBCASE("cross-spectral mode on random input through identity") {
        // random (non-periodic) excitation, identity plant: G ~ 1 everywhere
        const std::size_t blocks = 64;
        Rng rng(11);
        std::vector<double> u(n * blocks);
        for (auto& v : u) v = rng.normal();
        Record record;
        record.sample_rate = fs;
        record.n_samples_per_period = n;
        record.n_periods = blocks;
        record.n_realizations = 1;
        record.grid = grid;
        record.channels["u"] = u;
        record.channels["y"] = u;
        record.validate();
        const auto est = estimate_frf_cross_spectral(period_dfts(record));
        for (std::size_t i = 0; i < est.bins.size(); ++i)
            CHECK(std::abs(est.g[i] - cdouble(1.0, 0.0)) < 1e-9);
        // averaged S_UU dips: with P=64 averages, 95% of bins within 1 dB of
        // the flat expectation
        cvector spec_acc(n / 2 + 1, cdouble(0.0, 0.0));
        std::vector<double> s_uu(n / 2 + 1, 0.0);
        for (std::size_t p = 0; p < blocks; ++p) {
            const auto spec = rfft(std::vector<double>(u.begin() + p * n, u.begin() + (p + 1) * n));
            for (std::size_t k = 0; k < spec.size(); ++k) s_uu[k] += std::norm(spec[k]) / blocks;
        }
        const double expected = static_cast<double>(n);  // E|U(k)|^2 = N sigma^2
        std::size_t within = 0, total = 0;
        for (std::size_t k = 1; k < n / 2; ++k) {
            ++total;
            if (s_uu[k] > expected * std::pow(10.0, -1.0 / 10.0)) ++within;  // no dip deeper than 1 dB
        }
        CHECK(static_cast<double>(within) / total >= 0.95);
    }

    SUBCASE("dip guard flags a killed line") {
        auto profile = flat_profile(grid);
        profile[grid.excited_bins[3]] = 1e-9;  // bury one line far below the median
        const auto weak = synthesize_multisine(grid, profile, 1.0, 8);
        const auto record = steady_state_record(Plant{plant}, weak,
                                                {.periods_discard = 2, .periods_keep = 1, .realizations = 1},
                                                NoiseSpec{}, 6);
        FrfOptions opts;
        opts.dip_floor_relative = 1e-6;
        const auto est = estimate_frf(pooled_line_statistics(period_dfts(record)), grid, opts);
        CHECK(std::find(est.flagged_bins.begin(), est.flagged_bins.end(), grid.excited_bins[3]) !=
              est.flagged_bins.end());
        CHECK(!est.index_of(grid.excited_bins[3]).has_value());
    }
}

TEST_CASE("robust method") {
    const double fs = 1000.0;
    const std::size_t n = 256;
    const auto grid = build_grid(fs, n, 20.0, 100.0, GridKind::odd, 3);
    const auto ms = synthesize_multisine(grid, 1.0, 17);
    const LtiFilter plant({0.6, -0.1}, {1.0, -0.4});

    SUBCASE("LTI plant with noise: total variance tracks noise variance") {
        const std::size_t m_count = 64;
        const auto record = steady_state_record(
            Plant{plant}, ms, {.periods_discard = 1, .periods_keep = 4, .realizations = m_count},
            NoiseSpec{.std_dev = 0.02, .seed = 3}, 12);
        const auto est = robust_method(record);
        REQUIRE(est.has_var_noise);
        REQUIRE(est.has_var_total);
        std::size_t within = 0;
        for (std::size_t i = 0; i < est.bins.size(); ++i) {
            const double ratio = est.var_total[i] / est.var_noise[i];
            if (ratio > 0.5 && ratio < 2.0) ++within;
        }
        CHECK(static_cast<double>(within) / est.bins.size() >= 0.9);
    }

    SUBCASE("M = 1 keeps the noise variance and marks total absent") {
        const auto record = steady_state_record(Plant{plant}, ms,
                                                {.periods_discard = 1, .periods_keep = 3, .realizations = 1},
                                                NoiseSpec{.std_dev = 0.01, .seed = 3}, 12);
        const auto est = robust_method(record);
        CHECK(est.has_var_noise);
        CHECK(!est.has_var_total);
    }

    SUBCASE("P = 1 degrades to realization-only averaging") {
        const auto record = steady_state_record(Plant{plant}, ms,
                                                {.periods_discard = 1, .periods_keep = 1, .realizations = 8},
                                                NoiseSpec{.std_dev = 0.01, .seed = 3}, 12);
        const auto est = robust_method(record);
        CHECK(!est.has_var_noise);
        CHECK(est.has_var_total);
        // the mean FRF equals the plain average of per-realization divisions
        const auto stats = per_realization_line_statistics(period_dfts(record));
        for (std::size_t i = 0; i < est.bins.size(); ++i) {
            cdouble mean_g(0.0, 0.0);
            for (const auto& s : stats) mean_g += s.mean_y[est.bins[i]] / s.mean_u[est.bins[i]];
            mean_g /= static_cast<double>(stats.size());
            CHECK(std::abs(est.g[i] - mean_g) < 1e-14 * std::abs(mean_g) + 1e-300);
        }
    }
}

TEST_CASE("cubic multisine FRF fluctuates around the Bussgang gain, spread ~ 1/sqrt(M)") {
    // a flat multisine with many lines behaves like Gaussian noise: the
    // division FRF of y = u^3 scatters around the static BLA 3*sigma_u^2 and
    // averaging realizations tightens it
    const double fs = 1000.0;
    const std::size_t n = 512;
    const auto grid = build_grid(fs, n, 10.0, 240.0, GridKind::odd, 29);
    const double sigma_u = 0.5;
    const double bussgang = theoretical_bla_static(StaticPolynomial::power(3), sigma_u);

    auto averaged_frf_spread = [&](std::size_t m_count) {
        const auto ms = synthesize_multisine(grid, sigma_u, 12);
        const auto record = steady_state_record(Plant{StaticPolynomial::power(3)}, ms,
                                                {.periods_discard = 0, .periods_keep = 1,
                                                 .realizations = m_count},
                                                NoiseSpec{}, 88);
        const auto est = robust_method(record);
        double bias = 0.0, spread = 0.0;
        for (std::size_t i = 0; i < est.bins.size(); ++i) {
            bias += (est.g[i].real() - bussgang) / est.bins.size();
            spread += est.var_total[i] / est.bins.size();
        }
        return std::make_pair(bias, std::sqrt(spread));
    };

    const auto [bias16, spread16] = averaged_frf_spread(16);
    const auto [bias64, spread64] = averaged_frf_spread(64);
    // mean FRF near the Bussgang value (finite-F corrections are O(1/F))
    CHECK(std::abs(bias16) < 0.1 * bussgang);
    CHECK(std::abs(bias64) < 0.1 * bussgang);
    // quadrupling M halves the robust spread estimate
    CHECK(spread64 < spread16 * 0.7);
    CHECK(spread64 > spread16 * 0.3);
}

TEST_CASE("frf variance scales inversely with excitation power") {
    // multiplying the excitation by c divides the noise-induced FRF variance
    // by c^2 (sigma_G^2 = sigma^2 / S_UU)
    const double fs = 1000.0;
    const std::size_t n = 256;
    const auto grid = build_grid(fs, n, 20.0, 100.0, GridKind::odd, 3);
    const LtiFilter plant({0.6}, {1.0, -0.4});
    auto run = [&](double level) {
        const auto ms = synthesize_multisine(grid, level, 17);
        const auto record = steady_state_record(
            Plant{plant}, ms, {.periods_discard = 1, .periods_keep = 64, .realizations = 1},
            NoiseSpec{.std_dev = 0.05, .seed = 3}, 12);
        const auto est = estimate_frf(pooled_line_statistics(period_dfts(record)), grid);
        double acc = 0.0;
        for (double v : est.var_noise) acc += v;
        return acc / static_cast<double>(est.var_noise.size());
    };
    const double v1 = run(1.0);
    const double v3 = run(3.0);
    CHECK(v3 * 9.0 == doctest::Approx(v1).epsilon(0.2));
}

TEST_CASE("odd multisine lowers the total FRF variance for an even nonlinearity") {
    // plant with dominant even nonlinearity; Riemann-equivalent odd vs full
    // designs at matched measurement time -> odd design has lower var_total
    const double fs = 1000.0;
    const std::size_t n = 512;
    const StaticPolynomial plant{{1.0, 0.6}};  // u + 0.6 u^2
    const double psd = 1e-3;
    auto var_total_median = [&](GridKind kind) {
        const auto grid = build_grid(fs, n, 20.0, 150.0, kind, 5);
        const auto profile = profile_for_psd(grid, [&](double) { return psd; });
        const auto ms = synthesize_multisine_profile(grid, profile, 101);
        const auto record = steady_state_record(Plant{plant}, ms,
                                                {.periods_discard = 0, .periods_keep = 1, .realizations = 24},
                                                NoiseSpec{}, 33);
        const auto est = robust_method(record);
        std::vector<double> v = est.var_total;
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(var_total_median(GridKind::odd) < var_total_median(GridKind::full));
}

TEST_CASE("mimo frf") {
    const double fs = 1000.0;
    const std::size_t n = 256;
    const auto grid = build_grid(fs, n, 20.0, 200.0, GridKind::odd, 4);
    const auto base = synthesize_multisine(grid, 1.0, 8);
    const std::size_t n_u = 2;
    const auto set = orthogonal_multisines(base, n_u);

    const LtiFilter g00({0.5}, {1.0, -0.3});
    const LtiFilter g11({0.8, 0.2}, {1.0, -0.5});
    const LtiFilter g01({0.1}, {1.0});  // cross path used in the full-matrix case

    auto run_experiments = [&](bool diagonal) {
        std::vector<Record> records;
        for (std::size_t e = 0; e < n_u; ++e) {
            Record r;
            r.sample_rate = fs;
            r.n_samples_per_period = n;
            r.n_periods = 1;
            r.n_realizations = 1;
            r.grid = grid;
            const auto& u0 = set.signals[e][0];
            const auto& u1 = set.signals[e][1];
            r.channels["u0"] = u0;
            r.channels["u1"] = u1;
            auto y0 = simulate_lti(g00, u0, true);
            auto y1 = simulate_lti(g11, u1, true);
            if (!diagonal) {
                const auto cross = simulate_lti(g01, u1, true);
                for (std::size_t i = 0; i < n; ++i) y0[i] += cross[i];
            }
            r.channels["y0"] = y0;
            r.channels["y1"] = y1;
            r.validate();
            records.push_back(std::move(r));
        }
        return mimo_frf(records, n_u);
    };

    SUBCASE("diagonal plant: off-diagonal estimates below 1e-8") {
        const auto est = run_experiments(true);
        for (std::size_t b = 0; b < est.bins.size(); ++b) {
            CHECK(std::abs(est.g[b][0 * n_u + 1]) < 1e-8);
            CHECK(std::abs(est.g[b][1 * n_u + 0]) < 1e-8);
        }
    }

    SUBCASE("full matrix recovered to 1e-8") {
        const auto est = run_experiments(false);
        for (std::size_t b = 0; b < est.bins.size(); ++b) {
            const std::size_t k = est.bins[b];
            CHECK(std::abs(est.g[b][0] - g00.response_at_bin(k, n)) < 1e-8);
            CHECK(std::abs(est.g[b][1] - g01.response_at_bin(k, n)) < 1e-8);
            CHECK(std::abs(est.g[b][2]) < 1e-8);
            CHECK(std::abs(est.g[b][3] - g11.response_at_bin(k, n)) < 1e-8);
        }
    }

    SUBCASE("orthogonal inputs report condition number 1") {
        const auto est = run_experiments(true);
        for (double c : est.condition) CHECK(c == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("hosidf") {
    const double fs = 1000.0;
    const std::size_t n = 1000;
    // grid exciting exactly bin 10
    const auto grid = build_grid(fs, n, 9.5, 10.5, GridKind::full, 0);
    REQUIRE(grid.excited_bins == std::vector<std::size_t>{10});

    auto sine_record = [&](double amplitude, const Plant& plant) {
        const auto ms = synthesize_multisine_profile(grid, {{10, amplitude}}, 3);
        return steady_state_record(plant, ms, {.periods_discard = 1, .periods_keep = 1, .realizations = 1},
                                   NoiseSpec{}, 9);
    };

    SUBCASE("cubic analytics: G3 = 1 and G1 = 3a^2/4") {
        for (double a : {0.5, 1.0, 2.0}) {
            // design amplitude U so the cosine amplitude is a: a = 2U/sqrt(N)
            const double u_design = a * std::sqrt(static_cast<double>(n)) / 2.0;
            const auto record = sine_record(u_design, Plant{StaticPolynomial::power(3)});
            const auto g3 = hosidf({record}, 3);
            const auto g1 = hosidf({record}, 1);
            CHECK(g3.amplitude == doctest::Approx(a).epsilon(1e-10));
            CHECK(std::abs(g3.gain[0] - cdouble(1.0, 0.0)) < 1e-8);
            CHECK(std::abs(g1.gain[0] - cdouble(0.75 * a * a, 0.0)) < 1e-8 * (0.75 * a * a));
        }
    }

    SUBCASE("pure LTI: G1 = G(f0), higher orders at the numerical floor") {
        const LtiFilter plant({0.4, 0.3}, {1.0, -0.6});
        const auto record = sine_record(1.0, Plant{plant});
        const auto g1 = hosidf({record}, 1);
        CHECK(std::abs(g1.gain[0] - plant.response_at_bin(10, n)) < 1e-9);
        const auto g2 = hosidf({record}, 2);
        const auto g3 = hosidf({record}, 3);
        CHECK(std::abs(g2.gain[0]) < 1e-8);
        CHECK(std::abs(g3.gain[0]) < 1e-8);
    }

    SUBCASE("harmonic off the grid is rejected") {
        const auto record = sine_record(1.0, Plant{StaticPolynomial::power(3)});
        CHECK_THROWS_AS(hosidf({record}, 100), Error);
    }

    SUBCASE("curve over several fundamentals tracks G1 = 3a^2/4 per point") {
        const double a = 1.2;
        std::vector<Record> records;
        for (double f0 : {10.0, 20.0, 40.0}) {
            const auto g = build_grid(fs, n, f0 - 0.5, f0 + 0.5, GridKind::full, 0);
            const double u_design = a * std::sqrt(static_cast<double>(n)) / 2.0;
            const auto ms = synthesize_multisine_profile(g, {{g.excited_bins[0], u_design}}, 3);
            records.push_back(steady_state_record(Plant{StaticPolynomial::power(3)}, ms,
                                                  {.periods_discard = 0, .periods_keep = 1, .realizations = 1},
                                                  NoiseSpec{}, 9));
        }
        const auto curve = hosidf(records, 1);
        REQUIRE(curve.gain.size() == 3);
        REQUIRE(curve.fundamental_hz == std::vector<double>{10.0, 20.0, 40.0});
        for (const auto& g1 : curve.gain)
            CHECK(std::abs(g1 - cdouble(0.75 * a * a, 0.0)) < 1e-8);
    }
}
