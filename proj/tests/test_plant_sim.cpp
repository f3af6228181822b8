#include <doctest.h>

#include <fdsi/fft.hpp>
#include <fdsi/multisine.hpp>
#include <fdsi/record.hpp>

using namespace fdsi;

namespace {

std::vector<double> cosine(std::size_t n, double cycles, double amplitude, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t)
        x[t] = amplitude * std::cos(2.0 * kPi * cycles * static_cast<double>(t) / static_cast<double>(n) + phase);
    return x;
}

double off_support_energy(const cvector& spec, const std::vector<std::size_t>& support) {
    double off = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k)
        if (std::find(support.begin(), support.end(), k) == support.end()) off += std::norm(spec[k]);
    return off;
}

}  // namespace

TEST_CASE("cubic static system maps a single cosine to bins {1,3}") {
    const std::size_t n = 64;
    const auto u = cosine(n, 1.0, 2.0);
    const auto y = simulate_static(StaticPolynomial::power(3), u);
    const auto spec = rfft(y);
    // 2cos(wt) -> u^3 = 6cos(wt)+2cos(3wt): DFT lines N*3 and N*1
    CHECK(std::abs(spec[1] - cdouble(3.0 * n, 0.0)) < 1e-9);  // amplitude 6 -> line 6N/2
    CHECK(std::abs(spec[3] - cdouble(2.0 * n / 2.0, 0.0)) < 1e-9);
    CHECK(off_support_energy(spec, {1, 3}) < 1e-18);
}

TEST_CASE("squarer maps cos to dc + double frequency") {
    const std::size_t n = 64;
    const auto u = cosine(n, 4.0, 1.0);
    const auto y = simulate_static(StaticPolynomial::power(2), u);
    const auto spec = rfft(y);
    CHECK(std::abs(spec[0] - cdouble(0.5 * n, 0.0)) < 1e-9);
    CHECK(std::abs(spec[8] - cdouble(0.25 * n, 0.0)) < 1e-9);  // amplitude 1/2 -> line N/4
    CHECK(off_support_energy(spec, {0, 8}) < 1e-18);
}

TEST_CASE("identity polynomial returns the input") {
    const auto u = cosine(32, 3.0, 1.7, 0.3);
    CHECK(simulate_static(StaticPolynomial::identity(), u) == u);
}

TEST_CASE("lti filtering") {
    SUBCASE("zero-order unit gain is a passthrough") {
        const auto u = cosine(64, 3.0, 1.0);
        const auto y = simulate_lti(LtiFilter::identity(), u, false);
        for (std::size_t i = 0; i < u.size(); ++i) CHECK(y[i] == doctest::Approx(u[i]));
    }

    SUBCASE("periodic response equals G(e^{jw})*U(k) per bin") {
        const auto grid = build_grid(1000.0, 512, 10.0, 200.0, GridKind::odd, 3);
        const auto ms = synthesize_multisine(grid, 1.0, 9);
        const LtiFilter g({0.2, 0.1}, {1.0, -0.9, 0.5});
        const auto y = simulate_lti(g, ms.samples, true);
        const auto u_spec = rfft(ms.samples);
        const auto y_spec = rfft(y);
        for (std::size_t k : grid.excited_bins) {
            const cdouble expected = g.response_at_bin(k, 512) * u_spec[k];
            CHECK(std::abs(y_spec[k] - expected) <= 1e-10 * std::abs(expected));
        }
    }

    SUBCASE("one-sample delay rotates the input under the periodic assumption") {
        const auto u = cosine(32, 5.0, 1.0, 0.2);
        const auto y = simulate_lti(LtiFilter::delay(1), u, true);
        for (std::size_t i = 0; i < u.size(); ++i)
            CHECK(y[i] == doctest::Approx(u[(i + 31) % 32]).epsilon(1e-10));
    }

    SUBCASE("unstable filters are rejected at construction") {
        CHECK_THROWS_AS(LtiFilter({1.0}, {1.0, -2.5, 1.56}), Error);  // pole outside unit circle
        CHECK_THROWS_AS(LtiFilter({1.0}, {1.0, -1.0}), Error);        // pole on the circle
    }

    SUBCASE("stepper matches batch filtering") {
        for (const auto& g : {LtiFilter({0.3, -0.2, 0.05}, {1.0, -1.2, 0.72}),
                              LtiFilter({0.0, 0.0, 0.0, 0.5}, {1.0, -0.3}),   // FIR-heavy
                              LtiFilter({0.9}, {1.0, -0.4, 0.1, -0.02})}) {  // IIR-heavy
            const auto u = cosine(100, 7.0, 1.0);
            const auto batch = g.filter(u);
            auto stepper = g.stepper();
            for (std::size_t i = 0; i < u.size(); ++i)
                CHECK(stepper.step(u[i]) == doctest::Approx(batch[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("linearity of simulators with the nonlinearity disabled") {
    const auto grid = build_grid(1000.0, 256, 10.0, 100.0, GridKind::odd, 3);
    const auto ms = synthesize_multisine(grid, 1.0, 4);
    std::vector<double> scaled(ms.samples);
    for (auto& v : scaled) v *= 3.7;

    const LtiFilter g({0.4}, {1.0, -0.5});
    const auto y1 = simulate_lti(g, ms.samples, false);
    const auto y2 = simulate_lti(g, scaled, false);
    for (std::size_t i = 0; i < y1.size(); ++i)
        CHECK(y2[i] == doctest::Approx(3.7 * y1[i]).epsilon(1e-10));

    DuffingParams params{.mass = 1.0, .damping = 30.0, .k_linear = 1.6e5, .k_cubic = 0.0};
    const auto d1 = simulate_duffing(params, ms.samples, 1000.0);
    const auto d2 = simulate_duffing(params, scaled, 1000.0);
    for (std::size_t i = 0; i < d1.size(); ++i)
        CHECK(d2[i] == doctest::Approx(3.7 * d1[i]).epsilon(1e-8).scale(1e-9));
}

TEST_CASE("wiener-hammerstein composition") {
    const auto grid = build_grid(1000.0, 256, 10.0, 100.0, GridKind::odd, 3);
    const auto ms = synthesize_multisine(grid, 1.0, 4);

    SUBCASE("identity filters reduce to the static map") {
        WienerHammerstein wh{LtiFilter::identity(), StaticPolynomial::power(3), LtiFilter::identity()};
        CHECK(simulate_wh(wh, ms.samples, true) == simulate_static(wh.nonlinearity, ms.samples));
    }

    SUBCASE("identity nonlinearity reduces to the filter cascade") {
        const LtiFilter r({0.5, 0.2}, {1.0, -0.3});
        const LtiFilter s({1.0, -0.4}, {1.0, 0.1});
        WienerHammerstein wh{r, StaticPolynomial::identity(), s};
        const auto y = simulate_wh(wh, ms.samples, true);
        const auto ref = simulate_lti(s, simulate_lti(r, ms.samples, true), true);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-10));
    }

    SUBCASE("cubic with unit filters populates bins {k, 3k}") {
        const std::size_t n = 64;
        const auto u = cosine(n, 2.0, 1.0);
        WienerHammerstein wh{LtiFilter::identity(), StaticPolynomial::power(3), LtiFilter::identity()};
        const auto spec = rfft(simulate_wh(wh, u, true));
        CHECK(off_support_energy(spec, {2, 6}) < 1e-18);
        CHECK(std::abs(spec[2]) > 0.0);
        CHECK(std::abs(spec[6]) > 0.0);
    }
}

TEST_CASE("duffing oscillator") {
    const double fs = 1220.703125;
    const std::size_t n = 1024;
    const auto grid = build_grid(fs, n, 5.0, 150.0, GridKind::odd, 11);

    SUBCASE("linear limit matches the analytic response") {
        DuffingParams params{.mass = 1.0, .damping = 40.84, .k_linear = 1.667716e5, .k_cubic = 0.0};
        const auto ms = synthesize_multisine(grid, 1.0, 6);
        // settle: simulate 3 periods, analyze the last
        std::vector<double> u3;
        for (int p = 0; p < 3; ++p) u3.insert(u3.end(), ms.samples.begin(), ms.samples.end());
        const auto y3 = simulate_duffing(params, u3, fs);
        const std::vector<double> last(y3.end() - n, y3.end());
        const auto u_spec = rfft(ms.samples);
        const auto y_spec = rfft(last);
        for (std::size_t k : grid.excited_bins) {
            const double omega = 2.0 * kPi * grid.bin_frequency(k);
            const cdouble expected = params.linear_response(omega) * u_spec[k];
            CHECK(std::abs(y_spec[k] - expected) <= 1e-6 * std::abs(expected));
        }
    }

    SUBCASE("step halving changes the steady state by < 1e-6 relative RMS") {
        DuffingParams coarse{.mass = 1.0, .damping = 40.84, .k_linear = 1.667716e5, .k_cubic = 1e9,
                             .oversample_factor = 8};
        DuffingParams fine = coarse;
        fine.oversample_factor = 16;
        const auto ms = synthesize_multisine(grid, 50.0, 6);
        std::vector<double> u3;
        for (int p = 0; p < 3; ++p) u3.insert(u3.end(), ms.samples.begin(), ms.samples.end());
        const auto yc = simulate_duffing(coarse, u3, fs);
        const auto yf = simulate_duffing(fine, u3, fs);
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 2 * n; i < 3 * n; ++i) {
            diff += (yc[i] - yf[i]) * (yc[i] - yf[i]);
            ref += yf[i] * yf[i];
        }
        CHECK(std::sqrt(diff / ref) < 1e-6);
    }

    SUBCASE("divergence guard triggers on absurd forcing") {
        DuffingParams params{.mass = 1e-6, .damping = 1e-8, .k_linear = 1e-6, .k_cubic = -10.0,
                             .divergence_bound = 1e3};
        const auto ms = synthesize_multisine(grid, 100.0, 6);
        CHECK_THROWS_AS(simulate_duffing(params, ms.samples, fs), Error);
    }

    SUBCASE("superposition fails at high amplitude (cubic active)") {
        DuffingParams params{.mass = 1.0, .damping = 40.84, .k_linear = 1.667716e5, .k_cubic = 1e9};
        const auto a = synthesize_multisine(grid, 60.0, 6);
        const auto b = synthesize_multisine(grid, 60.0, 7);
        std::vector<double> sum(a.samples);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b.samples[i];
        const auto ya = simulate_duffing(params, a.samples, fs);
        const auto yb = simulate_duffing(params, b.samples, fs);
        const auto ysum = simulate_duffing(params, sum, fs);
        double gap = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < ysum.size(); ++i) {
            gap += std::pow(ysum[i] - ya[i] - yb[i], 2);
            ref += ysum[i] * ysum[i];
        }
        CHECK(std::sqrt(gap / ref) > 1e-3);
    }
}

TEST_CASE("closed loop simulation") {
    const double fs = 1000.0;
    const std::size_t n = 512;
    const auto grid = build_grid(fs, n, 10.0, 200.0, GridKind::odd, 13);
    const auto ms = synthesize_multisine(grid, 1.0, 21);

    SUBCASE("zero controller recovers the open loop") {
        ClosedLoopScenario scenario{LtiFilter({0.4, 0.1}, {1.0, -0.5}), LtiFilter::gain(0.0)};
        scenario.validate();
        const auto sim = simulate_closed_loop(scenario, ms.samples, {}, fs);
        CHECK(sim.u == ms.samples);
        const auto open = simulate_lti(std::get<LtiFilter>(scenario.plant), ms.samples, false);
        for (std::size_t i = 0; i < open.size(); ++i) CHECK(sim.y[i] == doctest::Approx(open[i]));
    }

    SUBCASE("steady-state Y/R equals G/(1+G*C_eff) with the delay included") {
        const LtiFilter plant({0.4, 0.1}, {1.0, -0.5});
        const LtiFilter controller({0.8}, {1.0, -0.2});
        ClosedLoopScenario scenario{plant, controller};
        scenario.validate();
        std::vector<double> r5;
        for (int p = 0; p < 5; ++p) r5.insert(r5.end(), ms.samples.begin(), ms.samples.end());
        const auto sim = simulate_closed_loop(scenario, r5, {}, fs);
        const std::vector<double> y_last(sim.y.end() - n, sim.y.end());
        const auto r_spec = rfft(ms.samples);
        const auto y_spec = rfft(y_last);
        for (std::size_t k : grid.excited_bins) {
            const double omega = 2.0 * kPi * static_cast<double>(k) / n;
            const cdouble g = plant.response(omega);
            const cdouble c_eff = scenario.effective_controller(omega);
            const cdouble expected = g / (1.0 + g * c_eff) * r_spec[k];
            CHECK(std::abs(y_spec[k] - expected) <= 1e-8 * std::abs(expected));
        }
    }

    SUBCASE("unstable linearized loop is rejected") {
        ClosedLoopScenario scenario{LtiFilter::gain(3.0), LtiFilter::gain(1.0)};
        // u(t) = r - 3*u(t-1) diverges
        CHECK_THROWS_AS(scenario.validate(), Error);
    }

    SUBCASE("duffing plant in the loop: linear limit tracks the analytic response") {
        // the per-sample stepper interpolates the input linearly between loop
        // samples, so accuracy is band-limited; ~2% holds well below Nyquist
        const double fsd = 1220.703125;
        const std::size_t nd = 2048;
        const auto grid_d = build_grid(fsd, nd, 5.0, 80.0, GridKind::odd, 11);
        DuffingParams params{.mass = 1.0, .damping = 40.8407, .k_linear = 1.66772e5,
                             .k_cubic = 0.0, .oversample_factor = 16};
        const auto ms_d = synthesize_multisine(grid_d, 1.0, 6);
        std::vector<double> r4;
        for (int i = 0; i < 4; ++i) r4.insert(r4.end(), ms_d.samples.begin(), ms_d.samples.end());
        ClosedLoopScenario scenario{DuffingPlant{params}, LtiFilter::gain(0.0)};
        const auto sim = simulate_closed_loop(scenario, r4, {}, fsd);
        const std::vector<double> last(sim.y.end() - nd, sim.y.end());
        const auto u_spec = rfft(ms_d.samples);
        const auto y_spec = rfft(last);
        for (std::size_t k : grid_d.excited_bins) {
            const double omega = 2.0 * kPi * grid_d.bin_frequency(k);
            const cdouble expected = params.linear_response(omega) * u_spec[k];
            CHECK(std::abs(y_spec[k] - expected) < 2e-2 * std::abs(expected));
        }
    }

    SUBCASE("noise-driven loop: U/V = -C/(1+GC) via cross spectra") {
        const LtiFilter plant({0.4, 0.1}, {1.0, -0.5});
        const LtiFilter controller({0.8}, {1.0, -0.2});
        ClosedLoopScenario scenario{plant, controller};
        const NoiseSpec noise{.std_dev = 0.1, .seed = 42, .periodic = true};
        const std::size_t m_count = 64, discard = 4;
        cvector s_uv(n / 2 + 1, cdouble(0.0, 0.0));
        std::vector<double> s_vv(n / 2 + 1, 0.0);
        for (std::size_t m = 0; m < m_count; ++m) {
            const auto v = noise.generate(derive_seed(noise.seed, m), n, discard + 1);
            const auto sim = simulate_closed_loop(scenario, std::vector<double>((discard + 1) * n, 0.0),
                                                  v, fs);
            const auto u_spec = rfft(std::vector<double>(sim.u.end() - n, sim.u.end()));
            const auto v_spec = rfft(std::vector<double>(v.begin(), v.begin() + n));
            for (std::size_t k = 0; k <= n / 2; ++k) {
                s_uv[k] += u_spec[k] * std::conj(v_spec[k]);
                s_vv[k] += std::norm(v_spec[k]);
            }
        }
        for (std::size_t k = 5; k < n / 2; k += 16) {
            const double omega = 2.0 * kPi * static_cast<double>(k) / n;
            const cdouble c_eff = scenario.effective_controller(omega);
            const cdouble expected = -c_eff / (1.0 + plant.response(omega) * c_eff);
            CHECK(std::abs(s_uv[k] / s_vv[k] - expected) < 1e-8 * std::abs(expected) + 1e-12);
        }
    }
}

TEST_CASE("noise generation") {
    NoiseSpec spec{.std_dev = 0.5, .seed = 77};
    const auto a = spec.generate(123, 64, 4);
    const auto b = spec.generate(123, 64, 4);
    CHECK(a == b);
    const auto c = spec.generate(124, 64, 4);
    CHECK(a != c);

    SUBCASE("periodic mode tiles one period") {
        NoiseSpec periodic{.std_dev = 0.5, .seed = 1, .periodic = true};
        const auto v = periodic.generate(9, 32, 3);
        for (std::size_t i = 0; i < 32; ++i) {
            CHECK(v[i] == v[i + 32]);
            CHECK(v[i] == v[i + 64]);
        }
    }

    SUBCASE("white level matches the requested std") {
        NoiseSpec white{.std_dev = 2.0, .seed = 5};
        const auto v = white.generate(1, 1 << 15, 1);
        CHECK(rms(v) == doctest::Approx(2.0).epsilon(0.02));
    }
}

TEST_CASE("steady-state records") {
    const double fs = 1000.0;
    const std::size_t n = 256;
    const auto grid = build_grid(fs, n, 10.0, 100.0, GridKind::odd, 5);
    const auto ms = synthesize_multisine(grid, 1.0, 31);
    const LtiFilter plant({0.5, 0.2}, {1.0, -0.6});

    SUBCASE("noise-free LTI: kept periods are identical") {
        const auto record = steady_state_record(Plant{plant}, ms,
                                                {.periods_discard = 3, .periods_keep = 2, .realizations = 2},
                                                NoiseSpec{}, 42);
        for (std::size_t m = 0; m < 2; ++m) {
            const auto p0 = record.period("y", m, 0);
            const auto p1 = record.period("y", m, 1);
            double diff = 0.0, ref = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                diff += (p0[i] - p1[i]) * (p0[i] - p1[i]);
                ref += p1[i] * p1[i];
            }
            CHECK(std::sqrt(diff / ref) < 1e-10);
        }
    }

    SUBCASE("same seed and config give a bit-identical record") {
        const SteadyStateOptions opts{.periods_discard = 1, .periods_keep = 2, .realizations = 3};
        const NoiseSpec noise{.std_dev = 0.01, .seed = 9};
        const auto r1 = steady_state_record(Plant{plant}, ms, opts, noise, 42);
        const auto r2 = steady_state_record(Plant{plant}, ms, opts, noise, 42);
        CHECK(r1.channels.at("u") == r2.channels.at("u"));
        CHECK(r1.channels.at("y") == r2.channels.at("y"));
    }

    SUBCASE("realizations differ") {
        const auto record = steady_state_record(Plant{plant}, ms,
                                                {.periods_discard = 1, .periods_keep = 1, .realizations = 2},
                                                NoiseSpec{}, 42);
        const auto u0 = record.period("u", 0, 0);
        const auto u1 = record.period("u", 1, 0);
        bool differ = false;
        for (std::size_t i = 0; i < n; ++i) differ |= u0[i] != u1[i];
        CHECK(differ);
    }
}
