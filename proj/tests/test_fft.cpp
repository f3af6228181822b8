#include <doctest.h>

#include <fdsi/fft.hpp>
#include <fdsi/random.hpp>

using namespace fdsi;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

}  // namespace

TEST_CASE("single complex exponential lands on one bin") {
    const std::size_t n = 64;
    cvector x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::polar(1.0, 2.0 * kPi * 5.0 * static_cast<double>(i) / n);
    const auto spec = fft(x);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 5)
            CHECK(std::abs(spec[k] - cdouble(static_cast<double>(n), 0.0)) < 1e-9);
        else
            CHECK(std::abs(spec[k]) < 1e-9);
    }
}

TEST_CASE("fft/ifft round trip") {
    for (std::size_t n : {16u, 64u, 100u, 243u}) {  // includes non-power-of-two
        auto x = random_signal(n, 11 + n);
        cvector cx(n);
        for (std::size_t i = 0; i < n; ++i) cx[i] = cdouble(x[i], 0.0);
        const auto back = ifft(fft(cx));
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(back[i].real() - x[i]) < 1e-10);
            CHECK(std::abs(back[i].imag()) < 1e-10);
        }
    }
}

TEST_CASE("parseval under the unnormalized convention") {
    const auto x = random_signal(512, 7);
    const auto spec = fft(x);
    double time_power = 0.0;
    for (double v : x) time_power += v * v;
    time_power /= static_cast<double>(x.size());
    double spec_power = 0.0;
    for (const auto& v : spec) spec_power += std::norm(v);
    spec_power /= static_cast<double>(x.size()) * static_cast<double>(x.size());
    CHECK(std::abs(time_power - spec_power) < 1e-10 * time_power);
}

TEST_CASE("rfft/irfft reconstructs real signals") {
    const auto x = random_signal(128, 3);
    const auto back = irfft(rfft(x), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("periodic upsampling is exact for band-limited content") {
    const std::size_t n = 64;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / n;
        x[i] = 1.3 * std::cos(2.0 * kPi * 3.0 * t + 0.4) + 0.7 * std::sin(2.0 * kPi * 11.0 * t);
    }
    const std::size_t factor = 4;
    const auto fine = upsample_periodic(x, factor);
    REQUIRE(fine.size() == n * factor);
    for (std::size_t j = 0; j < fine.size(); ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(fine.size());
        const double expected = 1.3 * std::cos(2.0 * kPi * 3.0 * t + 0.4) + 0.7 * std::sin(2.0 * kPi * 11.0 * t);
        CHECK(std::abs(fine[j] - expected) < 1e-10);
    }
    // original samples are preserved exactly at the coarse grid points
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(fine[i * factor] - x[i]) < 1e-10);
}
