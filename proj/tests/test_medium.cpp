#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fwm/errors.hpp"
#include "fwm/fitting.hpp"
#include "fwm/medium.hpp"

using namespace fwm;

TEST_CASE("gain coefficient vanishes at the unity pump and clamps at saturation")
{
    const MediumConfig cfg;
    CHECK(gain_coefficient(cfg, 130.0) == 0.0);
    CHECK(gain_coefficient(cfg, 0.0) == doctest::Approx(cfg.gain_coeff_slope * 130.0).epsilon(1e-15));
    CHECK(gain_coefficient(cfg, 200.0) == gain_coefficient(cfg, 180.0));
    CHECK(gain_coefficient(cfg, 300.0) == gain_coefficient(cfg, 180.0));
    CHECK(gain_coefficient(cfg, 150.0) < 0.0);
    CHECK_THROWS_AS(gain_coefficient(cfg, -1.0), DomainError);
}

TEST_CASE("intensity gain: unity point, 1e7 at the operating pump, monotone")
{
    const MediumConfig cfg;
    CHECK(intensity_gain(cfg, 130.0) == 1.0);
    CHECK(intensity_gain(cfg, 300.0) == doctest::Approx(1e7).epsilon(1e-12));

    // Closed form exp(-g L) evaluated independently.
    for (double p : {140.0, 150.0, 160.0}) {
        const double oracle = std::exp(cfg.gain_coeff_slope * (p - 130.0) * cfg.cell_length_m);
        CHECK(intensity_gain(cfg, p) == doctest::Approx(oracle).epsilon(1e-12));
    }
    CHECK(intensity_gain(cfg, 140.0) < intensity_gain(cfg, 150.0));
    CHECK(intensity_gain(cfg, 150.0) < intensity_gain(cfg, 160.0));

    double last = 0;
    for (double p = 0; p <= 400; p += 2.5) {
        const double g = intensity_gain(cfg, p);
        CHECK(g >= last);
        last = g;
    }
}

TEST_CASE("default slope is the calibration to max gain at the saturation pump")
{
    MediumConfig cfg;
    const double oracle = std::log(1e7) / (0.075 * (180.0 - 130.0));
    CHECK(calibrate_gain_slope(cfg, 1e7) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(cfg.gain_coeff_slope == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("log gain is affine below saturation")
{
    const MediumConfig cfg;
    std::vector<double> x, y;
    for (double p = 100; p <= 180; p += 4) {
        x.push_back(p);
        y.push_back(std::log(intensity_gain(cfg, p)));
    }
    CHECK(linear_regression(x, y).r_squared > 0.9999);
}

TEST_CASE("config validation rejects out-of-domain values")
{
    MediumConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.cell_length_m = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.probe_attenuation = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.conjugate_attenuation = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.gain_sat_pump_mW = 120;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    BandwidthModel bm;
    CHECK_NOTHROW(bm.validate());
    bm.delta_raman_GHz = 0;
    CHECK_THROWS_AS(bm.validate(), ConfigError);
    bm = {};
    bm.s_probe = 0;
    CHECK_THROWS_AS(bm.validate(), ConfigError);
    bm = {};
    bm.offset_MHz = -1;
    CHECK_THROWS_AS(bm.validate(), ConfigError);
}

TEST_CASE("bandwidth vs input: offset at zero and half-degree homogeneity")
{
    const BandwidthModel bm;
    for (Mode m : {Mode::probe, Mode::conjugate}) {
        CHECK(bandwidth_vs_input(bm, m, 0.0) == bm.offset_MHz);
        for (double p : {0.5, 3.0, 17.0, 400.0}) {
            const double lhs = bandwidth_vs_input(bm, m, 4 * p) - bm.offset_MHz;
            const double rhs = 2 * (bandwidth_vs_input(bm, m, p) - bm.offset_MHz);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            CHECK(bandwidth_vs_input(bm, m, p) < bandwidth_vs_input(bm, m, 1.01 * p));
        }
    }
    CHECK(bandwidth_vs_input(bm, Mode::conjugate, 10.0) > bandwidth_vs_input(bm, Mode::probe, 10.0));
    CHECK_THROWS_AS(bandwidth_vs_input(bm, Mode::probe, -0.1), DomainError);
}

TEST_CASE("slopes keep the reported unit-free numerals")
{
    // Reported fits: probe 0.729, conjugate 2.154 in a common rescaled unit.
    const BandwidthModel bm;
    CHECK(bm.s_probe / bm.s_conjugate == doctest::Approx(0.729 / 2.154).epsilon(1e-9));
    CHECK(bandwidth_vs_input(bm, Mode::probe, 1.0) == doctest::Approx(1.48).epsilon(1e-3));
    CHECK(bandwidth_vs_input(bm, Mode::conjugate, 1.0) == doctest::Approx(1.53).epsilon(1e-3));
}

TEST_CASE("bandwidth vs pump is affine with a positive slope")
{
    const BandwidthModel bm;
    const double g0 = bandwidth_vs_pump(bm, 0.0);
    CHECK(g0 == bm.pump_floor_MHz);
    CHECK(bandwidth_vs_pump(bm, 400.0) - g0 == doctest::Approx(2 * (bandwidth_vs_pump(bm, 200.0) - g0)).epsilon(1e-13));
    const double k_oracle = bm.eta * bm.omega_pump_per_sqrt_mW * bm.omega_pump_per_sqrt_mW /
                            (1000.0 * std::abs(bm.delta_raman_GHz));
    CHECK(pump_broadening_slope(bm) == doctest::Approx(k_oracle).epsilon(1e-14));
    CHECK(bandwidth_vs_pump(bm, 300.0) == doctest::Approx(1.48).epsilon(2e-3));
}

TEST_CASE("pump slope is recovered by a noisy linear fit")
{
    // 2 sigma holds in ~95% of draws; check the rate over 100 of them.
    const BandwidthModel bm;
    std::mt19937_64 rng(20261014);
    std::normal_distribution<double> n(0, 1);
    int within = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x, y;
        for (int i = 0; i < 20; ++i) {
            const double p = 100 + 15.0 * i;
            x.push_back(p);
            y.push_back(bandwidth_vs_pump(bm, p) * (1 + 0.03 * n(rng)));
        }
        const auto f = fit(ModelKind::linear, x, y);
        within += std::abs(f.param("a") - pump_broadening_slope(bm)) <= 2 * f.sigma("a");
    }
    CHECK(within >= 90);
}

TEST_CASE("delay is the inverse ordinary-frequency bandwidth")
{
    CHECK(delay_from_bandwidth(1.48) == doctest::Approx(675.7).epsilon(1e-4));
    CHECK(delay_from_bandwidth(1.53) == doctest::Approx(653.6).epsilon(1e-4));
    CHECK(delay_from_bandwidth(1e12) < 1e-6);
    CHECK_THROWS_AS(delay_from_bandwidth(0.0), DomainError);
    CHECK_THROWS_AS(delay_from_bandwidth(-1.0), DomainError);
    for (double g : {1e-3, 0.37, 1.48, 9.0, 2e4})
        CHECK(delay_from_bandwidth(g) * g / 1000.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("delay vs input decreases from its maximum at zero power")
{
    const BandwidthModel bm;
    for (Mode m : {Mode::probe, Mode::conjugate}) {
        CHECK(delay_vs_input(bm, m, 0.0) == doctest::Approx(1000.0 / bm.offset_MHz).epsilon(1e-14));
        for (double p : {0.5, 2.0, 50.0, 400.0})
            CHECK(delay_vs_input(bm, m, 4 * p) - delay_vs_input(bm, m, p) < 0);
    }
}

TEST_CASE("inverse sqrt fit recovers the delay law from the closed form")
{
    const BandwidthModel bm;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0, 1);
    int s_in = 0, z_in = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p, us;
        for (int i = 0; i < 25; ++i) {
            const double x = 0.5 * std::pow(800.0, i / 24.0);
            p.push_back(x);
            // delay in us is 1 / (s sqrt(P) + z) with Gamma in MHz
            us.push_back(delay_vs_input(bm, Mode::conjugate, x) * 1e-3 * (1 + 0.05 * n(rng)));
        }
        const auto f = fit(ModelKind::inv_sqrt_law, p, us);
        s_in += std::abs(f.param("s") - bm.s_conjugate) <= 2 * f.sigma("s");
        z_in += std::abs(f.param("z") - bm.offset_MHz) <= 2 * f.sigma("z");
    }
    CHECK(s_in >= 90);
    CHECK(z_in >= 90);
}

TEST_CASE("raman bandwidth follows the product of Rabi frequencies")
{
    BandwidthModel bm;
    const double oracle = bm.eta * bm.omega_pump_per_sqrt_mW * std::sqrt(300.0) *
                          bm.omega_probe_per_sqrt_pW * std::sqrt(4.0) / (1000.0 * 1.25);
    CHECK(raman_bandwidth(bm, 300.0, 4.0) == doctest::Approx(oracle).epsilon(1e-13));
    CHECK(raman_bandwidth(bm, 300.0, 0.0) == 0.0);
}

TEST_CASE("saturation compression is near one at low output and falls at the knee")
{
    const MediumConfig cfg;
    CHECK(saturation_compression(cfg, 300, 0.0) == 1.0);
    CHECK(saturation_compression(cfg, 300, 0.5) > 0.99999);
    CHECK(saturation_compression(cfg, 300, 4000.0) < 0.5);
    double last = 1.0;
    for (double p = 1; p < 1e5; p *= 2) {
        const double c = saturation_compression(cfg, 300, p);
        CHECK(c <= last);
        last = c;
    }
}

TEST_CASE("mode names round trip")
{
    CHECK(mode_from_string(to_string(Mode::probe)) == Mode::probe);
    CHECK(mode_from_string("conjugate") == Mode::conjugate);
    CHECK_THROWS_AS(mode_from_string("idler"), ConfigError);
}
