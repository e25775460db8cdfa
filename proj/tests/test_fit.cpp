#include "test_util.hpp"

#include <cmath>
#include <random>

#include "siv/constants.hpp"
#include "siv/errors.hpp"
#include "siv/fit.hpp"

using namespace siv;

namespace {

std::vector<double> grid(double a, double b, int n) {
    std::vector<double> x;
    for (int k = 0; k < n; ++k) x.push_back(a + (b - a) * k / (n - 1));
    return x;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Truth {
    std::vector<std::string> names;
    std::vector<double> values;
};

// Fraction of Monte-Carlo trials whose estimates land within 3 sigma of truth.
template <typename Gen, typename Fit>
double coverage(Gen gen, Fit fit, const Truth& truth, int trials, double noise, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0, noise);
    int hits = 0, total = 0;
    for (int t = 0; t < trials; ++t) {
        auto [xs, ys] = gen();
        for (auto& y : ys) y += n(rng);
        const FitResult r = fit(xs, ys);
        for (std::size_t k = 0; k < truth.names.size(); ++k) {
            ++total;
            if (std::abs(r.param(truth.names[k]) - truth.values[k]) <= 3 * r.uncertainty(truth.names[k])) ++hits;
        }
    }
    return static_cast<double>(hits) / total;
}

}  // namespace

TEST_CASE("noiseless exponential is recovered to 1e-6") {
    const auto xs = grid(0, 300e-9, 60);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(0.8 - 0.5 * std::exp(-x / 39e-9));
    const auto r = fit_exponential(xs, ys);
    CHECK(r.converged);
    CHECK(rel(r.param("tau"), 39e-9) < 1e-6);
    CHECK(rel(r.param("amplitude"), -0.5) < 1e-6);
    CHECK(rel(r.param("offset"), 0.8) < 1e-6);
    CHECK(r.rel_residual < 1e-8);
    CHECK(r.evaluate(10e-9) == approx(0.8 - 0.5 * std::exp(-10.0 / 39)).epsilon(1e-8));
    for (Eigen::Index k = 0; k < r.sigma.size(); ++k) CHECK(r.sigma(k) >= 0);
}

TEST_CASE("noiseless Lorentzian pair is recovered to 1e-6") {
    const auto xs = grid(-150e6, 150e6, 301);
    std::vector<double> ys;
    auto lor = [](double x, double a, double c, double w) { return a / (1 + std::pow(2 * (x - c) / w, 2)); };
    for (double x : xs) ys.push_back(1.0 - lor(x, 0.3, -35e6, 8e6) - lor(x, 0.2, 35e6, 6e6));
    const auto r = fit_lorentzian_sum(xs, ys, 2);
    CHECK(r.converged);
    // Order of components follows the peak picking: the deeper line first.
    CHECK(rel(r.param("center_0"), -35e6) < 1e-6);
    CHECK(rel(r.param("fwhm_0"), 8e6) < 1e-6);
    CHECK(rel(r.param("amplitude_0"), -0.3) < 1e-6);
    CHECK(rel(r.param("center_1"), 35e6) < 1e-6);
    CHECK(rel(r.param("fwhm_1"), 6e6) < 1e-6);
    CHECK(rel(r.param("amplitude_1"), -0.2) < 1e-6);
    CHECK(rel(r.param("offset"), 1.0) < 1e-6);
}

TEST_CASE("noiseless damped sinusoid is recovered to 1e-6") {
    const auto xs = grid(0, 300e-9, 301);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(0.1 + 0.7 * std::exp(-3e6 * x) * std::cos(two_pi * 15e6 * x + 0.4));
    const auto r = fit_damped_sinusoid(xs, ys);
    CHECK(rel(r.param("frequency"), 15e6) < 1e-6);
    CHECK(rel(r.param("rate"), 3e6) < 1e-6);
    CHECK(rel(r.param("amplitude"), 0.7) < 1e-6);
    CHECK(rel(r.param("offset"), 0.1) < 1e-6);
    CHECK(std::abs(r.param("phase") - 0.4) < 1e-6);
}

TEST_CASE("parameter recovery under 1% noise lands within 3 sigma") {
    const auto xs = grid(0, 300e-9, 80);
    auto gen_exp = [&] {
        std::vector<double> ys;
        for (double x : xs) ys.push_back(1.0 - 0.6 * std::exp(-x / 50e-9));
        return std::make_pair(xs, ys);
    };
    const double c1 = coverage(gen_exp, [](auto& x, auto& y) { return fit_exponential(x, y); },
                               {{"tau", "amplitude", "offset"}, {50e-9, -0.6, 1.0}}, 200, 0.01, 1);
    CHECK(c1 > 0.97);

    const auto xl = grid(-40e6, 40e6, 161);
    auto gen_lor = [&] {
        std::vector<double> ys;
        for (double x : xl) ys.push_back(1.0 - 0.4 / (1 + std::pow(2 * (x - 1e6) / 10e6, 2)));
        return std::make_pair(xl, ys);
    };
    const double c2 = coverage(gen_lor, [](auto& x, auto& y) { return fit_lorentzian_sum(x, y, 1); },
                               {{"center_0", "fwhm_0", "amplitude_0"}, {1e6, 10e6, -0.4}}, 200, 0.01, 2);
    CHECK(c2 > 0.97);

    const auto xd = grid(0, 300e-9, 301);
    auto gen_sin = [&] {
        std::vector<double> ys;
        for (double x : xd) ys.push_back(std::exp(-5e6 * x) * std::cos(two_pi * 15e6 * x));
        return std::make_pair(xd, ys);
    };
    const double c3 = coverage(gen_sin, [](auto& x, auto& y) { return fit_damped_sinusoid(x, y); },
                               {{"frequency", "rate", "amplitude"}, {15e6, 5e6, 1.0}}, 200, 0.01, 3);
    CHECK(c3 > 0.97);
}

TEST_CASE("reported sigma matches the Monte-Carlo scatter") {
    const auto xs = grid(0, 300e-9, 80);
    std::mt19937 rng(9);
    std::normal_distribution<double> n(0, 0.01);
    std::vector<double> est, sig;
    for (int t = 0; t < 300; ++t) {
        std::vector<double> ys;
        for (double x : xs) ys.push_back(1.0 - 0.6 * std::exp(-x / 50e-9) + n(rng));
        const auto r = fit_exponential(xs, ys);
        est.push_back(r.param("tau"));
        sig.push_back(r.uncertainty("tau"));
    }
    double m = 0, v = 0, s = 0;
    for (double e : est) m += e / est.size();
    for (double e : est) v += (e - m) * (e - m) / (est.size() - 1);
    for (double e : sig) s += e / sig.size();
    CHECK(std::abs(std::sqrt(v) / s - 1) < 0.15);
}

TEST_CASE("mismatched model leaves a large residual") {
    const auto xs = grid(0, 300e-9, 200);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(0.5 + 0.4 * std::cos(two_pi * 20e6 * x) - 0.3 * x / 300e-9);
    FitResult r;
    bool threw = false;
    try {
        r = fit_exponential(xs, ys);
    } catch (const FitError& e) {
        threw = true;
        CHECK(e.residuals.size() == xs.size());
    }
    if (!threw) {
        CHECK(r.rel_residual > 0.05);
        CHECK_FALSE(r.acceptable());
    }
}

TEST_CASE("flat data are rejected by the exponential fit") {
    const auto xs = grid(0, 1, 30);
    const std::vector<double> ys(30, 0.25);
    CHECK_THROWS_AS(fit_exponential(xs, ys), FitError);
    CHECK_THROWS_AS(fit_damped_sinusoid(xs, ys), FitError);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(fit_exponential({0, 1}, {1, 2, 3}), InvalidParameter);
    CHECK_THROWS_AS(fit_exponential({0, 1}, {1, 2}), InvalidParameter);
    CHECK_THROWS_AS(fit_lorentzian_sum(grid(0, 1, 20), std::vector<double>(20, 1.0), Eigen::VectorXd::Zero(3)),
                    InvalidParameter);
    std::vector<double> ys(20, 1.0);
    ys[3] = std::nan("");
    CHECK_THROWS_AS(fit_lorentzian_sum(grid(0, 1, 20), ys, 1), InvalidParameter);
}

TEST_CASE("generic least squares on a polynomial") {
    const auto xs = grid(-1, 1, 50);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2 - 3 * x + 0.5 * x * x);
    auto f = [](double x, const Eigen::VectorXd& p) { return p(0) + p(1) * x + p(2) * x * x; };
    const auto r = least_squares(f, xs, ys, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 1, 1));
    CHECK(r.converged);
    CHECK(r.params(0) == approx(2).epsilon(1e-9));
    CHECK(r.params(1) == approx(-3).epsilon(1e-9));
    CHECK(r.params(2) == approx(0.5).epsilon(1e-9));
}

TEST_CASE("periodogram frequency") {
    const auto xs = grid(0, 1e-6, 500);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(std::sin(two_pi * 7.3e6 * x));
    CHECK(dominant_frequency(xs, ys) == approx(7.3e6).epsilon(2e-3));
}
