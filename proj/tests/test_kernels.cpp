#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "singular_bound/config.hpp"
#include "singular_bound/errors.hpp"
#include "singular_bound/io.hpp"
#include "singular_bound/kernels.hpp"
#include "singular_bound/quadrature.hpp"
#include "singular_bound/rng.hpp"
#include "singular_bound/svg_plot.hpp"

using namespace sb;

TEST_CASE("compensated sum recovers small terms lost by naive summation") {
    KahanSum k;
    double naive = 0.0;
    k.add(1.0);
    naive += 1.0;
    for (int i = 0; i < 1000000; ++i) {
        k.add(1e-16);
        naive += 1e-16;
    }
    CHECK(naive == 1.0);
    CHECK(k.value() == doctest::Approx(1.0 + 1e-10).epsilon(1e-14));
}

TEST_CASE("chunked sums are bit-identical between serial and parallel execution") {
    auto f = [](std::size_t i) { return std::sin(static_cast<double>(i)) / (1.0 + static_cast<double>(i)); };
    const double serial = chunked_sum(100003, 1000, f, Exec::serial);
    for (int threads : {1, 2, 3, 4}) {
        set_thread_count(threads);
        CHECK(chunked_sum(100003, 1000, f, Exec::parallel) == serial);
    }
    set_thread_count(1);
    CHECK(chunked_sum(0, 10, f) == 0.0);
}

TEST_CASE("map_chunks rethrows the first worker exception") {
    auto fn = [](std::size_t c) -> int {
        if (c == 3) throw DiagnosticError("chunk 3");
        return static_cast<int>(c);
    };
    CHECK_THROWS_AS(map_chunks<int>(8, fn, Exec::parallel), DiagnosticError);
    const auto ok = map_chunks<int>(5, [](std::size_t c) { return static_cast<int>(c * c); }, Exec::parallel);
    CHECK(ok == std::vector<int>{0, 1, 4, 9, 16});
}

TEST_CASE("batch means: iid data give a standard error near sigma/sqrt(N)") {
    Rng rng(11, 0);
    std::vector<double> v(40000);
    for (double& x : v) x = rng.normal();
    const auto ms = batch_means(v, 20);
    CHECK(std::abs(ms.mean) < 4.0 / 200.0);
    CHECK(ms.std_err == doctest::Approx(1.0 / 200.0).epsilon(0.4));
    CHECK(batch_means_ess(v, 20) > 10000.0);
    const std::vector<double> constant(100, 2.5);
    CHECK(batch_means(constant).mean == 2.5);
    CHECK(batch_means(constant).std_err == 0.0);
}

TEST_CASE("batch means: strongly correlated data inflate the standard error") {
    Rng rng(12, 0);
    std::vector<double> v(40000);
    double x = 0.0;
    for (double& y : v) y = x = 0.99 * x + rng.normal();
    // AR(1) with phi = 0.99: asymptotic variance of the mean is var / N * (1+phi)/(1-phi).
    const double var = 1.0 / (1.0 - 0.99 * 0.99);
    const double iid_se = std::sqrt(var / 40000.0);
    CHECK(batch_means(v, 20).std_err > 5.0 * iid_se);
}

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(5, 1), b(5, 1), c(5, 2);
    bool all_same = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a(), y = b(), z = c();
        all_same = all_same && x == y;
        any_diff = any_diff || x != z;
    }
    CHECK(all_same);
    CHECK(any_diff);
    CHECK(label_hash("data") != label_hash("chain"));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}

TEST_CASE("rng uniform and normal moments") {
    Rng rng(99, 7);
    const int N = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < N; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(std::abs(su / N - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / N));
    CHECK(std::abs(sn / N) < 4.0 / std::sqrt(N));
    CHECK(std::abs(sn2 / N - 1.0) < 4.0 * std::sqrt(2.0 / N));
    std::vector<int> counts(6, 0);
    for (int i = 0; i < 60000; ++i) ++counts[rng.below(6)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
    for (std::size_t order : {1u, 2u, 5u, 8u, 16u}) {
        const auto rule = gauss_legendre(order);
        double wsum = 0.0;
        for (double w : rule.weights) wsum += w;
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
        for (std::size_t p = 0; p < 2 * order; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < order; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], p);
            const double exact = p % 2 ? 0.0 : 2.0 / static_cast<double>(p + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-13));
        }
    }
}

TEST_CASE("composite rule and tensor integral against closed forms") {
    const auto rule = composite_gauss_legendre(0.0, 1.0, 64);
    CHECK(rule.nodes.size() == 64);
    CHECK_THROWS(composite_gauss_legendre(0.0, 1.0, 60));
    const Integrand e2 = [](std::span<const double> u) { return std::exp(-u[0] - 2.0 * u[1]); };
    const double exact2 = (1.0 - std::exp(-1.0)) * (1.0 - std::exp(-2.0)) / 2.0;
    CHECK(tensor_integral(e2, 2, rule, Exec::serial) == doctest::Approx(exact2).epsilon(1e-13));
    const Integrand p3 = [](std::span<const double> u) { return u[0] * u[1] * u[1] * u[2] * u[2] * u[2]; };
    CHECK(tensor_integral(p3, 3, composite_gauss_legendre(0.0, 1.0, 8), Exec::serial) ==
          doctest::Approx(1.0 / 24.0).epsilon(1e-14));
}

TEST_CASE("tensor integral is bit-identical between serial and parallel execution") {
    const auto rule = composite_gauss_legendre(0.0, 1.0, 128);
    const Integrand f = [](std::span<const double> u) { return std::exp(-300.0 * u[0] * u[0] * u[1] * u[1]); };
    const double serial = tensor_integral(f, 2, rule, Exec::serial);
    for (int threads : {1, 2, 4}) {
        set_thread_count(threads);
        CHECK(tensor_integral(f, 2, rule, Exec::parallel) == serial);
    }
    set_thread_count(1);
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, std::numbers::pi})
        CHECK(parse_double(format_double(v)) == v);
    CHECK(format_double(NAN) == "nan");
    CHECK(parse_int(" 42 ") == 42);
    CHECK_THROWS(parse_double("1.5x"));
    CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(trim("  x y \t") == "x y");
}

TEST_CASE("config documents parse, reject junk and print canonically") {
    const auto c = Config::parse("# comment\nmodel.family = completion  # trailing\n\ngrid.n = 50, 150,500\nseed=7\n");
    CHECK(c.get_string("model.family", "") == "completion");
    CHECK(c.get_doubles("grid.n", {}) == std::vector<double>{50, 150, 500});
    CHECK(c.get_seed("seed", 0) == 7);
    CHECK(c.get_double("missing", 1.5) == 1.5);
    CHECK(c.to_text() == "grid.n = 50, 150,500\nmodel.family = completion\nseed = 7\n");
    CHECK(Config::parse(c.to_text()).values() == c.values());
    CHECK_THROWS_AS(Config::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(c.check_keys({"seed", "grid.n"}), ConfigError);
    CHECK_NOTHROW(c.check_keys({"seed", "grid.n", "model.family"}));
    CHECK_THROWS_AS(Config::parse("x = abc").get_double("x", 0), ConfigError);
}

TEST_CASE("svg plot contains both series and skips nonpositive points") {
    LogLogPlot plot("t", "n", "risk");
    plot.add({"risk", {10, 100, 1000}, {0.1, 0.01, -1.0}, "#000000", false});
    plot.add({"bound", {10, 100, 1000}, {1, 0.5, 0.2}, "#ff0000", true});
    const auto svg = plot.to_svg();
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("risk") != std::string::npos);
    CHECK(svg.find("bound") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}
