#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pcurve/fexpr.hpp"

using namespace pcurve;
using fexpr::Env;
using fexpr::Expr;

namespace {

Env make_env(std::initializer_list<double> x, double z,
             std::initializer_list<double> nu) {
    Env env;
    env.x.resize(static_cast<Eigen::Index>(x.size()));
    Eigen::Index i = 0;
    for (double v : x) env.x[i++] = v;
    env.z = z;
    env.nu.resize(static_cast<Eigen::Index>(nu.size()));
    i = 0;
    for (double v : nu) env.nu[i++] = v;
    return env;
}

Env random_env(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    Env env;
    env.x.resize(n);
    for (int i = 0; i < n; ++i) env.x[i] = u(rng);
    env.z = u(rng);
    env.nu.resize(n + 1);
    for (int i = 0; i < n; ++i) env.nu[i] = 0.3 * u(rng);
    env.nu[n] = std::sqrt(std::max(0.1, 1.0 - env.nu.head(n).squaredNorm()));
    env.nu /= env.nu.norm();
    return env;
}

// Random expression tree built from the published grammar, for round-trip
// checks. Depth-limited; avoids log/sqrt so evaluation cannot leave the
// domain on random envs.
std::string random_source(std::mt19937_64& rng, int n, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 7 : 2);
    switch (pick(rng)) {
        case 0: {
            std::uniform_real_distribution<double> c(0.1, 3.0);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", c(rng));
            return buf;
        }
        case 1: {
            std::uniform_int_distribution<int> vi(1, n);
            const int which = std::uniform_int_distribution<int>(0, 3)(rng);
            if (which == 0) return "x" + std::to_string(vi(rng));
            if (which == 1) return "z";
            if (which == 2) return "r2";
            return "w";
        }
        case 2: return "nu" + std::to_string(std::uniform_int_distribution<int>(1, n + 1)(rng));
        case 3: return "(" + random_source(rng, n, depth - 1) + "+" +
                       random_source(rng, n, depth - 1) + ")";
        case 4: return "(" + random_source(rng, n, depth - 1) + "-" +
                       random_source(rng, n, depth - 1) + ")";
        case 5: return "(" + random_source(rng, n, depth - 1) + "*" +
                       random_source(rng, n, depth - 1) + ")";
        case 6: return "(-" + random_source(rng, n, depth - 1) + ")";
        default: return "exp(" + random_source(rng, n, depth - 1) + ")";
    }
}

} // namespace

TEST_CASE("parse and eval basics") {
    const Expr one = fexpr::parse("1", 3);
    CHECK(one.is_constant());
    CHECK(one.eval(Env{}) == 1.0);

    const Expr f = fexpr::parse("1 + r2", 3);
    CHECK(f.eval(make_env({0.3, 0.4, 0.0}, 0.0, {0, 0, 0, 1})) ==
          doctest::Approx(1.25));

    const Expr g = fexpr::parse("2/w", 3);
    CHECK(g.eval(make_env({0, 0, 0}, 0.0, {0, 0, 0, 1})) == doctest::Approx(2.0));
    // w = 1/nu4, so at nu4 = 0.5 the value doubles.
    CHECK(g.eval(make_env({0, 0, 0}, 0.0, {0.5, 0.5, 0.5, 0.5})) ==
          doctest::Approx(1.0));

    const Expr h = fexpr::parse("exp(z)", 2);
    CHECK(h.eval(make_env({0, 0}, -0.167, {0, 0, 1})) ==
          doctest::Approx(std::exp(-0.167)));

    CHECK(fexpr::parse("2^3^2", 2).eval(Env{}) == doctest::Approx(512.0));
    CHECK(fexpr::parse("2^(1+1)", 2).eval(Env{}) == doctest::Approx(4.0));
    // Unary minus is part of the power base: -x1^2 reads as (-x1)^2.
    CHECK(fexpr::parse("-x1^2", 2).eval(make_env({3, 0}, 0, {0, 0, 1})) ==
          doctest::Approx(9.0));
    CHECK(fexpr::parse("0 - x1^2", 2).eval(make_env({3, 0}, 0, {0, 0, 1})) ==
          doctest::Approx(-9.0));
    CHECK(fexpr::parse("sqrt(4)", 2).eval(Env{}) == doctest::Approx(2.0));
    CHECK(fexpr::parse("log(exp(1))", 2).eval(Env{}) == doctest::Approx(1.0));
}

TEST_CASE("parse errors carry byte offsets") {
    CHECK_THROWS_AS(fexpr::parse("1 +", 2), ParseError);
    CHECK_THROWS_AS(fexpr::parse("foo", 2), ParseError);
    CHECK_THROWS_AS(fexpr::parse("x3", 2), ParseError);
    CHECK_THROWS_AS(fexpr::parse("nu4", 2), ParseError);
    CHECK_THROWS_AS(fexpr::parse("2^x1", 2), ParseError);
    CHECK_THROWS_AS(fexpr::parse("(1+2", 2), ParseError);
    CHECK_THROWS_AS(fexpr::parse("1 2", 2), ParseError);
    CHECK_THROWS_AS(fexpr::parse("exp", 2), ParseError);

    try {
        fexpr::parse("1 + foo", 2);
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        CHECK(err.offset == 4);
    }
}

TEST_CASE("evaluation domain errors") {
    CHECK_THROWS_AS(fexpr::parse("log(z)", 2).eval(make_env({0, 0}, -1, {0, 0, 1})),
                    EvalDomainError);
    CHECK_THROWS_AS(fexpr::parse("sqrt(z)", 2).eval(make_env({0, 0}, -1, {0, 0, 1})),
                    EvalDomainError);
    CHECK_THROWS_AS(fexpr::parse("1/z", 2).eval(make_env({0, 0}, 0, {0, 0, 1})),
                    EvalDomainError);
}

TEST_CASE("symbolic partials on the named examples") {
    const Expr ez = fexpr::parse("exp(z)", 2);
    Env env = make_env({0.1, 0.2}, 0.4, {0.1, 0.1, 0.99});
    env.nu /= env.nu.norm();
    CHECK(ez.dz().eval(env) == doctest::Approx(ez.eval(env)));

    // d/dnu3 of 2/w = d/dnu3 of 2*nu3 = 2 (n = 2 here).
    const Expr f = fexpr::parse("2/w", 2);
    CHECK(f.dnu(2).eval(env) == doctest::Approx(2.0));
    CHECK(f.dnu(0).eval(env) == doctest::Approx(0.0));

    CHECK(fexpr::parse("1+r2", 2).dz().eval(env) == doctest::Approx(0.0));
}

TEST_CASE("partials match central finite differences") {
    std::mt19937_64 rng(99);
    const int n = 3;
    const char* sources[] = {
        "1 + r2*exp(z) + x1*x2 - nu1/w",
        "exp(z)*(1 + x3^2) + sqrt(4 + r2)",
        "2/w + z*z*nu2 - x2",
        "(1+z)^3 / (2 + nu4)",
    };
    for (const char* src : sources) {
        const Expr f = fexpr::parse(src, n);
        const auto parts = fexpr::partials(f);
        for (int rep = 0; rep < 25; ++rep) {
            Env env = random_env(rng, n);
            const double h = 1e-6;

            Env zp = env, zm = env;
            zp.z += h;
            zm.z -= h;
            const double fd_z = (f.eval(zp) - f.eval(zm)) / (2 * h);
            const double sym_z = parts.dz.eval(env);
            CHECK(std::abs(fd_z - sym_z) <= 1e-6 * std::max(1.0, std::abs(sym_z)));

            for (int j = 0; j <= n; ++j) {
                Env np = env, nm = env;
                np.nu[j] += h;
                nm.nu[j] -= h;
                const double fd = (f.eval(np) - f.eval(nm)) / (2 * h);
                const double sym = parts.dnu[j].eval(env);
                CHECK(std::abs(fd - sym) <= 1e-6 * std::max(1.0, std::abs(sym)));
            }
        }
    }
}

TEST_CASE("print/parse round trip preserves evaluation") {
    std::mt19937_64 rng(123);
    const int n = 3;
    for (int rep = 0; rep < 100; ++rep) {
        const std::string src = random_source(rng, n, 4);
        const Expr e = fexpr::parse(src, n);
        const Expr back = fexpr::parse(e.to_string(), n);
        for (int k = 0; k < 10; ++k) {
            const Env env = random_env(rng, n);
            const double a = e.eval(env);
            const double b = back.eval(env);
            CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("var_use reports variable groups") {
    const auto u = fexpr::parse("1 + r2 + nu1*w", 3).var_use();
    CHECK(u.r2);
    CHECK(u.w);
    CHECK(u.nu_lateral);
    CHECK_FALSE(u.nu_vertical);
    CHECK_FALSE(u.x);
    CHECK_FALSE(u.z);

    const auto v = fexpr::parse("x2 + nu4", 3).var_use();
    CHECK(v.x);
    CHECK(v.nu_vertical);
}

TEST_CASE("check_hypotheses on constants and exp(z)") {
    std::mt19937_64 rng(5);
    std::vector<Env> samples;
    for (int i = 0; i < 200; ++i) samples.push_back(random_env(rng, 3));

    const auto ok = fexpr::check_hypotheses(fexpr::parse("1", 3), samples);
    CHECK(ok.pass);
    CHECK(ok.min_f == doctest::Approx(1.0));
    CHECK(ok.min_fz == doctest::Approx(0.0));

    const auto mono = fexpr::check_hypotheses(fexpr::parse("exp(z)", 3), samples);
    CHECK(mono.pass);
    CHECK(mono.min_fz > 0.0);

    const auto bad = fexpr::check_hypotheses(fexpr::parse("-1", 3), samples);
    CHECK_FALSE(bad.pass);
    CHECK_FALSE(bad.f_positive);

    const auto decreasing =
        fexpr::check_hypotheses(fexpr::parse("1 - z", 3), samples);
    CHECK(decreasing.f_positive);
    CHECK_FALSE(decreasing.fz_nonnegative);
    CHECK_FALSE(decreasing.pass);
}
