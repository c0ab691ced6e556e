#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "dispersive/field.hpp"

using namespace dispersive;

namespace {

// Independent convolution oracle: enumerate all (m, j) with m + j = k rather
// than sliding one index, and drop the mean at the end.
FourierField convolution_oracle(const FourierField& f, const FourierField& g) {
    const int K = f.K();
    FourierField out(K);
    for (int k = 1; k <= K; ++k) {
        cplx acc{0, 0};
        for (int m = -K; m <= K; ++m)
            for (int j = -K; j <= K; ++j)
                if (m + j == k) acc += f.coeff(m) * g.coeff(j);
        out.set_mode(k, acc);
    }
    return out;
}

FourierField cosine(int K, int mode) {  // cos(mode x): c_{±mode} = 1/2
    FourierField f(K);
    f.set_mode(mode, {0.5, 0.0});
    return f;
}

FourierField sine(int K, int mode) {  // sin(mode x): c_mode = -i/2
    FourierField f(K);
    f.set_mode(mode, {0.0, -0.5});
    return f;
}

}  // namespace

TEST_CASE("norms of pure harmonics", "[field]") {
    // cos x: sqrt(2 * (1/2)^2) = 1/sqrt(2)
    CHECK(sobolev_norm(cosine(8, 1), 0.0) == Catch::Approx(0.7071067811865476).epsilon(1e-14));
    // sin 2x at s = 1: sqrt(2 * 2^2 * (1/2)^2) = sqrt(2)
    CHECK(sobolev_norm(sine(8, 2), 1.0) == Catch::Approx(1.4142135623730951).epsilon(1e-14));
    CHECK(sobolev_norm(FourierField(8), 3.0) == 0.0);
}

TEST_CASE("norm is monotone in the smoothness index", "[field]") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        FourierField f = random_field(32, 1.0, 2.0, seed);
        double prev = sobolev_norm(f, 0.0);
        for (double s : {0.5, 1.0, 2.0, 4.0, 6.0}) {
            double cur = sobolev_norm(f, s);
            CHECK(cur >= prev);
            prev = cur;
        }
    }
}

TEST_CASE("derivative shifts the norm index", "[field]") {
    FourierField f = random_field(24, 0.7, 3.0, 11);
    for (double s : {0.0, 1.0, 2.5}) {
        CHECK(sobolev_norm(derivative(f, 1), s) ==
              Catch::Approx(sobolev_norm(f, s + 1.0)).epsilon(1e-13));
    }
    // d/dx sin 2x = 2 cos 2x
    FourierField d = derivative(sine(8, 2), 1);
    CHECK(d.coeff(2).real() == Catch::Approx(1.0));
    CHECK(std::abs(d.coeff(2).imag()) < 1e-16);
    // d^2/dx^2 flips sign: (ik)^2 = -k^2
    FourierField d2 = derivative(cosine(8, 1), 2);
    CHECK(d2.coeff(1).real() == Catch::Approx(-0.5));
    CHECK_THROWS_AS(derivative(f, 0), std::invalid_argument);
}

TEST_CASE("product of cosines drops the mean", "[field]") {
    // cos^2 x = 1/2 + (1/2) cos 2x; the constant is projected away.
    FourierField c = cosine(8, 1);
    FourierField p = product(c, c);
    CHECK(p.coeff(2).real() == Catch::Approx(0.25).epsilon(1e-15));
    CHECK(std::abs(p.coeff(2).imag()) < 1e-16);
    CHECK(p.coeff(0) == cplx{0.0, 0.0});
    CHECK(std::abs(p.coeff(1)) < 1e-16);
    validate(p);
}

TEST_CASE("product matches the brute-force convolution oracle", "[field]") {
    FourierField f = random_field(64, 1.0, 1.5, 21);
    FourierField g = random_field(64, 0.8, 1.2, 22);
    FourierField fast = product(f, g);
    FourierField slow = convolution_oracle(f, g);
    double ref = sobolev_norm(slow, 0.0);
    CHECK(sobolev_norm(fast - slow, 0.0) <= 1e-13 * ref);
    validate(fast);
}

TEST_CASE("aliased product wraps high modes", "[field]") {
    // K = 2: modes 2 and 2 convolve to 4, which wraps to 4 - 5 = -1 on an
    // unpadded 5-point grid; the exact product has no output at |k| <= 2
    // from that pair except via truncation (nothing).
    FourierField f(2);
    f.set_mode(2, {0.5, 0.0});
    FourierField exact = product(f, f);
    FourierField wrapped = aliased_product(f, f);
    CHECK(std::abs(exact.coeff(1)) < 1e-16);
    CHECK(wrapped.coeff(1).real() == Catch::Approx(0.25));  // conj of the -1 image
    validate(wrapped);
}

TEST_CASE("field misuse is rejected", "[field]") {
    CHECK_THROWS_AS(FourierField(0), std::invalid_argument);
    CHECK_THROWS_AS(FourierField(513), std::invalid_argument);
    FourierField f(4), g(8);
    CHECK_THROWS_AS(product(f, g), std::invalid_argument);
    CHECK_THROWS_AS(f += g, std::invalid_argument);
    CHECK_THROWS_AS(f.set_mode(0, {1, 0}), std::out_of_range);
    CHECK_THROWS_AS(f.set_mode(5, {1, 0}), std::out_of_range);
    CHECK_THROWS_AS(f.coeff(9), std::out_of_range);
    CHECK_THROWS_AS(SobolevIndex(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(random_field(8, -1.0, 2.0, 1), std::invalid_argument);
}

TEST_CASE("random fields are reproducible and scale linearly", "[field]") {
    FourierField a = random_field(64, 1e-2, 8.0, 42);
    FourierField b = random_field(64, 1e-2, 8.0, 42);
    for (int k = 1; k <= 64; ++k) CHECK(a.coeff(k) == b.coeff(k));

    FourierField c = random_field(64, 2e-2, 8.0, 42);
    CHECK(sobolev_norm(c, 6.0) == Catch::Approx(2.0 * sobolev_norm(a, 6.0)).epsilon(1e-14));
    CHECK(std::isfinite(sobolev_norm(a, 6.0)));
    CHECK(sobolev_norm(a, 6.0) > 0.0);
    validate(a);

    FourierField d = random_field(64, 1e-2, 8.0, 43);
    CHECK(a.coeff(1) != d.coeff(1));
}

TEST_CASE("reflection conjugates coefficients", "[field]") {
    FourierField f = random_field(16, 1.0, 1.0, 5);
    FourierField r = reflect(f);
    for (int k = 1; k <= 16; ++k) CHECK(r.coeff(k) == std::conj(f.coeff(k)));
    validate(r);
}

TEST_CASE("JSON round trip and loader rejections", "[field]") {
    FourierField f = random_field(12, 0.3, 1.0, 9);
    FourierField g = field_from_json(to_json(f));
    CHECK(g.K() == f.K());
    for (int k = -12; k <= 12; ++k) CHECK(g.coeff(k) == f.coeff(k));

    nlohmann::json bad = {{"K", 4}, {"coeffs", {{0, 1.0, 0.0}}}};
    CHECK_THROWS_AS(field_from_json(bad), std::invalid_argument);
    bad = {{"K", 4}, {"coeffs", {{5, 1.0, 0.0}}}};
    CHECK_THROWS_AS(field_from_json(bad), std::invalid_argument);
    bad = {{"K", 4}, {"coeffs", {{2, 1.0, 0.0}, {2, 0.5, 0.0}}}};
    CHECK_THROWS_AS(field_from_json(bad), std::invalid_argument);
    bad = {{"K", 4}, {"coeffs", {{2, std::nan(""), 0.0}}}};
    CHECK_THROWS_AS(field_from_json(bad), std::invalid_argument);
    CHECK_THROWS_AS(field_from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST_CASE("arithmetic keeps invariants", "[field]") {
    FourierField f = random_field(10, 1.0, 1.0, 1);
    FourierField g = random_field(10, 0.5, 2.0, 2);
    FourierField h = 2.0 * (f + g) - f;
    validate(h);
    CHECK(h.coeff(3) == 2.0 * (f.coeff(3) + g.coeff(3)) - f.coeff(3));
}
