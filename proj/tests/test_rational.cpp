#include <doctest.h>

#include <limits>
#include <sstream>
#include <stdexcept>

#include "singular_bound/rational.hpp"

using sb::Rational;

TEST_CASE("rational values are kept in lowest terms with a positive denominator") {
    const Rational a(6, -4);
    CHECK(a.num() == -3);
    CHECK(a.den() == 2);
    CHECK(Rational(0, -7) == Rational(0));
    CHECK(Rational(0, -7).den() == 1);
    CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
}

TEST_CASE("rational arithmetic matches hand computation") {
    const Rational half(1, 2), third(1, 3);
    CHECK(half + third == Rational(5, 6));
    CHECK(half - third == Rational(1, 6));
    CHECK(half * third == Rational(1, 6));
    CHECK(half / third == Rational(3, 2));
    CHECK(-half == Rational(-1, 2));
    CHECK(Rational(9, 2) - Rational(1, 2) == Rational(4));
    CHECK((Rational(9, 2) - Rational(4)).to_double() == doctest::Approx(0.5));
    CHECK_THROWS(half / Rational(0));
}

TEST_CASE("rational ordering is exact") {
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(Rational(-1, 2) < Rational(-1, 3));
    CHECK(Rational(15, 8) < Rational(2));
    CHECK(Rational(2, 4) == Rational(1, 2));
    // 1/3 and 333333333333333333/10^18 differ only past double precision.
    CHECK(Rational(333333333333333333LL, 1000000000000000000LL) < Rational(1, 3));
}

TEST_CASE("rational text form") {
    CHECK(Rational(9, 2).to_string() == "9/2");
    CHECK(Rational(4).to_string() == "4");
    CHECK(Rational(-15, 8).to_string() == "-15/8");
    std::ostringstream os;
    os << Rational(1, 4);
    CHECK(os.str() == "1/4");
    CHECK(Rational(8, 2).is_integer());
}

TEST_CASE("rational overflow is reported, not wrapped") {
    const Rational big(std::numeric_limits<std::int64_t>::max() / 2 + 1);
    CHECK_THROWS_AS(big * Rational(4), std::overflow_error);
    CHECK_THROWS_AS(Rational(1, std::numeric_limits<std::int64_t>::max()) * Rational(1, 3), std::overflow_error);
    // Cross-cancellation keeps this representable.
    const Rational a(std::numeric_limits<std::int64_t>::max(), 3);
    CHECK(a * Rational(3, std::numeric_limits<std::int64_t>::max()) == Rational(1));
}
