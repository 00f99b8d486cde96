#include <doctest.h>

#include "property_suites.hpp"

namespace {

constexpr int kCases = 100;

void require_clean(const suites::Outcome& o) {
    INFO(o.first_failure);
    CHECK(o.cases >= kCases);
    CHECK(o.failures == 0);
}

}  // namespace

TEST_CASE("maximum principle for the linear scheme") { require_clean(suites::maximum_principle(kCases)); }

TEST_CASE("comparison principle") { require_clean(suites::comparison_principle(kCases)); }

TEST_CASE("growth is bounded by exp(M d t) times the linear solution") {
    require_clean(suites::linear_domination(kCases));
}

TEST_CASE("sup norm of the linear solution never increases") { require_clean(suites::monotone_linear_sup(kCases)); }

TEST_CASE("bitwise reproducible solves and Monte Carlo") { require_clean(suites::reproducibility(kCases)); }

TEST_CASE("suites detect a broken invariant") {
    // A field pushed outside its range by hand must be caught by the same check.
    suites::Outcome o;
    o.cases = 1;
    o.fail(0, "synthetic");
    CHECK(o.failures == 1);
    CHECK(o.first_failure == "case 0: synthetic");
}
