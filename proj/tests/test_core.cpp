#include "optosqueeze/core.hpp"

#include <doctest.h>

using namespace optosqueeze;

namespace {

std::string failing_field(const SystemParams& p) {
    try {
        validate_params(p);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidParameter);
        return e.field();
    }
    return {};
}

} // namespace

TEST_CASE("default parameter set validates") {
    SystemParams p;
    CHECK(p.g0 == 4e-5);
    CHECK(p.kappa == 0.2);
    CHECK(p.gamma == 2e-6);
    CHECK(p.delta_c == 1.0);
    CHECK(p.n_bar_m == 100.0);
    CHECK_NOTHROW(validate_params(p));
}

TEST_CASE("invalid parameters name the offending field") {
    SystemParams p;
    p.kappa = 0.0;
    CHECK(failing_field(p) == "kappa");

    p = SystemParams{};
    p.n_bar_m = -1.0;
    CHECK(failing_field(p) == "n_bar_m");

    p = SystemParams{};
    p.gamma = -1e-6;
    CHECK(failing_field(p) == "gamma");

    p = SystemParams{};
    p.g0 = -1.0;
    CHECK(failing_field(p) == "g0");

    p = SystemParams{};
    p.omega_m = 0.0;
    CHECK(failing_field(p) == "omega_m");

    p = SystemParams{};
    p.gamma = 0.0;
    p.g0 = 0.0;
    p.n_bar_m = 0.0;
    CHECK(failing_field(p).empty());
}

TEST_CASE("error kinds have stable names") {
    CHECK(to_string(ErrorKind::InvalidParameter) == "invalid-parameter");
    CHECK(to_string(ErrorKind::Overflow) == "overflow");
    CHECK(to_string(ErrorKind::IllConditioned) == "ill-conditioned");
    CHECK(to_string(ErrorKind::Nonphysical) == "nonphysical");
    CHECK(to_string(ErrorKind::Domain) == "domain");
    CHECK(to_string(ErrorKind::SingularCovariance) == "singular-covariance");
    CHECK(to_string(ErrorKind::Diverged) == "diverged");
    CHECK(to_string(ErrorKind::TruncationBreach) == "truncation-breach");
}

TEST_CASE("thermal initial moments") {
    SystemParams p;
    MomentVector x = thermal_initial_moments(p);
    CHECK(x[kBdB] == cd(100.0, 0.0));
    for (int i = 0; i < 10; ++i) {
        if (i != kBdB) CHECK(x[i] == cd(0.0, 0.0));
    }
    CHECK(conjugacy_violation(x) == 0.0);

    p.n_bar_m = 0.0;
    CHECK(thermal_initial_moments(p).isZero(0.0));

    p.n_bar_m = 0.5;
    x = thermal_initial_moments(p);
    CHECK(x[kBdB] == cd(0.5, 0.0));
    CHECK(satisfies_moment_invariants(x));
}

TEST_CASE("conjugacy invariants detect broken pairs") {
    MomentVector x = thermal_moments(3.0);
    x[kAdB] = cd(0.1, 0.2);
    x[kABd] = cd(0.1, -0.2);
    x[kBdBd] = cd(-0.3, 0.05);
    x[kBB] = cd(-0.3, -0.05);
    CHECK(satisfies_moment_invariants(x));

    MomentVector bad = x;
    bad[kBB] = cd(-0.3, 0.05);
    CHECK_FALSE(satisfies_moment_invariants(bad));
    CHECK(satisfies_moment_invariants(symmetrize(bad)));
    CHECK(conjugacy_violation(symmetrize(x)) == doctest::Approx(0.0));

    MomentVector imag_pop = x;
    imag_pop[kBdB] += cd(0.0, 1e-3);
    CHECK_FALSE(satisfies_moment_invariants(imag_pop));

    MomentVector negative = x;
    negative[kAdA] = cd(-1e-3, 0.0);
    CHECK_FALSE(satisfies_moment_invariants(negative));
}

TEST_CASE("pulse validation") {
    CHECK_NOTHROW(validate_pulse(Pulse::constant(1.0, 2, 1.0, 0.0)));
    CHECK_THROWS_AS(validate_pulse(Pulse::constant(1.0, 1, 1.0, 0.0)), Error);
    CHECK_THROWS_AS(validate_pulse(Pulse::constant(0.0, 4, 1.0, 0.0)), Error);
    Pulse mismatched(1.0, {1.0, 2.0, 3.0}, {0.0, 0.0});
    CHECK_THROWS_AS(validate_pulse(mismatched), Error);

    const Pulse p = Pulse::constant(2.0, 4, -3.0, 7.5);
    CHECK(p.n_bins() == 4);
    CHECK(p.bin_width() == 0.5);
    CHECK(p.bin_start(3) == 1.5);
    CHECK(p.omega[0] == -3.0); // negative amplitudes are stored as given
    CHECK(p.phi[0] == 7.5);    // phases are not wrapped
}

TEST_CASE("mean-field helpers") {
    SystemParams p;
    MeanFieldState s{cd(100.0, -50.0), cd(2.0, 3.0)};
    CHECK(coupling(s, p) == cd(4e-3, -2e-3));
    CHECK(detuning(s, p) == doctest::Approx(1.0 + 2.0 * 4e-5 * 2.0));
    CHECK(s.finite());
    s.beta = cd(std::nan(""), 0.0);
    CHECK_FALSE(s.finite());
}
