#include <doctest.h>

#include <random>

#include "qce/model.hpp"

using namespace qce;

namespace {

Monomial powers(std::vector<unsigned> p) { return Monomial::from_powers(p); }

} // namespace

TEST_SUITE("model") {

TEST_CASE("SHG preset has the expected terms") {
    ChiTwoParameters p;
    p.g = 0.4;
    p.drive = 6.0;
    const ModelSpec m = shg_model(p);
    CHECK(m.mode_count() == 2);
    CHECK(m.label() == "shg");
    const auto& h = m.hamiltonian();
    CHECK(h.size() == 4);
    CHECK(h.coefficient(powers({2, 0, 0, 1})) == Complex(0.4));
    CHECK(h.coefficient(powers({0, 2, 1, 0})) == Complex(0.4));
    CHECK(h.coefficient(Monomial::annihilation(kModeA)) == Complex(6.0));
    CHECK(h.coefficient(Monomial::creation(kModeA)) == Complex(6.0));
    REQUIRE(m.dissipators().size() == 2);
    CHECK(m.dissipators()[0].jump == Monomial::annihilation(kModeA));
    CHECK(m.dissipators()[1].jump == Monomial::annihilation(kModeB));
}

TEST_CASE("OPO preset drives mode b") {
    ChiTwoParameters p;
    p.g = 0.24;
    p.drive = 20.0;
    p.kappa_b = 2.0;
    const ModelSpec m = opo_model(p);
    const auto& h = m.hamiltonian();
    CHECK(h.size() == 4);
    CHECK(h.coefficient(Monomial::annihilation(kModeB)) == Complex(20.0));
    CHECK(h.coefficient(Monomial::creation(kModeB)) == Complex(20.0));
    CHECK(h.coefficient(Monomial::annihilation(kModeA)) == Complex(0.0));
    CHECK(m.dissipators()[1].rate == 2.0);
}

TEST_CASE("detunings enter as number operators") {
    ChiTwoParameters p;
    p.g = 0.1;
    p.drive = 1.0;
    p.detuning_a = 0.5;
    p.detuning_b = -0.25;
    const OperatorPoly h = shg_model(p).hamiltonian();
    CHECK(h.size() == 6);
    CHECK(h.coefficient(Monomial::number(kModeA)) == Complex(0.5));
    CHECK(h.coefficient(Monomial::number(kModeB)) == Complex(-0.25));
}

TEST_CASE("uncoupled undriven model is empty") {
    const ModelSpec m = shg_model({});
    CHECK(m.hamiltonian().is_zero());
    CHECK(m.dissipators().size() == 2);
}

TEST_CASE("preset Hamiltonians are Hermitian for random parameters") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 5.0), d(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        ChiTwoParameters p{u(rng), u(rng), 0.1 + u(rng), 0.1 + u(rng), d(rng), d(rng)};
        for (const ModelSpec& m : {shg_model(p), opo_model(p)}) {
            CHECK(adjoint(m.hamiltonian()).approx_equal(m.hamiltonian(), 0.0));
        }
    }
}

TEST_CASE("validation") {
    ChiTwoParameters p;
    p.kappa_a = 0.0;
    CHECK_THROWS_AS(shg_model(p), std::invalid_argument);
    p.kappa_a = 1.0;
    p.kappa_b = -1.0;
    CHECK_THROWS_AS(opo_model(p), std::invalid_argument);
    p.kappa_b = 1.0;
    p.g = -0.1;
    CHECK_THROWS_AS(shg_model(p), std::invalid_argument);

    const OperatorPoly lopsided = parse_word("a+^2 b");
    CHECK_THROWS_AS(ModelSpec(2, lopsided, {}, "bad"), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec(0, OperatorPoly{}, {}, "none"), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec(1, parse_word("b+ b"), {}, "range"), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec(1, OperatorPoly{}, {{1.0, Monomial{}}}, "identity jump"), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec(1, OperatorPoly{}, {{0.0, Monomial::annihilation(kModeA)}}, "rate"), std::invalid_argument);
    CHECK_NOTHROW(ModelSpec(1, parse_word("a+ a") * 2.0, {{1.0, Monomial::annihilation(kModeA)}}, "ok"));
}

TEST_CASE("conjugate model negates and conjugates H") {
    const OperatorPoly h =
        parse_word("a+ a") + parse_word("a+ b") * Complex(0.0, 1.0) + parse_word("b+ a") * Complex(0.0, -1.0);
    const ModelSpec m(2, h, {{1.0, Monomial::annihilation(kModeA)}}, "hop");
    const ModelSpec c = conjugate_model(m);
    CHECK(c.hamiltonian().approx_equal(-1.0 * parse_word("a+ a") + parse_word("a+ b") * Complex(0.0, 1.0) +
                                       parse_word("b+ a") * Complex(0.0, -1.0)));
    CHECK(c.label() == "hop*");
    CHECK(c.dissipators().size() == 1);
}

} // TEST_SUITE
