#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lep/error.hpp"
#include "lep/linalg.hpp"
#include "lep/models.hpp"
#include "support.hpp"

using namespace lep;
using namespace lep::models;
using linalg::Complex;
using linalg::ComplexMatrix;
using lep::test::max_abs;
using lep::test::Rng;

namespace {

const Complex I(0.0, 1.0);

// Printed Liouvillian of the detuned two-level atom with full recycling.
ComplexMatrix printed_detuned(double J, double delta, double G) {
    return ComplexMatrix{{0.0, I * J, -I * J, G},
                         {I * J, -G / 2.0 - I * delta, 0.0, -I * J},
                         {-I * J, 0.0, -G / 2.0 + I * delta, I * J},
                         {0.0, -I * J, I * J, -G}};
}

ComplexMatrix printed_coldatom(double J, double delta, double G, double g) {
    return ComplexMatrix{{0.0, I * J, -I * J, 0.0},
                         {I * J, -I * delta - (G + g) / 2.0, 0.0, -I * J},
                         {-I * J, 0.0, I * delta - (G + g) / 2.0, I * J},
                         {0.0, -I * J, I * J, -G}};
}

// Greedy multiset distance between two spectra.
double spectrum_distance(std::vector<Complex> a, std::vector<Complex> b) {
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < b.size(); ++k)
            if (std::abs(b[k] - x) < std::abs(b[best] - x)) best = k;
        worst = std::max(worst, std::abs(b[best] - x));
        b.erase(b.begin() + static_cast<long>(best));
    }
    return worst;
}

std::vector<Complex> eq7(double J, double G) {
    const Complex s = std::sqrt(Complex(G * G - 64.0 * J * J));
    return {0.0, -G / 2.0, (-3.0 * G + s) / 4.0, (-3.0 * G - s) / 4.0};
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("PT Hamiltonian") {
    CHECK(max_abs(pt_hamiltonian({0.0, 0.0})) == 0.0);
    const auto h = pt_hamiltonian({0.7, 0.4});
    CHECK(h(0, 1) == Complex(0.7));
    CHECK(h(1, 0) == Complex(0.7));
    CHECK(h(0, 0) == Complex(0.0, -0.2));
    CHECK(h(1, 1) == Complex(0.0, 0.2));

    auto ev = linalg::eigenvalues(pt_hamiltonian({0.4, 1.0}));
    CHECK(spectrum_distance(ev, {Complex(0.0, 0.3), Complex(0.0, -0.3)}) <= 1e-12);
    ev = linalg::eigenvalues(pt_hamiltonian({1.0, 1.0}));
    CHECK(spectrum_distance(ev, {std::sqrt(3.0) / 2.0, -std::sqrt(3.0) / 2.0}) <= 1e-12);
}

TEST_CASE("PT symmetry: sigma_x H* sigma_x == H") {
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const auto h = pt_hamiltonian({rng.uniform(0, 2), rng.uniform(0, 2)});
        CHECK(max_abs(sigma_x() * linalg::conjugate(h) * sigma_x() - h) == 0.0);
    }
}

TEST_CASE("encircling Hamiltonian") {
    EncirclePath p;
    p.cx = 0.5;
    p.radius = 0.1;
    p.period = 100.0;
    const auto [J, Om] = p.point(0.0);
    CHECK(J == doctest::Approx(0.6));
    CHECK(Om == doctest::Approx(0.0));
    CHECK(max_abs(encircle_hamiltonian(p, 1.0, 0.0) - encircle_hamiltonian_at(0.6, 0.0, 1.0)) <= 1e-15);

    SUBCASE("eigenvalues follow +-sqrt(r^2 + Gamma r e^{i w t})") {
        for (auto dir : {Direction::CCW, Direction::CW}) {
            p.direction = dir;
            for (int k = 0; k <= 64; ++k) {
                const double t = p.period * k / 64.0;
                const double s = dir == Direction::CCW ? 1.0 : -1.0;
                const Complex root = std::sqrt(0.01 + 0.1 * std::exp(I * (s * 2.0 * std::numbers::pi * t / p.period)));
                CHECK(spectrum_distance(linalg::eigenvalues(encircle_hamiltonian(p, 1.0, t)), {root, -root}) <= 1e-10);
            }
        }
    }
    SUBCASE("CW negates the angle") {
        EncirclePath q = p;
        q.direction = Direction::CW;
        q.phase0 = 0.3;
        p.phase0 = 0.3;
        CHECK(q.angle(17.0) - 0.3 == doctest::Approx(-(p.angle(17.0) - 0.3)));
    }
    SUBCASE("zero radius sits on the EP") {
        p.radius = 0.0;
        p.cx = 0.5;
        const auto d = linalg::eig(encircle_hamiltonian(p, 1.0, 12.0));
        CHECK(d.defective[0]);
        CHECK(d.defective[1]);
    }
    CHECK_THROWS_AS(encircle_hamiltonian(EncirclePath{.plane = Plane::DeltaJ}, 1.0, 0.0), InvalidInput);
}

TEST_CASE("path validation and plane names") {
    EncirclePath p;
    p.period = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p.period = 1.0;
    p.radius = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    for (auto pl : {Plane::JOmega, Plane::DeltaJ, Plane::OmegaDelta}) CHECK(parse_plane(to_string(pl)) == pl);
    CHECK_THROWS_AS(parse_plane("x-y"), InvalidInput);
    CHECK(parse_direction("ccw") == Direction::CCW);
    CHECK(parse_direction("cw") == Direction::CW);
}

TEST_CASE("cold-atom effective Hamiltonian") {
    const auto h0 = coldatom_heff({0.3, 0.7, 0.0, 0.0});
    CHECK(max_abs(h0 - linalg::adjoint(h0)) == 0.0);

    Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        const ColdAtomParams p{rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0, 1), 0.0};
        // H - (i/2) L^dag L with L = sqrt(Gamma)|4><2| seen from the {1, 2} block.
        const ComplexMatrix ldl{{0.0, 0.0}, {0.0, p.Gamma}};
        const auto expect = (p.delta / 2.0) * sigma_z() - p.coupling * sigma_x() - Complex(0.0, 0.5) * ldl;
        CHECK(max_abs(coldatom_heff(p) - expect) <= 1e-15);
    }

    // Scan the coupling at delta = 0: the splitting closes at Gamma / 4.
    const double G = 0.2;
    double best_c = 0.0, best_gap = 1e9;
    for (int k = 0; k <= 4000; ++k) {
        const double c = 0.1 * k / 4000.0;
        const auto ev = linalg::eigenvalues(coldatom_heff({0.0, c, G, 0.0}));
        const double gap = std::abs(ev[0] - ev[1]);
        if (gap < best_gap) best_gap = gap, best_c = c;
    }
    CHECK(best_c == doctest::Approx(G / 4.0).epsilon(1e-3));
    CHECK(best_gap <= 1e-6);
}

TEST_CASE("build_liouvillian reproduces the printed matrices") {
    Rng rng(7);
    for (int k = 0; k < 25; ++k) {
        const double J = rng.uniform(0, 2), G = rng.uniform(0, 2), d = rng.uniform(-1, 1), g = rng.uniform(0, 1);
        CHECK(max_abs(basic_liouvillian(J, G) - printed_detuned(J, 0.0, G)) <= 1e-15);
        CHECK(max_abs(detuned_liouvillian(J, d, G) - printed_detuned(J, d, G)) <= 1e-15);
        CHECK(max_abs(coldatom_liouvillian({d, J, G, g}) - printed_coldatom(J, d, G, g)) <= 1e-15);
    }
}

TEST_CASE("closed-system Liouvillian spectrum is +-i(E_a - E_b)") {
    Rng rng(9);
    for (int k = 0; k < 20; ++k) {
        const auto h = rng.hermitian(2);
        const auto e = linalg::eigvalsh(h);
        const auto ev = linalg::eigenvalues(build_liouvillian(h, {}));
        const double w = e[1] - e[0];
        CHECK(spectrum_distance(ev, {0.0, 0.0, Complex(0.0, w), Complex(0.0, -w)}) <= 1e-9);
    }
    const auto ev = linalg::eigenvalues(coldatom_liouvillian({0.3, 0.4, 0.0, 0.0}));
    for (auto z : ev) CHECK(std::abs(z.real()) <= 1e-10);
}

TEST_CASE("full recycling preserves the trace") {
    Rng rng(10);
    for (int k = 0; k < 30; ++k) {
        const auto h = rng.hermitian(2);
        const JumpTerm jumps[] = {{rng.matrix(2), false}, {rng.matrix(2), false}};
        const auto l = build_liouvillian(h, jumps);
        // vec(I)^dag L: rows 0 and 3 of the row-major vectorization.
        for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(l(0, c) + l(3, c)) <= 1e-12);
    }
}

TEST_CASE("dropping recycling only removes the L (x) L* block") {
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        const auto h = rng.hermitian(2);
        const auto op = rng.matrix(2);
        const JumpTerm keep[] = {{op, false}};
        const JumpTerm drop[] = {{op, true}};
        const auto diff = build_liouvillian(h, keep) - build_liouvillian(h, drop);
        CHECK(max_abs(diff - linalg::kron(op, linalg::conjugate(op))) <= 1e-14);
    }
    const JumpTerm bad[] = {{ComplexMatrix(3), false}};
    CHECK_THROWS_AS(build_liouvillian(ComplexMatrix(2), bad), DimensionMismatch);
}

TEST_CASE("basic Liouvillian spectrum matches the closed form on 100 random (J, Gamma)") {
    Rng rng(13);
    for (int k = 0; k < 100; ++k) {
        const double J = rng.uniform(1e-3, 2.0), G = rng.uniform(1e-3, 2.0);
        CHECK(spectrum_distance(linalg::eigenvalues(basic_liouvillian(J, G)), eq7(J, G)) <= 1e-10);
    }
}

TEST_CASE("cold-atom Liouvillian steady states") {
    // Without L1 the trace is conserved and lambda = 0 exists.
    auto ev = linalg::eigenvalues(coldatom_liouvillian({0.2, 0.5, 0.0, 0.01}));
    double m = 1e9;
    for (auto z : ev) m = std::min(m, std::abs(z));
    CHECK(m <= 1e-12);
    Rng rng(14);
    for (int k = 0; k < 50; ++k) {
        ev = linalg::eigenvalues(coldatom_liouvillian({rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0.01, 1), rng.uniform(0, 1)}));
        m = 1e9;
        for (auto z : ev) m = std::min(m, std::abs(z));
        CHECK(m > 1e-6);
    }
}

TEST_CASE("perturbed EP splitting") {
    const auto [a0, b0] = perturbed_ep_splitting({0.5, 1.0}, {0.0});
    CHECK(std::abs(a0) == 0.0);
    CHECK(std::abs(b0) == 0.0);
    const auto [a, b] = perturbed_ep_splitting({0.5, 1.0}, {1e-4});
    CHECK(a.real() == doctest::Approx(std::sqrt(1e-4 * 1.0001)).epsilon(1e-9));
    CHECK(b.real() == doctest::Approx(-std::sqrt(1e-4 * 1.0001)).epsilon(1e-9));

    // Against the eigensolver.
    for (double eps : {1e-6, 1e-4, 1e-2, 0.3}) {
        const auto [p, q] = perturbed_ep_splitting({0.5, 1.0}, {eps});
        const auto ev = linalg::eigenvalues(pt_hamiltonian({0.5, 1.0}) + eps * sigma_x());
        CHECK(spectrum_distance(ev, {p, q}) <= 1e-9 * std::abs(p) + 1e-12);
        CHECK(std::abs(p) == doctest::Approx(std::sqrt(eps * (1.0 + eps))).epsilon(1e-9));
    }

    // Log-log slope over eps in [1e-8, 1e-2].
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = 25;
    for (int k = 0; k < n; ++k) {
        const double eps = std::pow(10.0, -8.0 + 6.0 * k / (n - 1));
        const auto [p, q] = perturbed_ep_splitting({0.5, 1.0}, {eps});
        const double x = std::log(eps), y = std::log(std::abs(p - q));
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::abs(slope - 0.5) <= 0.01);
    CHECK_THROWS_AS(perturbed_ep_splitting({0.4, 1.0}, {1e-3}), InvalidInput);
}

TEST_CASE("catalog") {
    for (const char* name : {"pt", "encircle", "coldatom_heff", "coldatom_liouvillian", "basic_liouvillian",
                             "detuned_liouvillian"}) {
        CHECK(model_info(name).name == name);
    }
    CHECK_THROWS_AS(model_info("nope"), UnknownModel);

    const auto& info = model_info("coldatom_liouvillian");
    CHECK(canonical_param(info, "Omega") == "J");
    CHECK_THROWS_AS(canonical_param(info, "Delta"), InvalidInput);

    const ParamMap ok{{"delta", 0.1}, {"Omega", 0.4}, {"Gamma", 0.05}, {"gamma", 0.01}};
    CHECK(max_abs(build_model("coldatom_liouvillian", ok) - coldatom_liouvillian({0.1, 0.4, 0.05, 0.01})) == 0.0);
    CHECK_THROWS_AS(resolve_params(info, {{"delta", 0.1}, {"Gamma", 0.05}, {"gamma", 0.01}}), InvalidInput);
    CHECK_THROWS_AS(resolve_params(info, {{"delta", 0.1}, {"J", 0.4}, {"Omega", 0.4}, {"Gamma", 0.05}, {"gamma", 0.01}}),
                    InvalidInput);
    CHECK_THROWS_AS(resolve_params(info, {{"delta", 0.1}, {"J", 0.4}, {"Gamma", 0.05}, {"gamma", 0.01}, {"x", 1.0}}),
                    InvalidInput);
    CHECK_THROWS_AS(resolve_params(info, {{"delta", NAN}, {"J", 0.4}, {"Gamma", 0.05}, {"gamma", 0.01}}), InvalidInput);

    CHECK(max_abs(build_model("pt", {{"J", 1.0}, {"Gamma", 1.0}}) - pt_hamiltonian({1.0, 1.0})) == 0.0);
    CHECK(max_abs(build_model("encircle", {{"J", 0.6}, {"Omega", 0.1}, {"Gamma", 1.0}}) -
                  encircle_hamiltonian_at(0.6, 0.1, 1.0)) == 0.0);
}

}  // TEST_SUITE
