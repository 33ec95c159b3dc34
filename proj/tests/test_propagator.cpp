#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nlft/propagator.hpp"

using namespace nlft;

namespace {

double mat_dist(const Mat2& A, const Mat2& B) {
    return std::max({std::abs(A.a11 - B.a11), std::abs(A.a12 - B.a12),
                     std::abs(A.a21 - B.a21), std::abs(A.a22 - B.a22)});
}

Potential random_piecewise(std::mt19937_64& rng, double max_support = 4.0) {
    std::uniform_int_distribution<int> np(1, 4);
    std::uniform_real_distribution<double> uq(-2.0, 2.0);
    std::uniform_real_distribution<double> ul(0.05, 1.0);
    const int n = np(rng);
    std::vector<double> breaks{0.0}, values;
    double len = 0.0;
    for (int i = 0; i < n; ++i) {
        len = std::min(len + ul(rng), max_support);
        breaks.push_back(len + 1e-3 * (i + 1));
        values.push_back(uq(rng));
    }
    return Potential::piecewise(breaks, values);
}

}  // namespace

TEST_CASE("step_exact free case at z = pi") {
    const Mat2 M = step_exact(0.0, 1.0, 3.14159265358979323846);
    // A = cos(tz), C = sin(tz); cos(pi) = -1
    CHECK(std::abs(M.a11 - cplx(-1.0)) < 1e-14);
    CHECK(std::abs(M.a12) < 1e-14);
    CHECK(std::abs(M.a21) < 1e-14);
    CHECK(std::abs(M.a22 - cplx(-1.0)) < 1e-14);
}

TEST_CASE("step_exact diagonal generator") {
    const Mat2 M = step_exact(1.0, 1.0, 0.0);
    CHECK(std::abs(M.a11 - std::exp(1.0)) < 1e-14);
    CHECK(std::abs(M.a22 - std::exp(-1.0)) < 1e-14);
    CHECK(std::abs(M.a12) < 1e-14);
    CHECK(std::abs(M.a21) < 1e-14);
}

TEST_CASE("step_exact nilpotent case omega = 0") {
    // q = z = 1: G^2 = 0, exp(G) = I + G = [[2, -1], [1, 0]]
    const Mat2 M = step_exact(1.0, 1.0, 1.0);
    CHECK(std::abs(M.a11 - cplx(2.0)) < 1e-14);
    CHECK(std::abs(M.a12 - cplx(-1.0)) < 1e-14);
    CHECK(std::abs(M.a21 - cplx(1.0)) < 1e-14);
    CHECK(std::abs(M.a22) < 1e-14);
}

TEST_CASE("series and direct branches agree around the threshold") {
    for (double mag : {0.5e-4, 0.9e-4, 1.1e-4, 2e-4, 1e-3}) {
        // omega^2 = q^2 - z^2 small: pick z close to q
        const double q = 1.0;
        const cplx z = std::sqrt(q * q - cplx(mag * mag, 0.3 * mag * mag));
        const Mat2 lo = step_exact(q, 1.0, z, 1e-4);
        const Mat2 hi = step_exact(q, 1.0, z, 0.9);  // forces the series branch
        CHECK(mat_dist(lo, hi) < 1e-13);
    }
}

TEST_CASE("free propagation closed form at complex z") {
    const Potential f = Potential::free_case();
    const cplx z(0.0, 1.0);
    const Mat2 M = propagate(f, 2.0, z).M;
    CHECK(std::abs(M.a11 - std::cosh(2.0)) < 1e-12);            // cos(2i) = cosh 2
    CHECK(std::abs(M.a21 - cplx(0.0, std::sinh(2.0))) < 1e-12); // sin(2i) = i sinh 2
}

TEST_CASE("single exact step for constant potential") {
    const Mat2 M = propagate(Potential::constant(1.0), 1.0, 0.0).M;
    CHECK(std::abs(M.a11 - std::exp(1.0)) < 1e-14);
    CHECK(std::abs(M.a22 - std::exp(-1.0)) < 1e-14);
}

TEST_CASE("determinant is 1 for random piecewise potentials") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ut(0.1, 4.0);
    std::uniform_real_distribution<double> uz(-5.0, 5.0);
    std::uniform_real_distribution<double> uy(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Potential f = random_piecewise(rng);
        const double t = ut(rng);
        // Entries grow like e^{|Im z| t}; keep |Im z| t <= 2 so the exact
        // cancellation in det is representable in doubles.
        const cplx z(uz(rng), uy(rng) / t);
        const Mat2 M = propagate(f, t, z).M;
        CHECK(std::abs(M.det() - 1.0) < 1e-12);
    }
}

TEST_CASE("conjugation symmetry M(t, conj z) = conj M(t, z)") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uz(-4.0, 4.0);
    const Potential f = random_piecewise(rng);
    for (int trial = 0; trial < 40; ++trial) {
        const cplx z(uz(rng), uz(rng));
        const Mat2 M = propagate(f, 2.5, z).M;
        const Mat2 Mc = propagate(f, 2.5, std::conj(z)).M;
        CHECK(std::abs(Mc.a11 - std::conj(M.a11)) < 1e-12);
        CHECK(std::abs(Mc.a12 - std::conj(M.a12)) < 1e-12);
        CHECK(std::abs(Mc.a21 - std::conj(M.a21)) < 1e-12);
        CHECK(std::abs(Mc.a22 - std::conj(M.a22)) < 1e-12);
    }
}

TEST_CASE("entries are real for real z") {
    std::mt19937_64 rng(17);
    const Potential f = random_piecewise(rng);
    const Mat2 M = propagate(f, 3.0, 1.7).M;
    CHECK(std::abs(M.a11.imag()) < 1e-13);
    CHECK(std::abs(M.a12.imag()) < 1e-13);
    CHECK(std::abs(M.a21.imag()) < 1e-13);
    CHECK(std::abs(M.a22.imag()) < 1e-13);
}

TEST_CASE("transfer matrix properties") {
    const Potential f = Potential::constant(1.0);

    SECTION("t1 = t2 gives the identity") {
        const Mat2 M = transfer(f, 1.0, 1.0, cplx(0.3, 0.1)).M;
        CHECK(mat_dist(M, Mat2::identity()) == 0.0);
    }

    SECTION("free transfer is a rotation by (t2 - t1) s") {
        const double s = 1.3;
        const Mat2 M = transfer(Potential::free_case(), 1.0, 2.0, s).M;
        CHECK(std::abs(M.a11 - std::cos(s)) < 1e-13);
        CHECK(std::abs(M.a12 + std::sin(s)) < 1e-13);
        CHECK(std::abs(M.a21 - std::sin(s)) < 1e-13);
        CHECK(std::abs(M.a22 - std::cos(s)) < 1e-13);
    }

    SECTION("composition equals direct propagation") {
        const cplx z(0.7, -0.2);
        const Mat2 direct = propagate(f.truncated(1.0), 1.0, z).M;
        const Mat2 composed = transfer(f.truncated(1.0), 0.5, 1.0, z).M *
                              propagate(f.truncated(1.0), 0.5, z).M;
        CHECK(mat_dist(direct, composed) < 1e-12);
    }
}

TEST_CASE("semigroup property for random piecewise potentials") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> ut(0.0, 4.0);
    std::uniform_real_distribution<double> uz(-3.0, 3.0);
    for (int trial = 0; trial < 40; ++trial) {
        const Potential f = random_piecewise(rng);
        double t1 = ut(rng), t2 = ut(rng);
        if (t1 > t2) std::swap(t1, t2);
        const cplx z(uz(rng), uz(rng) * 0.3);
        const Mat2 M2 = propagate(f, t2, z).M;
        const Mat2 C = transfer(f, t1, t2, z).M * propagate(f, t1, z).M;
        CHECK(mat_dist(M2, C) < 1e-10);
    }
}

TEST_CASE("semigroup is exact for grid-aligned smooth potentials") {
    // Substeps anchored to the absolute grid keep composition consistent.
    const Potential f = Potential::preset("powerdecay");
    PropagationOptions opts;
    opts.step_budget = 64;
    const cplx z(1.0, 0.2);
    const Mat2 M2 = propagate(f, 2.0, z, opts).M;
    const Mat2 C = transfer(f, 0.7, 2.0, z, opts).M * propagate(f, 0.7, z, opts).M;
    CHECK(mat_dist(M2, C) < 1e-10);
}

TEST_CASE("Richardson: midpoint discretization of smooth presets is order 2") {
    const Potential f = Potential::preset("powerdecay");
    const cplx z = 1.0;
    PropagationOptions fine;
    fine.step_budget = 2560;  // 10x finer reference
    const Mat2 ref = propagate(f, 1.0, z, fine).M;

    auto err = [&](int budget) {
        PropagationOptions o;
        o.step_budget = budget;
        return mat_dist(propagate(f, 1.0, z, o).M, ref);
    };
    const double e1 = err(64);
    const double e2 = err(128);
    CHECK(e1 / e2 >= 3.6);
}

TEST_CASE("dM/dz matches central finite differences") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uz(-3.0, 3.0);
    const Potential f = random_piecewise(rng);
    PropagationOptions dopts;
    dopts.with_derivative = true;
    for (int trial = 0; trial < 25; ++trial) {
        const cplx z(uz(rng), uz(rng) * 0.5);
        const Propagated p = propagate(f, 2.0, z, dopts);
        const double h = 1e-6 * (1.0 + std::abs(z));
        const Mat2 Mp = propagate(f, 2.0, z + h).M;
        const Mat2 Mm = propagate(f, 2.0, z - h).M;
        const double scale =
            std::max({std::abs(p.dM.a11), std::abs(p.dM.a12), std::abs(p.dM.a21),
                      std::abs(p.dM.a22), 1.0});
        auto fd = [&](cplx a, cplx b) { return (a - b) / (2.0 * h); };
        CHECK(std::abs(fd(Mp.a11, Mm.a11) - p.dM.a11) / scale < 1e-6);
        CHECK(std::abs(fd(Mp.a12, Mm.a12) - p.dM.a12) / scale < 1e-6);
        CHECK(std::abs(fd(Mp.a21, Mm.a21) - p.dM.a21) / scale < 1e-6);
        CHECK(std::abs(fd(Mp.a22, Mm.a22) - p.dM.a22) / scale < 1e-6);
    }
}

TEST_CASE("dM/dz near the branch cut and at omega = 0") {
    PropagationOptions dopts;
    dopts.with_derivative = true;
    const Potential f = Potential::constant(1.0);
    for (cplx z : {cplx(1.0, 1e-9), cplx(1.0 + 1e-9, 0.0), cplx(0.999999, 1e-7),
                   cplx(2.0, 1e-12)}) {
        const Propagated p = propagate(f, 1.0, z, dopts);
        const double h = 1e-6;
        const Mat2 Mp = propagate(f, 1.0, z + h).M;
        const Mat2 Mm = propagate(f, 1.0, z - h).M;
        CHECK(std::abs((Mp.a11 - Mm.a11) / (2.0 * h) - p.dM.a11) < 1e-5);
        CHECK(std::abs((Mp.a21 - Mm.a21) / (2.0 * h) - p.dM.a21) < 1e-5);
    }
}

TEST_CASE("sampled potential propagates as its midpoint-constant piecewise twin") {
    // samples at t = 0, 0.5, 1.0 own the cells [0, .25), [.25, .75), [.75, 1.25)
    const Potential smp = Potential::sampled(0.5, {1.0, 2.0, -1.0});
    const Potential pw =
        Potential::piecewise({0.0, 0.25, 0.75, 1.25}, {1.0, 2.0, -1.0});
    for (cplx z : {cplx(0.0), cplx(1.3, 0.2), cplx(-2.0, -0.4)}) {
        const Mat2 a = propagate(smp, 2.0, z).M;
        const Mat2 b = propagate(pw, 2.0, z).M;
        CHECK(mat_dist(a, b) < 1e-15);
    }
}

TEST_CASE("batch propagation is positional and thread-count independent") {
    const Potential f = Potential::piecewise({0.0, 0.5, 1.2}, {1.0, -0.7});
    std::vector<cplx> grid;
    for (int k = 0; k < 17; ++k) grid.emplace_back(-2.0 + 0.25 * k, 0.1 * (k % 3));
    const auto seq = propagate_batch(f, 1.2, grid, {}, 1);
    const auto par = propagate_batch(f, 1.2, grid, {}, 4);
    REQUIRE(seq.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(seq[i].M.a11 == par[i].M.a11);
        CHECK(seq[i].M.a21 == par[i].M.a21);
        CHECK(seq[i].W.E == par[i].W.E);
    }
}

TEST_CASE("real fast path agrees with the complex propagation") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> us(-8.0, 8.0);
    for (int trial = 0; trial < 30; ++trial) {
        const Potential f = random_piecewise(rng);
        const double s = us(rng);
        const Mat2 M = propagate(f, 2.0, s).M;
        const Mat2d R = propagate_real(f, 2.0, s);
        CHECK(std::abs(M.a11.real() - R.a11) < 1e-13 * std::max(1.0, std::abs(R.a11)));
        CHECK(std::abs(M.a12.real() - R.a12) < 1e-13 * std::max(1.0, std::abs(R.a12)));
        CHECK(std::abs(M.a21.real() - R.a21) < 1e-13 * std::max(1.0, std::abs(R.a21)));
        CHECK(std::abs(M.a22.real() - R.a22) < 1e-13 * std::max(1.0, std::abs(R.a22)));
    }
}
