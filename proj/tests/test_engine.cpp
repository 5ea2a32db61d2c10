#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "slowpolar/branch_engine.hpp"
#include "slowpolar/oracle.hpp"

using namespace slowpolar;
using Catch::Approx;

namespace {

// Fully explicit sum over input completions and state paths:
//   b_phase(t, s') = P(Y_{phase+1..len-1}, S_{len-1} = s' | S_phase = t).
double backward_brute(const HmmProcess& proc, const std::vector<int>* y, index_t len, index_t phase,
                      int t, int sp) {
    const index_t suffix = len - 1 - phase;
    if (suffix == 0) return t == sp ? 1.0 : 0.0;
    const int S = proc.num_states();
    double total = 0.0;
    for (std::uint64_t xw = 0; xw < (std::uint64_t{1} << suffix); ++xw) {
        std::vector<int> states(static_cast<std::size_t>(suffix), 0);
        while (true) {
            double prob = 1.0;
            int cur = t;
            for (index_t k = 0; k < suffix; ++k) {
                const int x = static_cast<int>((xw >> k) & 1u);
                const std::optional<int> yk =
                    y ? std::optional<int>((*y)[static_cast<std::size_t>(phase + 1 + k)]) : std::nullopt;
                prob *= proc.emission(cur, x, yk, states[static_cast<std::size_t>(k)]);
                cur = states[static_cast<std::size_t>(k)];
            }
            if (cur == sp) total += prob;
            std::size_t pos = 0;
            while (pos < states.size() && ++states[pos] == S) {
                states[pos] = 0;
                ++pos;
            }
            if (pos == states.size()) break;
        }
    }
    return total;
}

void check_tables_proportional(const ProbDatum& got, const oracle::DatumTable& want, double tol) {
    const int S = got.num_states();
    double got_sum = 0.0, want_sum = 0.0;
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp) {
                got_sum += got.at(u, s, sp);
                want_sum += want.at(u, s, sp);
            }
    REQUIRE(got_sum > 0.0);
    REQUIRE(want_sum > 0.0);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp) {
                const double a = got.at(u, s, sp) / got_sum;
                const double b = want.at(u, s, sp) / want_sum;
                CHECK(std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300}));
            }
}

} // namespace

TEST_CASE("backward messages: deterministic single-state process", "[engine]") {
    // X pinned to 0 and emitted noiselessly: consistent suffixes have
    // probability one, anything else zero.
    const HmmProcess det(1, 2, {1.0}, std::vector<double>{1.0, 0.0, 0.0, 0.0});
    std::vector<int> good{0, 0, 0, 0};
    BranchContext ctx(det, std::span<const int>(good), 4);
    for (index_t phi = 0; phi < 4; ++phi) CHECK(ctx.backward(phi, 0, 0) == Approx(1.0));

    std::vector<int> bad{0, 0, 1, 0};
    BranchContext ctx_bad(det, std::span<const int>(bad), 4);
    CHECK(ctx_bad.backward(0, 0, 0) == Approx(0.0));
    CHECK(ctx_bad.backward(2, 0, 0) == Approx(1.0)); // inconsistency already behind
}

TEST_CASE("backward messages with absent observations are chain powers", "[engine]") {
    const HmmProcess ge = gilbert_elliott(0.2, 0.4, 0.1, 0.3);
    BranchContext ctx(ge, std::nullopt, 5);
    // One-step transition matrix of the state chain.
    const double trans[2][2] = {{0.8, 0.2}, {0.4, 0.6}};
    double power[2][2] = {{1, 0}, {0, 1}};
    for (index_t phi = 4; phi >= 0; --phi) {
        for (int t = 0; t < 2; ++t)
            for (int sp = 0; sp < 2; ++sp) CHECK(ctx.backward(phi, t, sp) == Approx(power[t][sp]).margin(1e-14));
        double next[2][2];
        for (int t = 0; t < 2; ++t)
            for (int sp = 0; sp < 2; ++sp)
                next[t][sp] = trans[t][0] * power[0][sp] + trans[t][1] * power[1][sp];
        for (int t = 0; t < 2; ++t)
            for (int sp = 0; sp < 2; ++sp) power[t][sp] = next[t][sp];
        if (phi == 0) break;
    }
}

TEST_CASE("backward messages match the explicit enumeration", "[engine]") {
    const HmmProcess ge = gilbert_elliott(0.15, 0.3, 0.05, 0.25);
    Rng rng(31);
    std::vector<int> y(4);
    for (auto& v : y) v = rng.bit();
    BranchContext ctx(ge, std::span<const int>(y), 4);
    for (index_t phi = 0; phi < 4; ++phi)
        for (int t = 0; t < 2; ++t)
            for (int sp = 0; sp < 2; ++sp)
                CHECK(ctx.backward(phi, t, sp) ==
                      Approx(backward_brute(ge, &y, 4, phi, t, sp)).margin(1e-14));
}

TEST_CASE("base datum ratios for the single-state channel", "[engine]") {
    std::vector<int> y{0, 0, 0, 0};
    const HmmProcess bsc = memoryless_bsc(0.1);
    BranchEngine eng(bsc, std::span<const int>(y), 4);
    const ProbDatum d = eng.update_base_probs(0, std::nullopt);
    CHECK(d.at(0, 0, 0) / d.at(1, 0, 0) == Approx(9.0).epsilon(1e-12));
}

TEST_CASE("absent observations with a symmetric process give equal weights", "[engine]") {
    const HmmProcess bsc = memoryless_bsc(0.3);
    BranchEngine eng(bsc, std::nullopt, 4);
    const ProbDatum d = eng.update_base_probs(0, std::nullopt);
    CHECK(d.at(0, 0, 0) == Approx(d.at(1, 0, 0)).epsilon(1e-14));
}

TEST_CASE("base datums match the enumeration oracle through a window", "[engine]") {
    const HmmProcess ge = gilbert_elliott(0.2, 0.35, 0.06, 0.28);
    Rng rng(11);
    std::vector<int> y(4);
    for (auto& v : y) v = rng.bit();

    oracle::Instance inst{SlowParams(1, 2, 0), &ge, std::vector<int>(y)};
    BranchEngine eng(ge, std::span<const int>(y), 4);
    Bits decided;
    for (index_t phi = 0; phi < 4; ++phi) {
        const ProbDatum d = phi == 0 ? eng.update_base_probs(0, std::nullopt)
                                     : eng.update_base_probs(phi, decided.back());
        const oracle::DatumTable want = oracle::exact_branch_datum(inst, 0, 0, phi, decided);
        check_tables_proportional(d, want, 1e-12);
        decided.push_back(static_cast<std::uint8_t>(rng.bit()));
    }

    CHECK_THROWS_AS(eng.update_base_probs(2, 1), contract_error);
}

TEST_CASE("incremental updates equal a from-scratch fold", "[engine]") {
    const HmmProcess ge = gilbert_elliott(0.1, 0.4, 0.02, 0.3);
    std::vector<int> y{1, 0, 0, 1, 1, 0};
    BranchContext ctx(ge, std::span<const int>(y), 6);
    BranchEngine eng(ge, std::span<const int>(y), 6);
    Bits decided{};
    for (index_t phi = 0; phi < 6; ++phi) {
        ProbDatum inc = phi == 0 ? eng.update_base_probs(0, std::nullopt)
                                 : eng.update_base_probs(phi, decided.back());
        ForwardMessage fwd = initial_forward(2);
        for (index_t k = 0; k < phi; ++k)
            fwd = advance_forward(ctx, fwd, k, decided[static_cast<std::size_t>(k)]);
        const ProbDatum scratch = base_datum(ctx, fwd, phi);
        for (int u = 0; u < 2; ++u)
            for (int s = 0; s < 2; ++s)
                for (int sp = 0; sp < 2; ++sp) CHECK(inc.at(u, s, sp) == scratch.at(u, s, sp));
        decided.push_back(static_cast<std::uint8_t>((phi * 7 + 3) % 2));
    }
}

TEST_CASE("datum consistency: weighted marginal equals the prefix joint", "[engine]") {
    const HmmProcess ge = gilbert_elliott(0.25, 0.3, 0.08, 0.2);
    Rng rng(17);
    std::vector<int> y(6);
    for (auto& v : y) v = rng.bit();

    BranchEngine eng(ge, std::span<const int>(y), 6);
    Bits decided;
    for (index_t phi = 0; phi < 6; ++phi) {
        const ProbDatum d = phi == 0 ? eng.update_base_probs(0, std::nullopt)
                                     : eng.update_base_probs(phi, decided.back());
        // sum_{u,s,s'} pi(s) d = P(X prefix decided, Y = y), by enumeration.
        double got = 0.0;
        for (int u = 0; u < 2; ++u)
            for (int s = 0; s < 2; ++s)
                for (int sp = 0; sp < 2; ++sp) got += ge.pi()[static_cast<std::size_t>(s)] * d.at(u, s, sp);
        got *= std::exp(d.log_scale());

        double want = 0.0;
        for (std::uint64_t w = 0; w < (std::uint64_t{1} << 6); ++w) {
            Bits x(6);
            bool ok = true;
            for (index_t i = 0; i < 6; ++i) {
                x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((w >> i) & 1u);
                if (i < phi && x[static_cast<std::size_t>(i)] != decided[static_cast<std::size_t>(i)]) ok = false;
            }
            if (ok) want += joint_prob(ge, x, std::span<const int>(y));
        }
        CHECK(got == Approx(want).epsilon(1e-12));
        decided.push_back(static_cast<std::uint8_t>(rng.bit()));
    }
}

TEST_CASE("two windows chain across the boundary state", "[engine]") {
    const HmmProcess ge = gilbert_elliott(0.3, 0.25, 0.07, 0.33);
    Rng rng(23);
    std::vector<int> y(8);
    for (auto& v : y) v = rng.bit();
    std::vector<int> ya(y.begin(), y.begin() + 4);
    std::vector<int> yb(y.begin() + 4, y.end());

    BranchEngine ea(ge, std::span<const int>(ya), 4);
    BranchEngine eb(ge, std::span<const int>(yb), 4);
    const ProbDatum da = ea.update_base_probs(0, std::nullopt);
    const ProbDatum db = eb.update_base_probs(0, std::nullopt);
    std::vector<double> ma, mb;
    datum_bit_marginal(da, ma);
    datum_bit_marginal(db, mb);

    for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp) {
            double got = 0.0;
            for (int m = 0; m < 2; ++m)
                got += ma[static_cast<std::size_t>(s * 2 + m)] * mb[static_cast<std::size_t>(m * 2 + sp)];
            got *= std::exp(da.log_scale() + db.log_scale());

            // Enumerate the whole 8-symbol window.
            double want = 0.0;
            for (std::uint64_t w = 0; w < 256; ++w) {
                Bits x(8);
                for (index_t i = 0; i < 8; ++i)
                    x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((w >> i) & 1u);
                // entry-resolved chain: start pinned at s, end pinned at sp
                std::vector<double> v(2, 0.0);
                v[static_cast<std::size_t>(s)] = 1.0;
                for (index_t i = 0; i < 8; ++i) {
                    std::vector<double> nx(2, 0.0);
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            nx[static_cast<std::size_t>(b)] +=
                                v[static_cast<std::size_t>(a)] *
                                ge.kernel(a, x[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(i)], b);
                    v.swap(nx);
                }
                want += v[static_cast<std::size_t>(sp)];
            }
            CHECK(got == Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("single-state combine rules degenerate to the classic forms", "[engine]") {
    auto mk = [](double p0, double p1) {
        ProbDatum d(1);
        d.at(0, 0, 0) = p0;
        d.at(1, 0, 0) = p1;
        d.normalize();
        return d;
    };
    const ProbDatum a = mk(0.7, 0.3);
    const ProbDatum b = mk(0.2, 0.8);

    const ProbDatum minus = combine_medial_minus(a, b);
    const double m0 = 0.7 * 0.2 + 0.3 * 0.8; // u=0: matching pair
    const double m1 = 0.7 * 0.8 + 0.3 * 0.2;
    CHECK(minus.at(0, 0, 0) / minus.at(1, 0, 0) == Approx(m0 / m1).epsilon(1e-12));

    const ProbDatum plus = combine_medial_plus(a, b, 1, true);
    // delta = 1, psi' minus side: d(u) = a(1 ^ u) b(u)
    CHECK(plus.at(0, 0, 0) / plus.at(1, 0, 0) == Approx((0.3 * 0.2) / (0.7 * 0.8)).epsilon(1e-12));

    const ProbDatum lat = combine_lateral(a, b, true);
    CHECK(lat.at(0, 0, 0) / lat.at(1, 0, 0) == Approx(0.7 / 0.3).epsilon(1e-12));
}

TEST_CASE("zeroing keeps only the decided row", "[engine]") {
    ProbDatum d(2);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < 2; ++s)
            for (int sp = 0; sp < 2; ++sp) d.at(u, s, sp) = 0.1 + u + 0.01 * s + 0.001 * sp;
    d.normalize();
    const ProbDatum z = retain_decided(d, 1);
    for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp) {
            CHECK(z.at(0, s, sp) == 0.0);
            CHECK(z.at(1, s, sp) > 0.0);
        }
    // Ratios within the kept row are preserved.
    CHECK(z.at(1, 0, 0) / z.at(1, 1, 1) == Approx(d.at(1, 0, 0) / d.at(1, 1, 1)).epsilon(1e-12));
}

TEST_CASE("datum counters track live objects", "[engine]") {
    const long long before = DatumCounters::live().load();
    {
        ProbDatum a(2);
        ProbDatum b(a);
        CHECK(DatumCounters::live().load() == before + 2);
    }
    CHECK(DatumCounters::live().load() == before);
}
