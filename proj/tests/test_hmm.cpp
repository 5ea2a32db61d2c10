#include <catch2/catch_amalgamated.hpp>

#include "slowpolar/hmm.hpp"
#include "slowpolar/oracle.hpp"

using namespace slowpolar;
using Catch::Approx;

TEST_CASE("bsc kernel entries", "[hmm]") {
    const HmmProcess p = memoryless_bsc(0.1);
    CHECK(p.num_states() == 1);
    CHECK(p.kernel(0, 1, 0, 0) == Approx(0.05).epsilon(1e-14));
    CHECK(p.kernel(0, 1, 1, 0) == Approx(0.45).epsilon(1e-14));

    const HmmProcess half = memoryless_bsc(0.5);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) CHECK(half.kernel(0, x, y, 0) == Approx(0.25).epsilon(1e-14));

    CHECK_THROWS_AS(memoryless_bsc(-0.1), domain_error);
    CHECK_THROWS_AS(memoryless_bsc(1.5), domain_error);
}

TEST_CASE("gilbert-elliott construction", "[hmm]") {
    const HmmProcess ge = gilbert_elliott(0.1, 0.3, 0.05, 0.25);
    CHECK(ge.num_states() == 2);
    CHECK(ge.pi()[0] == Approx(0.75).epsilon(1e-14));
    CHECK(ge.pi()[1] == Approx(0.25).epsilon(1e-14));
    // state 0 emission with stay probability 0.9: 0.5 * 0.9 * 0.95
    CHECK(ge.kernel(0, 0, 0, 0) == Approx(0.5 * 0.9 * 0.95).epsilon(1e-14));
    // cross into the bad state and flip: 0.5 * 0.1 * 0.25
    CHECK(ge.kernel(0, 0, 1, 1) == Approx(0.5 * 0.1 * 0.25).epsilon(1e-14));

    // Frozen chain needs an explicit start.
    CHECK_THROWS_AS(gilbert_elliott(0.0, 0.0, 0.1, 0.2), domain_error);
    const HmmProcess pinned = gilbert_elliott(0.0, 0.0, 0.1, 0.2, std::vector<double>{1.0, 0.0});
    // Unreachable bad state: acts as BSC(0.1).
    Bits x{0, 1, 0};
    std::vector<int> y{0, 1, 0};
    const double via_ge = joint_prob(pinned, x, std::span<const int>(y));
    const double via_bsc = joint_prob(memoryless_bsc(0.1), x, std::span<const int>(y));
    CHECK(via_ge == Approx(via_bsc).epsilon(1e-12));
}

TEST_CASE("stochasticity validation", "[hmm]") {
    // A kernel row that sums to 0.9 must be rejected.
    std::vector<double> kernel{0.2, 0.2, 0.2, 0.3};
    CHECK_THROWS_AS(HmmProcess(1, 2, {1.0}, kernel), domain_error);
    CHECK_THROWS_AS(HmmProcess(1, 2, {0.9}, std::vector<double>{0.25, 0.25, 0.25, 0.25}),
                    domain_error);
}

TEST_CASE("sampling trivial cases", "[hmm]") {
    Rng rng(42);
    // Zero crossover: y echoes x.
    const HmmProcess clean = memoryless_bsc(0.0);
    const SampleResult s = sample(clean, 64, rng);
    for (std::size_t i = 0; i < s.x.size(); ++i) CHECK(int{s.x[i]} == s.y[i]);

    // Single state: the state sequence is constant.
    for (int st : s.states) CHECK(st == 0);

    // Absorbing good state.
    const HmmProcess ge = gilbert_elliott(0.0, 0.0, 0.02, 0.3, std::vector<double>{1.0, 0.0});
    const SampleResult g = sample(ge, 100, rng);
    for (int st : g.states) CHECK(st == 0);

    CHECK_THROWS_AS(sample(clean, 0, rng), domain_error);
}

TEST_CASE("sample_given_input respects the conditional law", "[hmm]") {
    Rng rng(7);
    const HmmProcess clean = memoryless_bsc(0.0);
    Bits x{1, 0, 1, 1, 0};
    const SampleResult s = sample_given_input(clean, x, rng);
    CHECK(s.x == x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(int{x[i]} == s.y[i]);
}

TEST_CASE("joint probability basics", "[hmm]") {
    const HmmProcess p = memoryless_bsc(0.1);
    Bits x{0, 0};
    std::vector<int> y{0, 0};
    CHECK(joint_prob(p, x, std::span<const int>(y)) == Approx(0.2025).epsilon(1e-14));

    // Absent observations: sum over inputs is 1.
    const HmmProcess ge = gilbert_elliott(0.2, 0.4, 0.1, 0.3);
    double total = 0.0;
    for (int w = 0; w < 16; ++w) {
        Bits in(4);
        for (int i = 0; i < 4; ++i) in[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((w >> i) & 1);
        total += joint_prob(ge, in, std::nullopt);
    }
    CHECK(total == Approx(1.0).epsilon(1e-12));

    Bits bad{0, 1};
    std::vector<int> y3{0, 1, 0};
    CHECK_THROWS_AS(joint_prob(p, bad, std::span<const int>(y3)), domain_error);
}

TEST_CASE("forward recursion agrees with explicit path enumeration", "[hmm]") {
    const HmmProcess ge = gilbert_elliott(0.15, 0.35, 0.04, 0.22);
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Bits x(3);
        std::vector<int> y(3);
        for (int i = 0; i < 3; ++i) {
            x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng.bit());
            y[static_cast<std::size_t>(i)] = rng.bit();
        }
        const double fast = joint_prob(ge, x, std::span<const int>(y));
        const double slow = oracle::joint_prob_pathsum(ge, x, std::span<const int>(y));
        CHECK(fast == Approx(slow).epsilon(1e-12));
    }
}

TEST_CASE("json round trip", "[hmm]") {
    const HmmProcess ge = gilbert_elliott(0.1, 0.3, 0.05, 0.25);
    const nlohmann::json j = process_to_json(ge);
    const HmmProcess back = process_from_json(j);
    CHECK(back.num_states() == ge.num_states());
    CHECK(back.num_outputs() == ge.num_outputs());
    for (int sp = 0; sp < 2; ++sp)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int s = 0; s < 2; ++s)
                    CHECK(back.kernel(sp, x, y, s) == Approx(ge.kernel(sp, x, y, s)).epsilon(1e-15));

    nlohmann::json broken = j;
    broken.erase("pi");
    CHECK_THROWS_AS(process_from_json(broken), domain_error);
}
