#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "slowpolar/errors.hpp"
#include "slowpolar/util.hpp"

// Finite-state hidden-Markov input/output process. One kernel table
// K[s_prev][x][y][s] = P(X_i = x, Y_i = y, S_i = s | S_{i-1} = s_prev)
// describes the joint law of input, output and state; pi is the
// distribution of the state entering the block.

namespace slowpolar {

// The received block: a full observation sequence, or absent when running
// the machinery in encode mode.
using Observations = std::optional<std::vector<int>>;
using ObsWindow = std::optional<std::span<const int>>;

class HmmProcess {
public:
    HmmProcess(int num_states, int num_outputs, std::vector<double> pi,
               std::vector<double> kernel_table)
        : num_states_(num_states),
          num_outputs_(num_outputs),
          pi_(std::move(pi)),
          kernel_(std::move(kernel_table)) {
        if (num_states_ <= 0) throw domain_error("HmmProcess: need at least one state");
        if (num_outputs_ <= 0) throw domain_error("HmmProcess: need at least one output symbol");
        if (pi_.size() != static_cast<std::size_t>(num_states_))
            throw domain_error("HmmProcess: pi size mismatch");
        const std::size_t want = static_cast<std::size_t>(num_states_) * 2 *
                                 static_cast<std::size_t>(num_outputs_) *
                                 static_cast<std::size_t>(num_states_);
        if (kernel_.size() != want) throw domain_error("HmmProcess: kernel size mismatch");

        double pi_sum = 0.0;
        for (double v : pi_) {
            if (!(v >= 0.0)) throw domain_error("HmmProcess: negative pi entry");
            pi_sum += v;
        }
        if (std::abs(pi_sum - 1.0) > 1e-12) throw domain_error("HmmProcess: pi must sum to 1");

        for (int sp = 0; sp < num_states_; ++sp) {
            double row = 0.0;
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < num_outputs_; ++y)
                    for (int s = 0; s < num_states_; ++s) {
                        const double v = kernel(sp, x, y, s);
                        if (!(v >= 0.0)) throw domain_error("HmmProcess: negative kernel entry");
                        row += v;
                    }
            if (std::abs(row - 1.0) > 1e-12)
                throw domain_error("HmmProcess: kernel rows must sum to 1");
        }

        // Emission factors with the output marginalized, used for absent
        // observations.
        y_marg_.assign(static_cast<std::size_t>(num_states_) * 2 * num_states_, 0.0);
        for (int sp = 0; sp < num_states_; ++sp)
            for (int x = 0; x < 2; ++x)
                for (int s = 0; s < num_states_; ++s) {
                    double acc = 0.0;
                    for (int y = 0; y < num_outputs_; ++y) acc += kernel(sp, x, y, s);
                    y_marg_[static_cast<std::size_t>((sp * 2 + x) * num_states_ + s)] = acc;
                }
    }

    int num_states() const { return num_states_; }
    int num_outputs() const { return num_outputs_; }
    const std::vector<double>& pi() const { return pi_; }

    double kernel(int s_prev, int x, int y, int s) const {
        return kernel_[static_cast<std::size_t>(((s_prev * 2 + x) * num_outputs_ + y) * num_states_ + s)];
    }

    // Sum over y of the kernel.
    double kernel_y_marg(int s_prev, int x, int s) const {
        return y_marg_[static_cast<std::size_t>((s_prev * 2 + x) * num_states_ + s)];
    }

    // K[s_prev][x][y][s] for present y, or the y-marginal when absent.
    double emission(int s_prev, int x, std::optional<int> y, int s) const {
        return y ? kernel(s_prev, x, *y, s) : kernel_y_marg(s_prev, x, s);
    }

private:
    int num_states_;
    int num_outputs_;
    std::vector<double> pi_;
    std::vector<double> kernel_;
    std::vector<double> y_marg_;
};

// Binary symmetric channel with uniform input: one state, crossover p.
inline HmmProcess memoryless_bsc(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw domain_error("memoryless_bsc: p out of [0,1]");
    std::vector<double> kernel(4);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) kernel[static_cast<std::size_t>(x * 2 + y)] = 0.5 * (x == y ? 1.0 - p : p);
    return HmmProcess(1, 2, {1.0}, std::move(kernel));
}

// Two-state burst channel: state 0 ("good") crosses over with p_good, state
// 1 ("bad") with p_bad; the chain moves good->bad with g2b and bad->good
// with b2g. The state active at time i governs symbol i. pi defaults to the
// stationary distribution of the state chain.
inline HmmProcess gilbert_elliott(double g2b, double b2g, double p_good, double p_bad,
                                  std::optional<std::vector<double>> pi = std::nullopt) {
    for (double v : {g2b, b2g, p_good, p_bad})
        if (!(v >= 0.0 && v <= 1.0)) throw domain_error("gilbert_elliott: probability out of [0,1]");
    std::vector<double> start;
    if (pi) {
        start = *pi;
    } else {
        const double denom = g2b + b2g;
        if (denom <= 0.0)
            throw domain_error("gilbert_elliott: stationary distribution not unique; pass pi explicitly");
        start = {b2g / denom, g2b / denom};
    }
    const double trans[2][2] = {{1.0 - g2b, g2b}, {b2g, 1.0 - b2g}};
    const double cross[2] = {p_good, p_bad};
    std::vector<double> kernel(2 * 2 * 2 * 2);
    for (int sp = 0; sp < 2; ++sp)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int s = 0; s < 2; ++s) {
                    const double emit = (x == y) ? 1.0 - cross[s] : cross[s];
                    kernel[static_cast<std::size_t>(((sp * 2 + x) * 2 + y) * 2 + s)] =
                        0.5 * trans[sp][s] * emit;
                }
    return HmmProcess(2, 2, std::move(start), std::move(kernel));
}

struct SampleResult {
    Bits x;
    std::vector<int> y;
    std::vector<int> states;
};

// Draws (X, Y, S) jointly from the process law.
inline SampleResult sample(const HmmProcess& proc, index_t n_symbols, Rng& rng) {
    if (n_symbols < 1) throw domain_error("sample: need at least one symbol");
    SampleResult out;
    out.x.resize(static_cast<std::size_t>(n_symbols));
    out.y.resize(static_cast<std::size_t>(n_symbols));
    out.states.resize(static_cast<std::size_t>(n_symbols));

    const int S = proc.num_states();
    const int Y = proc.num_outputs();
    int state = 0;
    {
        double u = rng.uniform();
        double acc = 0.0;
        for (int s = 0; s < S; ++s) {
            acc += proc.pi()[static_cast<std::size_t>(s)];
            if (u < acc) { state = s; break; }
            state = s;
        }
    }
    for (index_t i = 0; i < n_symbols; ++i) {
        double u = rng.uniform();
        double acc = 0.0;
        int cx = 0, cy = 0, cs = 0;
        bool done = false;
        for (int x = 0; x < 2 && !done; ++x)
            for (int y = 0; y < Y && !done; ++y)
                for (int s = 0; s < S && !done; ++s) {
                    acc += proc.kernel(state, x, y, s);
                    cx = x; cy = y; cs = s;
                    if (u < acc) done = true;
                }
        out.x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(cx);
        out.y[static_cast<std::size_t>(i)] = cy;
        out.states[static_cast<std::size_t>(i)] = cs;
        state = cs;
    }
    return out;
}

// Draws (Y, S) given a fixed input word, i.e. from P(y, s | x).
inline SampleResult sample_given_input(const HmmProcess& proc, std::span<const std::uint8_t> x,
                                       Rng& rng) {
    if (x.empty()) throw domain_error("sample_given_input: empty input");
    SampleResult out;
    out.x.assign(x.begin(), x.end());
    out.y.resize(x.size());
    out.states.resize(x.size());

    const int S = proc.num_states();
    const int Y = proc.num_outputs();
    int state = 0;
    {
        double u = rng.uniform();
        double acc = 0.0;
        for (int s = 0; s < S; ++s) {
            acc += proc.pi()[static_cast<std::size_t>(s)];
            if (u < acc) { state = s; break; }
            state = s;
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int xi = x[i];
        double norm = 0.0;
        for (int y = 0; y < Y; ++y)
            for (int s = 0; s < S; ++s) norm += proc.kernel(state, xi, y, s);
        if (norm <= 0.0) throw domain_error("sample_given_input: input has zero probability");
        double u = rng.uniform() * norm;
        double acc = 0.0;
        int cy = 0, cs = 0;
        bool done = false;
        for (int y = 0; y < Y && !done; ++y)
            for (int s = 0; s < S && !done; ++s) {
                acc += proc.kernel(state, xi, y, s);
                cy = y; cs = s;
                if (u < acc) done = true;
            }
        out.y[i] = cy;
        out.states[i] = cs;
        state = cs;
    }
    return out;
}

// Exact joint probability P(X = x, Y = y) (or the x-marginal P(X = x) when
// y is absent) by the forward recursion over states. Intended for short
// blocks; no underflow rescaling is applied.
inline double joint_prob(const HmmProcess& proc, std::span<const std::uint8_t> x, ObsWindow y) {
    if (y && y->size() != x.size()) throw domain_error("joint_prob: length mismatch");
    const int S = proc.num_states();
    std::vector<double> v(proc.pi());
    std::vector<double> next(static_cast<std::size_t>(S));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::optional<int> yi = y ? std::optional<int>((*y)[i]) : std::nullopt;
        std::fill(next.begin(), next.end(), 0.0);
        for (int sp = 0; sp < S; ++sp) {
            const double w = v[static_cast<std::size_t>(sp)];
            if (w == 0.0) continue;
            for (int s = 0; s < S; ++s)
                next[static_cast<std::size_t>(s)] += w * proc.emission(sp, x[i], yi, s);
        }
        v.swap(next);
    }
    double total = 0.0;
    for (double t : v) total += t;
    return total;
}

// JSON description: { "states": k, "pi": [...], "outputs": m,
//                     "kernel": [s_prev][x][y][s] }.
inline HmmProcess process_from_json(const nlohmann::json& j) {
    if (!j.contains("states") || !j.contains("pi") || !j.contains("outputs") || !j.contains("kernel"))
        throw domain_error("process_from_json: missing field");
    const int states = j.at("states").get<int>();
    const int outputs = j.at("outputs").get<int>();
    std::vector<double> pi = j.at("pi").get<std::vector<double>>();
    std::vector<double> kernel;
    const auto& k = j.at("kernel");
    try {
        for (const auto& by_sp : k)
            for (const auto& by_x : by_sp)
                for (const auto& by_y : by_x)
                    for (const auto& v : by_y) kernel.push_back(v.get<double>());
    } catch (const nlohmann::json::exception&) {
        throw domain_error("process_from_json: malformed kernel");
    }
    return HmmProcess(states, outputs, std::move(pi), std::move(kernel));
}

inline nlohmann::json process_to_json(const HmmProcess& proc) {
    nlohmann::json j;
    j["states"] = proc.num_states();
    j["outputs"] = proc.num_outputs();
    j["pi"] = proc.pi();
    nlohmann::json k = nlohmann::json::array();
    for (int sp = 0; sp < proc.num_states(); ++sp) {
        nlohmann::json by_x = nlohmann::json::array();
        for (int x = 0; x < 2; ++x) {
            nlohmann::json by_y = nlohmann::json::array();
            for (int y = 0; y < proc.num_outputs(); ++y) {
                nlohmann::json by_s = nlohmann::json::array();
                for (int s = 0; s < proc.num_states(); ++s) by_s.push_back(proc.kernel(sp, x, y, s));
                by_y.push_back(std::move(by_s));
            }
            by_x.push_back(std::move(by_y));
        }
        k.push_back(std::move(by_x));
    }
    j["kernel"] = std::move(k);
    return j;
}

} // namespace slowpolar
