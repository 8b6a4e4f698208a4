#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "helpers.hpp"
#include "mpg/poa.hpp"
#include "mpg/sampling.hpp"

using namespace mpg;

namespace {

// 1-agent 2-state game with P(state 1 | s, a) = 0.75 from everywhere.
GameDefinition biased_walk(int H) {
    TabularGame tab;
    tab.num_agents = 1;
    tab.horizon = H;
    AgentSpace space;
    space.num_states = 2;
    space.num_actions = 2;
    tab.spaces = {space};
    TransitionKernel kern;
    kern.p.assign(H - 1, std::vector<std::vector<std::vector<double>>>(
                             2, std::vector<std::vector<double>>(2, {0.25, 0.75})));
    tab.kernels = {kern};
    tab.initial_dists = {{0.5, 0.5}};
    tab.rewards.assign(1, std::vector<std::vector<std::vector<double>>>(
                              H, std::vector<std::vector<double>>(2, std::vector<double>(4, 0.0))));
    tab.welfare = tab.rewards[0];
    return to_game(std::move(tab));
}

JointPolicy all_first_action(const GameDefinition& game) {
    JointPolicy policy = uniform_policy(game);
    for (auto& agent : policy.agents)
        for (auto& hrows : agent.rows)
            for (auto& row : hrows) {
                row.assign(row.size(), 0.0);
                row[0] = 1.0;
            }
    return policy;
}

}  // namespace

TEST_CASE("sampling: deterministic kernel and policy make identical episodes") {
    GameDefinition ce = build_counterexample();
    TrajectoryBatch batch = sample_episodes(ce, all_first_action(ce), 20, RngSpec{5});
    for (int k = 1; k < batch.episodes; ++k) {
        CHECK(batch.states[k] == batch.states[0]);
        CHECK(batch.actions[k] == batch.actions[0]);
    }
    CHECK(batch.states[0][0] == std::vector<int>{0, 1, 1});  // init, X, X
}

TEST_CASE("sampling: empirical transition frequency near the true 0.75") {
    GameDefinition game = biased_walk(2);
    TrajectoryBatch batch = sample_episodes(game, uniform_policy(game), 10000, RngSpec{99});
    long long hits = 0;
    for (int k = 0; k < batch.episodes; ++k)
        if (batch.states[k][0][1] == 1) ++hits;
    const double freq = static_cast<double>(hits) / batch.episodes;
    CHECK(freq == Catch::Approx(0.75).margin(0.02));
}

TEST_CASE("sampling: same master seed gives bitwise-identical batches") {
    GameDefinition game = test::random_game(21, 2, 3, 2, 4);
    JointPolicy policy = test::random_joint_policy(game, 22);
    TrajectoryBatch a = sample_episodes(game, policy, 500, RngSpec{1234});
    TrajectoryBatch b = sample_episodes(game, policy, 500, RngSpec{1234});
    CHECK(a.states == b.states);
    CHECK(a.actions == b.actions);
    TrajectoryBatch c = sample_episodes(game, policy, 500, RngSpec{1235});
    CHECK(a.states != c.states);
}

TEST_CASE("sampling: results independent of the worker count") {
    GameDefinition game = test::random_game(31, 2, 3, 2, 3);
    JointPolicy policy = test::random_joint_policy(game, 32);
    TrajectoryBatch serial = sample_episodes(game, policy, 400, RngSpec{77}, "", 1);
    TrajectoryBatch parallel = sample_episodes(game, policy, 400, RngSpec{77}, "", 4);
    CHECK(serial.states == parallel.states);
    CHECK(serial.actions == parallel.actions);
}

TEST_CASE("estimate_transitions: frequencies, exactness, and self-loop fallback") {
    GameDefinition game = biased_walk(2);
    TrajectoryBatch batch = sample_episodes(game, uniform_policy(game), 20000, RngSpec{7});
    EstimatedTransitions est = estimate_transitions(game, batch);
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            CHECK(est.p_hat[0][0][s][a][1] == Catch::Approx(0.75).margin(0.03));

    GameDefinition ce = build_counterexample();
    TrajectoryBatch det = sample_episodes(ce, all_first_action(ce), 50, RngSpec{8});
    EstimatedTransitions est2 = estimate_transitions(ce, det);
    CHECK(est2.p_hat[0][0][0][0] == std::vector<double>{0.0, 1.0, 0.0});  // visited, exact
    CHECK(est2.p_hat[0][0][0][1] == std::vector<double>{1.0, 0.0, 0.0});  // unvisited: 1{s'=s}
    CHECK(est2.fallback_cells > 0);
}

TEST_CASE("estimate_averaged_reward: single agent and unvisited-state fallback") {
    GameDefinition g1 = to_game(make_g1());
    TrajectoryBatch batch = sample_episodes(g1, uniform_policy(g1), 10, RngSpec{3});
    EstimatedReward est = estimate_averaged_reward(g1, batch, 0);
    CHECK(est.r_hat[0][0][0] == Catch::Approx(0.3).margin(1e-15));
    CHECK(est.r_hat[0][0][1] == Catch::Approx(0.7).margin(1e-15));

    GameDefinition ce = build_counterexample();
    TrajectoryBatch det = sample_episodes(ce, all_first_action(ce), 30, RngSpec{4});
    EstimatedReward r0 = estimate_averaged_reward(ce, det, 0);
    CHECK(r0.r_hat[1][1][0] == Catch::Approx(2.0).margin(1e-15));  // X vs X at h=2
    CHECK(r0.r_hat[1][2][0] == 0.0);                               // Y never visited -> 0
    CHECK(r0.fallback_cells > 0);
}

TEST_CASE("estimate_averaged_reward: quadrupling T_J roughly halves the error") {
    GameDefinition game = test::random_game(55, 2, 2, 2, 3);
    double ratio_sum = 0.0;
    int count = 0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        JointPolicy policy = test::random_joint_policy(game, 100 + seed);
        AgentTable rbar = averaged_reward(game, policy, 0);
        auto max_err = [&](long long T, uint64_t s) {
            TrajectoryBatch batch = sample_episodes(game, policy, T, RngSpec{s});
            EstimatedReward est = estimate_averaged_reward(game, batch, 0);
            double err = 0.0;
            for (int h = 0; h < game.horizon; ++h)
                for (int st = 0; st < 2; ++st)
                    for (int a = 0; a < 2; ++a)
                        err = std::max(err, std::abs(est.r_hat[h][st][a] - rbar[h][st][a]));
            return err;
        };
        const double e1 = max_err(2500, 500 + seed);
        const double e2 = max_err(10000, 900 + seed);
        if (e1 > 0) {
            ratio_sum += e2 / e1;
            ++count;
        }
    }
    const double mean_ratio = ratio_sum / count;
    CHECK(mean_ratio > 0.3);
    CHECK(mean_ratio < 0.8);
}

TEST_CASE("estimate_averaged_q: exact inputs reproduce qbar; H=1 copies r_hat") {
    GameDefinition game = test::random_game(66, 2, 2, 2, 3);
    JointPolicy policy = test::random_joint_policy(game, 67);
    AveragedTables tabs = averaged_q(game, policy, 0);
    AgentTable q = estimate_averaged_q(game, policy, game.kernels[0].p, tabs.rbar, 0);
    for (int h = 0; h < game.horizon; ++h)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                REQUIRE(q[h][s][a] == Catch::Approx(tabs.qbar[h][s][a]).margin(1e-12));

    GameDefinition g1 = to_game(make_g1());
    AgentTable r1{{{0.1, 0.9}}};
    AgentTable q1 = estimate_averaged_q(g1, uniform_policy(g1), {}, r1, 0);
    CHECK(q1[0][0][0] == 0.1);
    CHECK(q1[0][0][1] == 0.9);
}

TEST_CASE("estimate_averaged_q: adversarial perturbations stay within the error bound") {
    GameDefinition game = test::random_game(77, 1, 3, 2, 4);
    JointPolicy policy = test::random_joint_policy(game, 78);
    AveragedTables tabs = averaged_q(game, policy, 0);
    const int S = 3, A = 2, H = game.horizon;
    const double eps_r = 0.05, eps_p = 0.04;

    // Shift every reward up by eps_r; move eps_p kernel mass toward the
    // successor with the highest continuation value.
    AgentTable r_pert = tabs.rbar;
    for (auto& hrows : r_pert)
        for (auto& row : hrows)
            for (double& v : row) v += eps_r;
    auto p_pert = game.kernels[0].p;
    for (int h = 0; h < H - 1; ++h) {
        std::vector<double> vnext(S, 0.0);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) vnext[s] = std::max(vnext[s], tabs.qbar[h + 1][s][a]);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                auto& row = p_pert[h][s][a];
                int hi = 0, lo = 0;
                for (int sn = 0; sn < S; ++sn) {
                    if (vnext[sn] > vnext[hi]) hi = sn;
                    if (vnext[sn] < vnext[lo]) lo = sn;
                }
                const double moved = std::min(eps_p, row[lo]);
                row[lo] -= moved;
                row[hi] += moved;
            }
    }
    AgentTable q_pert = estimate_averaged_q(game, policy, p_pert, r_pert, 0);

    double m_eps_r = 0.0, m_eps_p = 0.0;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                m_eps_r = std::max(m_eps_r, std::abs(r_pert[h][s][a] - tabs.rbar[h][s][a]));
    for (int h = 0; h < H - 1; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                for (int sn = 0; sn < S; ++sn)
                    m_eps_p = std::max(m_eps_p, std::abs(p_pert[h][s][a][sn] -
                                                         game.kernels[0].p[h][s][a][sn]));

    for (int h = 1; h <= H; ++h) {
        double err = 0.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                err = std::max(err, std::abs(q_pert[h - 1][s][a] - tabs.qbar[h - 1][s][a]));
        const double bound = m_eps_r * (H + 1 - h) + m_eps_p * H * (H + 1 - h) * S;
        CHECK(err <= bound + 1e-9);
    }
}

TEST_CASE("estimation pipeline is a pure function of (game, policy, seed, T)") {
    GameDefinition game = test::random_game(88, 2, 2, 2, 3);
    JointPolicy policy = test::random_joint_policy(game, 89);
    auto run_once = [&]() {
        TrajectoryBatch batch = sample_episodes(game, policy, 300, RngSpec{4242});
        EstimatedTransitions p = estimate_transitions(game, batch);
        EstimatedReward r = estimate_averaged_reward(game, batch, 0);
        return estimate_averaged_q(game, policy, p.p_hat[0], r.r_hat, 0);
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("Hoeffding-style concentration of the reward estimator") {
    GameDefinition game = test::random_game(91, 2, 2, 2, 2);
    JointPolicy policy = uniform_policy(game);
    AgentTable rbar = averaged_reward(game, policy, 0);
    StateDistributionTable dists = state_distributions(game, policy);
    double c = 1.0;
    for (int h = 1; h <= game.horizon; ++h)
        for (double v : dists.of(0, h)) c = std::min(c, v);
    REQUIRE(c > 0.0);

    const double eps = 0.5;
    const long long T = 2000;
    const int reps = 100;
    int exceed = 0;  // fixed cell (h=1, s=0, a=1)
    for (int rep = 0; rep < reps; ++rep) {
        TrajectoryBatch batch = sample_episodes(game, policy, T, RngSpec{5000u + rep});
        EstimatedReward est = estimate_averaged_reward(game, batch, 0);
        if (std::abs(est.r_hat[0][0][1] - rbar[0][0][1]) >= eps) ++exceed;
    }
    const double bound = 4.0 * std::exp(-eps * eps * c * c * T / 32.0) + 0.05;
    CHECK(static_cast<double>(exceed) / reps <= bound);
}

TEST_CASE("batch dump/load round-trip with index validation") {
    GameDefinition game = test::random_game(95, 2, 3, 2, 3);
    JointPolicy policy = test::random_joint_policy(game, 96);
    TrajectoryBatch batch = sample_episodes(game, policy, 25, RngSpec{11});

    std::stringstream ss;
    dump_batch(batch, ss);
    TrajectoryBatch loaded = load_batch(game, ss);
    CHECK(loaded.states == batch.states);
    CHECK(loaded.actions == batch.actions);

    std::stringstream bad("episode,agent,horizon,state,action\n0,0,1,99,0\n");
    CHECK_THROWS_AS(load_batch(game, bad), std::invalid_argument);
}
