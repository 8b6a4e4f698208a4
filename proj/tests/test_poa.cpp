#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mpg/covering.hpp"
#include "mpg/poa.hpp"

using namespace mpg;

namespace {

StageGame covering_stage(RewardDesign design) {
    CoveringConfig config;
    config.grid_size = 3;
    config.num_agents = 2;
    config.horizon = 1;
    config.design = design;
    config.treasures = {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}};
    return stage_game_from_markov(build_covering_game(config), 1);
}

}  // namespace

TEST_CASE("check_smoothness: coordination game violates (1,1) with the (X,X)->(Y,Y) witness") {
    StageGame table2 = identical_interest_2x2({{{2.0, 0.0}, {0.0, 2.0}}});
    SmoothnessCertificate cert = check_smoothness(table2, 1.0, 1.0);
    REQUIRE_FALSE(cert.certified);
    REQUIRE(cert.witness.has_value());
    CHECK((*cert.witness)[0] == 0);  // (X,X)
    CHECK((*cert.witness)[1] == 3);  // (Y,Y)
}

TEST_CASE("check_smoothness: MC covering stage game is (1,1)-smooth") {
    SmoothnessCertificate cert =
        check_smoothness(covering_stage(RewardDesign::MarginalContribution), 1.0, 1.0);
    CHECK(cert.certified);
    CHECK(poa_lower_bound(cert) == Catch::Approx(0.5));
}

TEST_CASE("check_smoothness: US covering stage game is (1, 1/(e-1))-smooth") {
    const double mu_f = 1.0 / (std::exp(1.0) - 1.0);
    SmoothnessCertificate cert =
        check_smoothness(covering_stage(RewardDesign::UtilitySharing), 1.0, mu_f);
    CHECK(cert.certified);
    CHECK(poa_lower_bound(cert) == Catch::Approx(1.0 - 1.0 / std::exp(1.0)).margin(1e-12));
}

TEST_CASE("min_mu_for_lambda: coordination game needs mu = 2 at lambda = 1") {
    StageGame table2 = identical_interest_2x2({{{2.0, 0.0}, {0.0, 2.0}}});
    MuSearchResult result = min_mu_for_lambda(table2, 1.0);
    REQUIRE(result.feasible);
    CHECK(result.mu == Catch::Approx(2.0).margin(1e-12));
    CHECK(result.certificate.certified);
    CHECK(poa_lower_bound(result.certificate) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    REQUIRE(result.binding.has_value());
    CHECK((*result.binding)[0] == 0);
    CHECK((*result.binding)[1] == 3);
}

TEST_CASE("min_mu_for_lambda: MC covering stage game needs mu <= 1") {
    MuSearchResult result =
        min_mu_for_lambda(covering_stage(RewardDesign::MarginalContribution), 1.0);
    REQUIRE(result.feasible);
    CHECK(result.mu <= 1.0 + 1e-12);
}

TEST_CASE("min_mu_for_lambda: one-player game with r = v gives mu = 0") {
    StageGame solo = make_stage_game({3}, {{1.0, 2.0, 3.0}}, {1.0, 2.0, 3.0});
    MuSearchResult result = min_mu_for_lambda(solo, 1.0);
    REQUIRE(result.feasible);
    CHECK(result.mu == 0.0);
    CHECK(poa_lower_bound(result.certificate) == 1.0);
}

TEST_CASE("min_mu_for_lambda: infeasible lambda reports the violating pair") {
    // v(x) = 0 profile with a positive-welfare deviation target forces
    // lambda <= feasibility; lambda = 3 is out of reach here.
    StageGame table2 = identical_interest_2x2({{{2.0, 0.0}, {0.0, 2.0}}});
    MuSearchResult result = min_mu_for_lambda(table2, 3.0);
    CHECK_FALSE(result.feasible);
    CHECK(result.binding.has_value());
}

TEST_CASE("poa_lower_bound values and the uncertified error") {
    SmoothnessCertificate cert;
    cert.lambda = 1.0;
    cert.mu = 1.0;
    cert.certified = true;
    CHECK(poa_lower_bound(cert) == 0.5);
    cert.mu = 1.0 / (std::exp(1.0) - 1.0);
    CHECK(poa_lower_bound(cert) == Catch::Approx(1.0 - 1.0 / std::exp(1.0)).margin(1e-12));
    cert.mu = 0.0;
    CHECK(poa_lower_bound(cert) == 1.0);
    cert.certified = false;
    CHECK_THROWS_AS(poa_lower_bound(cert), std::invalid_argument);
}

TEST_CASE("analyze_2x2: Table 2 coordination game") {
    NeSet2x2 result = analyze_2x2(identical_interest_2x2({{{2.0, 0.0}, {0.0, 2.0}}}));
    int pure = 0, mixed = 0;
    for (const auto& rec : result.nes) {
        CHECK(rec.gap <= 1e-9);
        if (rec.pure) {
            ++pure;
        } else {
            ++mixed;
            CHECK(rec.strategy[0][0] == Catch::Approx(0.5).margin(1e-12));
            CHECK(rec.strategy[1][0] == Catch::Approx(0.5).margin(1e-12));
            CHECK(rec.welfare == Catch::Approx(1.0).margin(1e-12));
        }
    }
    CHECK(pure == 2);
    CHECK(mixed == 1);
    CHECK(result.worst_welfare == Catch::Approx(1.0).margin(1e-12));
    CHECK(result.optimum == Catch::Approx(2.0).margin(1e-12));
    CHECK(result.poa == Catch::Approx(0.5).margin(1e-12));
    CHECK_FALSE(result.continuum);
}

TEST_CASE("analyze_2x2: Table 3 has a unique optimal NE") {
    NeSet2x2 result = analyze_2x2(identical_interest_2x2({{{0.0, 1.0}, {1.0, 2.0}}}));
    REQUIRE(result.nes.size() == 1);
    CHECK(result.nes[0].pure);
    CHECK(result.nes[0].strategy[0][1] == 1.0);
    CHECK(result.nes[0].strategy[1][1] == 1.0);
    CHECK(result.poa == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("analyze_2x2: Table 4 worst NE mixes A with probability 3/4") {
    NeSet2x2 result = analyze_2x2(identical_interest_2x2({{{2.0, 1.0}, {1.0, 4.0}}}));
    bool found_mixed = false;
    for (const auto& rec : result.nes) {
        CHECK(rec.gap <= 1e-9);
        if (!rec.pure) {
            found_mixed = true;
            CHECK(rec.strategy[0][0] == Catch::Approx(0.75).margin(1e-12));
            CHECK(rec.strategy[1][0] == Catch::Approx(0.75).margin(1e-12));
            CHECK(rec.welfare == Catch::Approx(1.75).margin(1e-12));
        }
    }
    CHECK(found_mixed);
    CHECK(result.worst_welfare == Catch::Approx(1.75).margin(1e-12));
    CHECK(result.optimum == Catch::Approx(4.0).margin(1e-12));
    CHECK(result.poa == Catch::Approx(7.0 / 16.0).margin(1e-12));
}

TEST_CASE("analyze_2x2: degenerate indifference reports a continuum") {
    // Player 2's payoffs ignore its own strategy entirely.
    StageGame game = make_stage_game({2, 2},
                                     {{1.0, 1.0, 0.0, 0.0}, {1.0, 1.0, 1.0, 1.0}},
                                     {1.0, 1.0, 0.0, 0.0});
    NeSet2x2 result = analyze_2x2(game);
    CHECK(result.continuum);
}

TEST_CASE("build_counterexample validates and reduces to Table 4") {
    GameDefinition game = build_counterexample();
    REQUIRE(validate_game(game).ok());
    StageGame reduced = reduce_to_normal_form(game);
    REQUIRE(reduced.radix.total == 4);
    const std::vector<double> table4 = {2.0, 1.0, 1.0, 4.0};
    for (int i = 0; i < 2; ++i)
        for (int idx = 0; idx < 4; ++idx)
            CHECK(reduced.rewards[i][idx] == Catch::Approx(table4[idx]).margin(1e-12));
    for (int idx = 0; idx < 4; ++idx)
        CHECK(reduced.welfare[idx] == Catch::Approx(table4[idx]).margin(1e-12));

    NeSet2x2 markov = analyze_2x2(reduced);
    CHECK(markov.poa == Catch::Approx(7.0 / 16.0).margin(1e-9));
    CHECK(markov.optimum == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("reduce_to_normal_form: H=1 identity and guard rejections") {
    GameDefinition g1 = to_game(make_g1());
    StageGame reduced = reduce_to_normal_form(g1);
    CHECK(reduced.rewards[0][0] == Catch::Approx(0.3).margin(1e-12));
    CHECK(reduced.rewards[0][1] == Catch::Approx(0.7).margin(1e-12));

    // action-dependent dynamics after h=1 must be rejected
    GameDefinition bad = test::random_game(3, 2, 2, 2, 3);
    CHECK_THROWS_AS(reduce_to_normal_form(bad), std::invalid_argument);

    // non-point-mass initial distribution must be rejected
    GameDefinition ce = build_counterexample();
    ce.initial_dists[0] = {0.5, 0.5, 0.0};
    CHECK_THROWS_AS(reduce_to_normal_form(ce), std::invalid_argument);
}

TEST_CASE("certified smoothness bound holds end to end for exact 2x2 PoA") {
    const std::vector<std::array<std::array<double, 2>, 2>> tables = {
        {{{2.0, 0.0}, {0.0, 2.0}}},
        {{{0.0, 1.0}, {1.0, 2.0}}},
        {{{2.0, 1.0}, {1.0, 4.0}}},
        {{{3.0, 1.0}, {0.0, 2.0}}},
    };
    for (const auto& table : tables) {
        StageGame game = identical_interest_2x2(table);
        MuSearchResult mu = min_mu_for_lambda(game, 1.0);
        if (!mu.feasible) continue;
        NeSet2x2 nes = analyze_2x2(game);
        REQUIRE_FALSE(nes.nes.empty());
        CHECK(nes.worst_welfare / nes.optimum >=
              poa_lower_bound(mu.certificate) - 1e-9);
    }
}

TEST_CASE("epsilon-NE welfare bound on perturbed equilibria") {
    StageGame game = identical_interest_2x2({{{2.0, 1.0}, {1.0, 4.0}}});
    MuSearchResult mu = min_mu_for_lambda(game, 1.0);
    REQUIRE(mu.feasible);
    const double lambda = 1.0;
    const double bound = lambda / (1.0 + mu.mu);
    NeSet2x2 nes = analyze_2x2(game);
    for (const auto& rec : nes.nes) {
        for (double delta : {0.0, 0.02, 0.05}) {
            std::vector<std::vector<double>> mixed = rec.strategy;
            mixed[0][0] = std::clamp(mixed[0][0] + delta, 0.0, 1.0);
            mixed[0][1] = 1.0 - mixed[0][0];
            const double eps = stage_ne_gap(game, mixed);
            const double w = stage_mixed_welfare(game, mixed);
            CHECK(w >= bound * nes.optimum - eps / (1.0 + mu.mu) - 1e-9);
        }
    }
}

TEST_CASE("scaling covariance: positive reward scaling changes nothing structural") {
    StageGame base = identical_interest_2x2({{{2.0, 1.0}, {1.0, 4.0}}});
    const double alpha = 3.7;
    StageGame scaled = base;
    for (auto& r : scaled.rewards)
        for (double& v : r) v *= alpha;
    for (double& v : scaled.welfare) v *= alpha;

    SmoothnessCertificate cb = check_smoothness(base, 1.0, 1.0);
    SmoothnessCertificate cs = check_smoothness(scaled, 1.0, 1.0);
    CHECK(cb.certified == cs.certified);

    MuSearchResult mb = min_mu_for_lambda(base, 1.0);
    MuSearchResult ms = min_mu_for_lambda(scaled, 1.0);
    CHECK(mb.feasible == ms.feasible);
    CHECK(mb.mu == Catch::Approx(ms.mu).margin(1e-9));

    NeSet2x2 nb = analyze_2x2(base);
    NeSet2x2 ns = analyze_2x2(scaled);
    REQUIRE(nb.nes.size() == ns.nes.size());
    for (size_t k = 0; k < nb.nes.size(); ++k)
        for (int i = 0; i < 2; ++i)
            CHECK(nb.nes[k].strategy[i][0] ==
                  Catch::Approx(ns.nes[k].strategy[i][0]).margin(1e-9));
    CHECK(nb.poa == Catch::Approx(ns.poa).margin(1e-9));
}

TEST_CASE("Markov-level smoothness merges over horizons") {
    CoveringConfig config;
    config.grid_size = 3;
    config.num_agents = 2;
    config.horizon = 2;
    config.design = RewardDesign::MarginalContribution;
    config.treasures = {{0, 0, 1.0}, {2, 2, 1.0}};
    GameDefinition game = build_covering_game(config);
    SmoothnessCertificate cert = check_smoothness(game, 1.0, 1.0);
    CHECK(cert.certified);
    CHECK(cert.poa_lower == Catch::Approx(0.5));
}
