#include "spheretime/config.hpp"

#include "doctest.h"

#include <sstream>
#include <string>

using namespace spheretime;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_run_config(parse_config_text(in));
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
    const auto c = parse("");
    CHECK(c.family() == Family::SphereGneitingStieltjes);
    CHECK(c.mcmc.iterations == 30000);
    CHECK(c.mcmc.burn_in == 5000);
    CHECK(c.prior.a_tau2 == 0.1);
    CHECK(c.prior.b_sigma2 == 0.1);
    CHECK(c.neighbors.scheme == NeighborScheme::rectangular);
    CHECK(c.neighbors.m_s == 5);
    CHECK(c.neighbors.m_t == 5);
}

TEST_CASE("a full configuration") {
    const auto c = parse(R"(# study
seed = 42
model.family = sphere_gneiting_cauchy
model.sigma2 = 4
model.c_s = 0.2
model.c_t = 2
model.alpha = 1
model.beta = 0.5
model.gamma = 0.5
model.lambda = 1
model.sample = c_s, c_t, alpha, beta
model.constraint = delta_from_beta
prior.alpha = 0, 2
mcmc.iterations = 2000
mcmc.burn_in = 500
neighbors.m_s = 4
simulate.lat = -70:-60:5
simulate.time = 1, 2, 3
)");
    CHECK(c.seed == 42);
    CHECK(c.family() == Family::SphereGneitingCauchy);
    CHECK(c.sampler.start.delta == 0.75);
    CHECK(c.sampler.delta_from_beta);
    CHECK(c.sampler.sampled.size() == 4);
    CHECK(c.prior.bounds.at(Param::alpha).hi == 2.0);
    CHECK(c.mcmc.iterations == 2000);
    CHECK(c.neighbors.m_s == 4);
    CHECK(c.simulate.grid.latitudes == std::vector<double>{-70, -65, -60});
    CHECK(c.simulate.grid.times == std::vector<double>{1, 2, 3});
}

TEST_CASE("unknown keys are reported with the key and line") {
    const auto msg = error_of("seed = 1\nmcmc.iteratons = 5\n");
    CHECK(msg.find("mcmc.iteratons") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("invalid values and combinations are rejected before running") {
    CHECK_FALSE(error_of("mcmc.iterations = 100\nmcmc.burn_in = 100\n").empty());
    CHECK_FALSE(error_of("model.family = nope\n").empty());
    CHECK_FALSE(error_of("model.alpha = 3\n").empty());
    CHECK_FALSE(error_of("model.sample = sigma2\n").empty());
    CHECK_FALSE(error_of("model.sample = lambda\n").empty());
    CHECK_FALSE(error_of("prior.c_s = 0, 1\n").empty());
    CHECK_FALSE(error_of("seed = 1\nseed = 2\n").empty());
    CHECK_FALSE(error_of("just text\n").empty());
    CHECK_FALSE(error_of("neighbors.scheme = spiral\n").empty());
    CHECK_FALSE(error_of("model.sample = c_s\nmodel.c_s = 4\n").empty());
}

TEST_CASE("rendered configuration parses back to the same settings") {
    const auto c = parse("seed = 9\nmodel.family = heine\nmodel.c_s = 0.5\nmodel.alpha = 0.8\nmodel.sample = c_s\n"
                         "prior.c_s = 0.1,2\nvalidate.methods = gram\npredict.mode = retrospective\n");
    const std::string text = render_config(c);
    const auto back = parse(text);
    CHECK(render_config(back) == text);
    CHECK(back.seed == 9);
    CHECK(back.family() == Family::Heine);
    CHECK(back.sampler.start == c.sampler.start);
    CHECK(back.prior.bounds.at(Param::c_s).lo == 0.1);
    CHECK_FALSE(back.validate.schoenberg);
    CHECK(back.predict.mode == PredictionMode::retrospective);
}

TEST_CASE("set_seed overrides the configured seed") {
    auto c = parse("seed = 3\n");
    set_seed(c, 77);
    CHECK(c.seed == 77);
    CHECK(c.mcmc.seed == 77);
}

}
