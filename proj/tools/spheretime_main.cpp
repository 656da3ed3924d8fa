// Command-line front end: simulate | fit | predict | compare | validate | contour.
#include "spheretime/commands.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <csignal>
#include <iostream>

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-process modeling on spheres crossed with time"};
    app.require_subcommand(1);

    spheretime::CommandOptions opts;
    std::uint64_t seed = 0;
    int threads = 0;

    auto add_common = [&](CLI::App* sub, bool with_data) {
        sub->add_option("--config", opts.config, "key = value configuration file");
        if (with_data) sub->add_option("--data", opts.data, "CSV with header lat,lon,time,y[,x...][,split]");
        sub->add_option("--out", opts.out, "output directory (default: output.dir)");
        sub->add_option("--seed", seed, "overrides the configured seed");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* simulate = app.add_subcommand("simulate", "draw exact GP datasets on the configured grid");
    add_common(simulate, false);
    auto* fit = app.add_subcommand("fit", "run the NNGP Gibbs sampler on the train rows");
    add_common(fit, true);
    auto* predict = app.add_subcommand("predict", "posterior predictive draws at hold-out rows");
    add_common(predict, true);
    predict->add_option("--fit", opts.fit, "fit directory written by 'fit'")->required();
    auto* compare = app.add_subcommand("compare", "score prediction directories against each other");
    compare->add_option("--pred", opts.predictions, "prediction directory (repeat per model)")->required();
    compare->add_option("--out", opts.out, "output directory");
    auto* validate = app.add_subcommand("validate", "positive-definiteness checks of the configured kernel");
    add_common(validate, false);
    auto* contour = app.add_subcommand("contour", "correlation surface over angle and time lag");
    add_common(contour, false);
    contour->add_option("--fit", opts.fit, "average over the posterior draws of this fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : spheretime::kExitConfig;
    }

    CLI::App* chosen = app.get_subcommands().front();
    if (const auto* o = chosen->get_option_no_throw("--seed"); o != nullptr && o->count() > 0) opts.seed = seed;
    if (const auto* o = chosen->get_option_no_throw("--threads"); o != nullptr && o->count() > 0) {
        opts.threads = threads;
    }

    std::signal(SIGINT, on_interrupt);
    const std::string verb = chosen->get_name();
    return spheretime::run_command(verb, opts, std::cout, std::cerr, &g_stop);
}
