#include "citymf/commands.hpp"
#include "citymf/errors.hpp"
#include "citymf/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace citymf;

namespace {

struct Overrides {
    std::string config;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> n, m, l, max_iters, repeats, threads, top_k;
    std::optional<double> lambda1, lambda2, alpha, epsilon;
    std::string gradient;
    std::vector<double> fractions;
    std::vector<std::string> variants;
    std::string browsing, towers, checkins, trips, shopping_matrix, shopping_mask, mobility_matrix, weights, model;
    bool pgm = false;
};

template <class T>
void set_if(const std::optional<T>& v, T& dst) {
    if (v) dst = *v;
}

void set_if(const std::string& v, std::string& dst) {
    if (!v.empty()) dst = v;
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
    apply_env_overrides(cfg);
    set_if(o.output_dir, cfg.output_dir);
    if (o.seed) cfg.seed = o.seed;
    set_if(o.n, cfg.n);
    set_if(o.m, cfg.m);
    set_if(o.top_k, cfg.top_k);
    set_if(o.l, cfg.hyper.l);
    set_if(o.max_iters, cfg.hyper.max_iters);
    set_if(o.lambda1, cfg.hyper.lambda1);
    set_if(o.lambda2, cfg.hyper.lambda2);
    set_if(o.alpha, cfg.hyper.alpha);
    set_if(o.epsilon, cfg.hyper.epsilon);
    if (!o.gradient.empty()) cfg.hyper.gradient = parse_gradient_mode(o.gradient);
    set_if(o.repeats, cfg.evaluation.repeats);
    set_if(o.threads, cfg.evaluation.threads);
    if (!o.fractions.empty()) cfg.evaluation.fractions = o.fractions;
    if (!o.variants.empty()) {
        cfg.evaluation.variants.clear();
        for (const auto& v : o.variants) cfg.evaluation.variants.push_back(parse_variant(v));
    }
    set_if(o.browsing, cfg.inputs.browsing);
    set_if(o.towers, cfg.inputs.towers);
    set_if(o.checkins, cfg.inputs.checkins);
    set_if(o.trips, cfg.inputs.trips);
    set_if(o.shopping_matrix, cfg.inputs.shopping_matrix);
    set_if(o.shopping_mask, cfg.inputs.shopping_mask);
    set_if(o.mobility_matrix, cfg.inputs.mobility_matrix);
    set_if(o.weights, cfg.inputs.weights);
    set_if(o.model, cfg.inputs.model);
    if (o.pgm) cfg.emit_pgm = true;
    return cfg;
}

void add_common(CLI::App* sub, Overrides& o, bool seed_required) {
    sub->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("-o,--output-dir", o.output_dir, "Output directory (overrides $CITYMF_OUTPUT_DIR)");
    auto* seed = sub->add_option("--seed", o.seed, "Master seed");
    if (seed_required) seed->required();
}

void add_training(CLI::App* sub, Overrides& o) {
    sub->add_option("--l", o.l, "Latent lifestyles");
    sub->add_option("--lambda1", o.lambda1, "Mobility term weight");
    sub->add_option("--lambda2", o.lambda2, "Ridge weight");
    sub->add_option("--alpha", o.alpha, "Regularizer weight");
    sub->add_option("--max-iters", o.max_iters, "Maximum iterations T");
    sub->add_option("--epsilon", o.epsilon, "Stopping threshold");
    sub->add_option("--gradient", o.gradient, "exact | paper-literal");
}

void add_matrices(CLI::App* sub, Overrides& o) {
    sub->add_option("--shopping", o.shopping_matrix, "Region x pattern shopping matrix CSV");
    sub->add_option("--mask", o.shopping_mask, "Shopping observation mask CSV");
    sub->add_option("--mobility", o.mobility_matrix, "Region x pattern mobility matrix CSV");
    sub->add_option("--weights", o.weights, "Combined interaction weights CSV");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"citymf: region shopping-pattern prediction with gravity-regularized collective factorization"};
    app.require_subcommand(1);
    Overrides o;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic city with planted truth");
    add_common(synth, o, false);
    synth->add_option("--n", o.n, "Shopping patterns");
    synth->add_option("--m", o.m, "Mobility patterns");

    auto* extract = app.add_subcommand("extract", "Extract patterns and build region matrices");
    add_common(extract, o, false);
    extract->add_option("--n", o.n, "Shopping patterns");
    extract->add_option("--m", o.m, "Mobility patterns");
    extract->add_option("--top-k", o.top_k, "Categories listed per pattern");
    extract->add_option("--browsing", o.browsing, "Browsing records CSV");
    extract->add_option("--towers", o.towers, "Tower positions CSV");
    extract->add_option("--checkins", o.checkins, "Check-in records CSV");

    auto* fit = app.add_subcommand("fit-gravity", "Fit per-mode gravity models and combined weights");
    add_common(fit, o, false);
    fit->add_option("--trips", o.trips, "Trip records CSV");

    std::string variant = "cmf-i";
    auto* trn = app.add_subcommand("train", "Train one model variant");
    add_common(trn, o, true);
    add_training(trn, o);
    add_matrices(trn, o);
    trn->add_option("--variant", variant, "mf | cmf | cmf-n | cmf-i");

    auto* eval = app.add_subcommand("evaluate", "Row-holdout evaluation over variants and fractions");
    add_common(eval, o, true);
    add_training(eval, o);
    add_matrices(eval, o);
    eval->add_option("--variants", o.variants, "Comma separated variants")->delimiter(',');
    eval->add_option("--fractions", o.fractions, "Comma separated training fractions")->delimiter(',');
    eval->add_option("--repeats", o.repeats, "Repeats per fraction");
    eval->add_option("--threads", o.threads, "Worker threads");

    auto* pred = app.add_subcommand("predict", "Write predicted shopping-pattern heatmaps");
    add_common(pred, o, false);
    pred->add_option("--model", o.model, "Model JSON");
    pred->add_option("--shopping", o.shopping_matrix, "Observed shopping matrix CSV");
    pred->add_option("--mask", o.shopping_mask, "Observation mask CSV");
    pred->add_flag("--pgm", o.pgm, "Also write PGM images");

    std::string matrix, name;
    int column = 0;
    auto* heat = app.add_subcommand("export-heatmap", "Write one matrix column as a heatmap");
    add_common(heat, o, false);
    heat->add_option("--matrix", matrix, "Region-rowed matrix CSV")->required()->check(CLI::ExistingFile);
    heat->add_option("--column", column, "Column index")->required();
    heat->add_option("--name", name, "Output stem (default: <matrix stem>_<column>)");
    heat->add_flag("--pgm", o.pgm, "Also write a PGM image");

    if (argc > 1 && argv[1][0] != '-' && !app.get_subcommand_no_throw(argv[1])) {
        std::cerr << "unknown subcommand '" << argv[1] << "'\n" << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        if (!dynamic_cast<const CLI::CallForHelp*>(&e)) std::cerr << app.help();
        return 1;
    }

    try {
        RunConfig cfg = resolve(o);
        if (*synth) {
            cmd_synth(cfg);
            std::printf("synthetic city written to %s\n", cfg.output_dir.c_str());
        } else if (*extract) {
            cmd_extract(cfg);
            std::printf("patterns and region matrices written to %s\n", cfg.output_dir.c_str());
        } else if (*fit) {
            cmd_fit_gravity(cfg);
            std::printf("gravity parameters and weights written to %s\n", cfg.output_dir.c_str());
        } else if (*trn) {
            TrainResult r = cmd_train(cfg, parse_variant(variant));
            std::printf("%s: %zu iterations, final loss %s (%s)\n", std::string(display_name(r.model.variant)).c_str(),
                        r.trace.steps.size() - 1, io::format_double(r.model.final_loss).c_str(),
                        std::string(to_string(r.trace.stop)).c_str());
        } else if (*eval) {
            MetricsReport r = cmd_evaluate(cfg);
            std::fputs(format_table(r).c_str(), stdout);
        } else if (*pred) {
            int k = cmd_predict(cfg);
            std::printf("%d heatmaps written to %s/heatmaps\n", k, cfg.output_dir.c_str());
        } else if (*heat) {
            if (name.empty()) name = std::filesystem::path(matrix).stem().string() + "_" + std::to_string(column);
            cmd_export_heatmap(cfg, matrix, column, name);
            std::printf("heatmap %s written to %s/heatmaps\n", name.c_str(), cfg.output_dir.c_str());
        }
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
