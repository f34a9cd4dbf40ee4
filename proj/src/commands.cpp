#include "citymf/commands.hpp"

#include "citymf/errors.hpp"
#include "citymf/gravity.hpp"
#include "citymf/io.hpp"
#include "citymf/nmf.hpp"
#include "citymf/patterns.hpp"
#include "citymf/rng.hpp"
#include "citymf/synth.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_map>

namespace citymf {

namespace fs = std::filesystem;

namespace {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    const std::string p = std::string(stage) + ": ";
    try {
        return f();
    } catch (const InputError& e) {
        throw InputError(p + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(p + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(p + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        throw InputError(p + e.what());
    }
}

fs::path out_path(const RunConfig& cfg, const char* name) { return fs::path(cfg.output_dir) / name; }

fs::path input_path(const RunConfig& cfg, const std::string& configured, const char* fallback) {
    return configured.empty() ? out_path(cfg, fallback) : fs::path(configured);
}

std::uint64_t require_seed(const RunConfig& cfg) {
    if (!cfg.seed) throw InvalidArgument("a seed is required (--seed or \"seed\" in the config)");
    return *cfg.seed;
}

void write(const RunConfig& cfg, const char* name, const std::string& text) {
    io::write_text_atomic(out_path(cfg, name), text);
}

void write_json(const RunConfig& cfg, const char* name, const nlohmann::json& j) {
    write(cfg, name, j.dump(2) + "\n");
}

Matrix read_region_matrix(const fs::path& path, const RegionGrid& grid) {
    Matrix m = io::read_matrix_csv(path);
    if (m.rows() != grid.size())
        throw InputError(path.string() + ": " + std::to_string(m.rows()) + " rows, grid has " +
                         std::to_string(grid.size()) + " regions");
    return m;
}

struct Matrices {
    ShoppingPatternMatrix shopping;
    MobilityPatternMatrix mobility;
};

Matrices load_matrices(const RunConfig& cfg, const RegionGrid& grid) {
    Matrices out;
    out.shopping.values = read_region_matrix(input_path(cfg, cfg.inputs.shopping_matrix, files::shopping), grid);
    out.shopping.mask = read_region_matrix(input_path(cfg, cfg.inputs.shopping_mask, files::mask), grid);
    out.mobility.values = read_region_matrix(input_path(cfg, cfg.inputs.mobility_matrix, files::mobility), grid);
    try {
        out.shopping.validate();
    } catch (const InvalidArgument& e) {
        throw InputError(std::string("shopping matrix: ") + e.what());
    }
    if (out.mobility.values.size() && out.mobility.values.minCoeff() < 0.0)
        throw InputError("mobility matrix has negative entries");
    return out;
}

Matrix load_weights(const RunConfig& cfg, const RegionGrid& grid) {
    Matrix w = read_region_matrix(input_path(cfg, cfg.inputs.weights, files::weights), grid);
    if (w.cols() != grid.size()) throw InputError("weight matrix must be square over the grid regions");
    return w;
}

RegularizerSpec regularizer_for(Variant v, const RunConfig& cfg, const RegionGrid& grid) {
    switch (v) {
        case Variant::cmf_n: return RegularizerSpec::neighbor(grid);
        case Variant::cmf_i: return RegularizerSpec::interaction(load_weights(cfg, grid));
        default: return RegularizerSpec::none();
    }
}

int category_count(int configured, int max_seen) { return configured > 0 ? configured : max_seen + 1; }

void write_heatmap(const RunConfig& cfg, const RegionGrid& grid, const Vector& values, const std::string& name) {
    io::Heatmap h{grid, values};
    const fs::path dir = fs::path(cfg.output_dir) / files::heatmap_dir;
    io::write_text_atomic(dir / (name + ".csv"), io::heatmap_csv(h));
    if (cfg.emit_pgm) io::write_text_atomic(dir / (name + ".pgm"), io::heatmap_pgm(h));
}

}  // namespace

void apply_env_overrides(RunConfig& cfg) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) cfg.output_dir = dir;
}

void cmd_synth(const RunConfig& cfg) {
    staged("synth", [&] {
        cfg.validate();
        if (cfg.grid.mode != GridMode::planar) throw InvalidArgument("synthetic cities use a planar grid");
        SynthConfig sc = cfg.synth;
        sc.n_rows = cfg.grid.n_rows;
        sc.n_cols = cfg.grid.n_cols;
        sc.cell_size_km = cfg.grid.cell_size_km;
        sc.n = cfg.n;
        sc.m = cfg.m;
        sc.seed = stream_seed(cfg.seed.value_or(0), Stream::synth);
        const SynthData data = generate(sc);
        const RawRecords raw = emit_raw_records(data, sc);

        std::vector<TripRecord> trips = data.taxi_trips;
        trips.insert(trips.end(), data.bus_trips.begin(), data.bus_trips.end());

        write(cfg, files::browsing, io::browsing_csv(raw.browsing));
        write(cfg, files::towers, io::towers_csv(raw.towers));
        write(cfg, files::checkins, io::checkins_csv(raw.checkins));
        write(cfg, files::trips, io::trips_csv(trips));
        write(cfg, files::planted_shopping, io::matrix_csv(data.shopping.values));
        write(cfg, files::planted_mask, io::matrix_csv(data.shopping.mask));
        write(cfg, files::planted_mobility, io::matrix_csv(data.mobility.values));
        nlohmann::json truth = io::to_json(data.truth);
        truth["P_s"] = io::matrix_to_json(raw.shopping_basis);
        truth["P_m"] = io::matrix_to_json(raw.mobility_basis);
        write_json(cfg, files::truth, truth);
    });
}

void cmd_extract(const RunConfig& cfg) {
    staged("extract", [&] {
        cfg.validate();
        const RegionGrid grid = cfg.grid.build();
        const bool geo = grid.mode() == GridMode::geographic;
        const std::uint64_t seed = stream_seed(cfg.seed.value_or(0), Stream::extract);

        const auto browsing = io::read_browsing_csv(input_path(cfg, cfg.inputs.browsing, files::browsing));
        const auto tower_list = io::read_towers_csv(input_path(cfg, cfg.inputs.towers, files::towers), geo);
        const auto checkins = io::read_checkins_csv(input_path(cfg, cfg.inputs.checkins, files::checkins), geo);
        if (browsing.empty()) throw InputError("browsing file has no records");
        if (checkins.empty()) throw InputError("check-in file has no records");

        int max_s = 0, max_m = 0;
        for (const auto& r : browsing) max_s = std::max(max_s, r.product_category_id);
        for (const auto& r : checkins) max_m = std::max(max_m, r.poi_category_id);

        const CountMatrix shop_counts =
            build_count_matrix(browsing, category_count(cfg.shopping_categories, max_s));
        NmfOptions so{cfg.nmf_max_iters, cfg.nmf_tol, derive_seed(seed, {0}), cfg.nmf_restarts};
        const NmfResult shop = nmf(shop_counts.values, cfg.n, so);

        std::unordered_map<std::string, GeoPoint> towers;
        for (const auto& [id, p] : tower_list)
            if (!towers.emplace(id, p).second) throw InputError("duplicate tower location_id '" + id + "'");
        const ShoppingPatternMatrix shopping = aggregate_shopping(shop_counts.row_keys, shop.coefficients, towers, grid);

        const CountMatrix mob_counts = build_count_matrix(checkins, category_count(cfg.mobility_categories, max_m));
        NmfOptions mo{cfg.nmf_max_iters, cfg.nmf_tol, derive_seed(seed, {1}), cfg.nmf_restarts};
        const NmfResult mob = nmf(mob_counts.values, cfg.m, mo);
        const ActivityShareMatrix shares = activity_shares(checkins, grid);
        const Matrix user_coef = select_rows(mob_counts.row_keys, mob.coefficients, shares.user_ids);
        const MobilityPatternMatrix mobility = aggregate_mobility(shares, user_coef);

        write(cfg, files::shopping_basis, io::matrix_csv(shop.basis));
        write(cfg, files::mobility_basis, io::matrix_csv(mob.basis));
        write(cfg, files::shopping_coefficients,
              io::keyed_matrix_csv("location_id", shop_counts.row_keys, shop.coefficients));
        write(cfg, files::mobility_coefficients, io::keyed_matrix_csv("user_id", mob_counts.row_keys, mob.coefficients));
        write(cfg, files::shopping, io::matrix_csv(shopping.values));
        write(cfg, files::mask, io::matrix_csv(shopping.mask));
        write(cfg, files::mobility, io::matrix_csv(mobility.values));
        write(cfg, files::top_shopping, io::top_categories_csv(shop.basis, cfg.top_k));
        write(cfg, files::top_mobility, io::top_categories_csv(mob.basis, cfg.top_k));
    });
}

void cmd_fit_gravity(const RunConfig& cfg) {
    staged("fit-gravity", [&] {
        cfg.validate();
        const RegionGrid grid = cfg.grid.build();
        const auto trips = io::read_trips_csv(input_path(cfg, cfg.inputs.trips, files::trips),
                                              grid.mode() == GridMode::geographic);
        if (trips.empty()) throw InputError("trip file has no records");
        const Matrix dis = grid.center_distance();

        Matrix q[2];
        const TransportMode modes[2] = {TransportMode::taxi, TransportMode::bus};
        for (int k = 0; k < 2; ++k) {
            const TransportMode mode = modes[k];
            const bool present = std::any_of(trips.begin(), trips.end(), [&](const TripRecord& t) { return t.mode == mode; });
            if (!present) {
                q[k] = Matrix::Zero(grid.size(), grid.size());
                continue;
            }
            const FlowTable flows = build_flows(trips, grid, mode);
            const GravityParams p = fit_gravity(flows, dis);
            q[k] = interaction_matrix(p, flows, dis);
            const std::string stem = std::string(to_string(mode));
            write_json(cfg, ("gravity_" + stem + ".json").c_str(), io::to_json(p));
            write(cfg, ("Q_" + stem + ".csv").c_str(), io::matrix_csv(q[k]));
        }
        write(cfg, files::weights, io::matrix_csv(combined_weights(q[0], q[1], grid)));
    });
}

TrainResult cmd_train(const RunConfig& cfg, Variant variant) {
    return staged("train", [&] {
        cfg.validate();
        Hyperparams h = cfg.hyper;
        h.seed = stream_seed(require_seed(cfg), Stream::train);
        const RegionGrid grid = cfg.grid.build();
        const Matrices data = load_matrices(cfg, grid);
        const RegularizerSpec reg = regularizer_for(variant, cfg, grid);
        TrainResult res = train(data.shopping, data.mobility, reg, h, variant);
        if (!res.trace.strictly_decreasing()) throw NumericalError("loss trace is not strictly decreasing");
        write_json(cfg, files::model, io::to_json(res.model));
        write(cfg, files::loss_trace, io::loss_trace_csv(res.trace));
        return res;
    });
}

MetricsReport cmd_evaluate(const RunConfig& cfg) {
    return staged("evaluate", [&] {
        cfg.validate();
        const std::uint64_t seed = require_seed(cfg);
        const RegionGrid grid = cfg.grid.build();
        Matrices m = load_matrices(cfg, grid);
        const auto& vs = cfg.evaluation.variants;
        const bool need_w = std::find(vs.begin(), vs.end(), Variant::cmf_i) != vs.end();
        const bool need_n = std::find(vs.begin(), vs.end(), Variant::cmf_n) != vs.end();
        ExperimentData data{std::move(m.shopping), std::move(m.mobility),
                            need_w ? load_weights(cfg, grid) : Matrix(),
                            need_n ? neighbor_weights(grid) : Matrix()};
        ExperimentOptions opts;
        opts.fractions = cfg.evaluation.fractions;
        opts.repeats = cfg.evaluation.repeats;
        opts.variants = vs;
        opts.hyper = cfg.hyper;
        opts.seed = seed;
        opts.threads = cfg.evaluation.threads;
        MetricsReport report = run_experiment(data, opts);
        write_json(cfg, files::report_json, io::to_json(report));
        write(cfg, files::report_text, format_table(report));
        return report;
    });
}

int cmd_predict(const RunConfig& cfg) {
    return staged("predict", [&] {
        cfg.validate();
        const RegionGrid grid = cfg.grid.build();
        const fs::path model_path = input_path(cfg, cfg.inputs.model, files::model);
        TrainedModel model;
        try {
            model = io::model_from_json(nlohmann::json::parse(io::read_text(model_path)));
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(model_path.string() + ": " + e.what());
        }
        if (model.factors.lifestyles.rows() != grid.size())
            throw InputError(model_path.string() + ": model has " + std::to_string(model.factors.lifestyles.rows()) +
                             " regions, grid has " + std::to_string(grid.size()));
        Matrix out = predict(model);

        // Observed rows pass through when the shopping matrix is available.
        const fs::path rs = input_path(cfg, cfg.inputs.shopping_matrix, files::shopping);
        const fs::path mk = input_path(cfg, cfg.inputs.shopping_mask, files::mask);
        const bool explicit_inputs = !cfg.inputs.shopping_matrix.empty() || !cfg.inputs.shopping_mask.empty();
        if (explicit_inputs || (fs::exists(rs) && fs::exists(mk))) {
            ShoppingPatternMatrix s{read_region_matrix(rs, grid), read_region_matrix(mk, grid)};
            if (s.values.cols() != out.cols())
                throw InputError(rs.string() + ": pattern count differs from the model");
            for (Index i = 0; i < s.regions(); ++i)
                if (s.row_observed(i)) out.row(i) = s.values.row(i);
        }

        write(cfg, files::predicted, io::matrix_csv(out));
        for (Index p = 0; p < out.cols(); ++p) {
            std::string name = std::to_string(p);
            name = "shopping_pattern_" + std::string(name.size() < 2 ? 2 - name.size() : 0, '0') + name;
            write_heatmap(cfg, grid, out.col(p), name);
        }
        return static_cast<int>(out.cols());
    });
}

void cmd_export_heatmap(const RunConfig& cfg, const fs::path& matrix, int column, const std::string& name) {
    staged("export-heatmap", [&] {
        cfg.validate();
        const RegionGrid grid = cfg.grid.build();
        const Matrix m = read_region_matrix(matrix, grid);
        if (column < 0 || column >= m.cols())
            throw InvalidArgument("column " + std::to_string(column) + " out of range for " + matrix.string());
        write_heatmap(cfg, grid, m.col(column), name);
    });
}

}  // namespace citymf
