#include "citymf/config.hpp"

#include "citymf/errors.hpp"
#include "citymf/io.hpp"


namespace citymf {

using nlohmann::json;

namespace {

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw InputError("config: '" + where + "' must be an object");
}

template <class T>
void read(const json& v, T& out, const std::string& key) {
    try {
        out = v.get<T>();
    } catch (const json::exception&) {
        throw InputError("config: '" + key + "' has the wrong type");
    }
}

[[noreturn]] void unknown(const std::string& block, const std::string& key) {
    throw InputError("config: unknown key '" + (block.empty() ? key : block + "." + key) + "'");
}

GridConfig parse_grid(const json& j) {
    expect_object(j, "grid");
    GridConfig g;
    for (const auto& [k, v] : j.items()) {
        const std::string key = "grid." + k;
        if (k == "mode") {
            std::string s;
            read(v, s, key);
            if (s == "planar") g.mode = GridMode::planar;
            else if (s == "geographic") g.mode = GridMode::geographic;
            else throw InputError("config: grid.mode must be 'planar' or 'geographic'");
        } else if (k == "origin_lat") read(v, g.origin_lat, key);
        else if (k == "origin_lon") read(v, g.origin_lon, key);
        else if (k == "cell_size_km") read(v, g.cell_size_km, key);
        else if (k == "n_rows") read(v, g.n_rows, key);
        else if (k == "n_cols") read(v, g.n_cols, key);
        else if (k == "reference_lat") {
            if (!v.is_null()) {
                double x = 0.0;
                read(v, x, key);
                g.reference_lat = x;
            }
        } else unknown("grid", k);
    }
    return g;
}

json grid_json(const GridConfig& g) {
    json j = {{"mode", g.mode == GridMode::planar ? "planar" : "geographic"},
              {"origin_lat", g.origin_lat},
              {"origin_lon", g.origin_lon},
              {"cell_size_km", g.cell_size_km},
              {"n_rows", g.n_rows},
              {"n_cols", g.n_cols}};
    if (g.reference_lat) j["reference_lat"] = *g.reference_lat;
    return j;
}

InputPaths parse_inputs(const json& j) {
    expect_object(j, "inputs");
    InputPaths p;
    for (const auto& [k, v] : j.items()) {
        const std::string key = "inputs." + k;
        if (k == "browsing") read(v, p.browsing, key);
        else if (k == "towers") read(v, p.towers, key);
        else if (k == "checkins") read(v, p.checkins, key);
        else if (k == "trips") read(v, p.trips, key);
        else if (k == "shopping_matrix") read(v, p.shopping_matrix, key);
        else if (k == "shopping_mask") read(v, p.shopping_mask, key);
        else if (k == "mobility_matrix") read(v, p.mobility_matrix, key);
        else if (k == "weights") read(v, p.weights, key);
        else if (k == "model") read(v, p.model, key);
        else unknown("inputs", k);
    }
    return p;
}

json inputs_json(const InputPaths& p) {
    json j = json::object();
    auto put = [&](const char* k, const std::string& v) {
        if (!v.empty()) j[k] = v;
    };
    put("browsing", p.browsing);
    put("towers", p.towers);
    put("checkins", p.checkins);
    put("trips", p.trips);
    put("shopping_matrix", p.shopping_matrix);
    put("shopping_mask", p.shopping_mask);
    put("mobility_matrix", p.mobility_matrix);
    put("weights", p.weights);
    put("model", p.model);
    return j;
}

EvaluationConfig parse_evaluation(const json& j) {
    expect_object(j, "evaluation");
    EvaluationConfig e;
    for (const auto& [k, v] : j.items()) {
        const std::string key = "evaluation." + k;
        if (k == "fractions") read(v, e.fractions, key);
        else if (k == "repeats") read(v, e.repeats, key);
        else if (k == "threads") read(v, e.threads, key);
        else if (k == "variants") {
            std::vector<std::string> names;
            read(v, names, key);
            e.variants.clear();
            try {
                for (const auto& n : names) e.variants.push_back(parse_variant(n));
            } catch (const InvalidArgument& ex) {
                throw InputError(std::string("config: ") + ex.what());
            }
        } else unknown("evaluation", k);
    }
    return e;
}

json evaluation_json(const EvaluationConfig& e) {
    json names = json::array();
    for (Variant v : e.variants) names.push_back(std::string(to_string(v)));
    return {{"fractions", e.fractions}, {"repeats", e.repeats}, {"variants", names}, {"threads", e.threads}};
}

GravityTruth parse_truth(const json& j, const std::string& key) {
    expect_object(j, key);
    GravityTruth t;
    for (const auto& [k, v] : j.items()) {
        if (k == "a") read(v, t.a, key + ".a");
        else if (k == "b") read(v, t.b, key + ".b");
        else if (k == "g") read(v, t.g, key + ".g");
        else if (k == "c") read(v, t.c, key + ".c");
        else unknown(key, k);
    }
    return t;
}

json truth_json(const GravityTruth& t) { return {{"a", t.a}, {"b", t.b}, {"g", t.g}, {"c", t.c}}; }

SynthConfig parse_synth(const json& j) {
    expect_object(j, "synth");
    SynthConfig s;
    for (const auto& [k, v] : j.items()) {
        const std::string key = "synth." + k;
        if (k == "l") read(v, s.l, key);
        else if (k == "empty_row_fraction") read(v, s.empty_row_fraction, key);
        else if (k == "noise_sigma") read(v, s.noise_sigma, key);
        else if (k == "relative_noise") read(v, s.relative_noise, key);
        else if (k == "spatial_smoothing") read(v, s.spatial_smoothing, key);
        else if (k == "taxi") s.taxi = parse_truth(v, key);
        else if (k == "bus") s.bus = parse_truth(v, key);
        else if (k == "trips_taxi") read(v, s.trips_taxi, key);
        else if (k == "trips_bus") read(v, s.trips_bus, key);
        else if (k == "mass_scale") read(v, s.mass_scale, key);
        else if (k == "shopping_categories") read(v, s.shopping_categories, key);
        else if (k == "mobility_categories") read(v, s.mobility_categories, key);
        else if (k == "records_per_unit") read(v, s.records_per_unit, key);
        else if (k == "checkins_per_unit") read(v, s.checkins_per_unit, key);
        else if (k == "users_per_region") read(v, s.users_per_region, key);
        else unknown("synth", k);
    }
    return s;
}

json synth_json(const SynthConfig& s) {
    return {{"l", s.l},
            {"empty_row_fraction", s.empty_row_fraction},
            {"noise_sigma", s.noise_sigma},
            {"relative_noise", s.relative_noise},
            {"spatial_smoothing", s.spatial_smoothing},
            {"taxi", truth_json(s.taxi)},
            {"bus", truth_json(s.bus)},
            {"trips_taxi", s.trips_taxi},
            {"trips_bus", s.trips_bus},
            {"mass_scale", s.mass_scale},
            {"shopping_categories", s.shopping_categories},
            {"mobility_categories", s.mobility_categories},
            {"records_per_unit", s.records_per_unit},
            {"checkins_per_unit", s.checkins_per_unit},
            {"users_per_region", s.users_per_region}};
}

}  // namespace

RegionGrid GridConfig::build() const {
    if (mode == GridMode::planar) return RegionGrid::planar(cell_size_km, n_rows, n_cols);
    return RegionGrid::geographic({origin_lat, origin_lon}, cell_size_km, n_rows, n_cols, reference_lat);
}

void RunConfig::validate() const {
    (void)grid.build();
    if (n < 1 || m < 1) throw InvalidArgument("pattern counts n and m must be at least 1");
    if (shopping_categories < 0 || mobility_categories < 0)
        throw InvalidArgument("category counts must be non-negative");
    if (nmf_max_iters < 1) throw InvalidArgument("nmf_max_iters must be at least 1");
    if (!(nmf_tol >= 0.0)) throw InvalidArgument("nmf_tol must be non-negative");
    if (nmf_restarts < 1) throw InvalidArgument("nmf_restarts must be at least 1");
    if (top_k < 1) throw InvalidArgument("top_k must be at least 1");
    hyper.validate();
    if (evaluation.fractions.empty()) throw InvalidArgument("evaluation.fractions is empty");
    for (double f : evaluation.fractions)
        if (!(f > 0.0 && f < 1.0)) throw InvalidArgument("evaluation fractions must lie in (0, 1)");
    if (evaluation.repeats < 1) throw InvalidArgument("evaluation.repeats must be at least 1");
    if (evaluation.variants.empty()) throw InvalidArgument("evaluation.variants is empty");
    if (evaluation.threads < 1) throw InvalidArgument("evaluation.threads must be at least 1");
    SynthConfig s = synth;
    s.n_rows = grid.n_rows;
    s.n_cols = grid.n_cols;
    s.cell_size_km = grid.cell_size_km;
    s.n = n;
    s.m = m;
    s.validate();
    if (output_dir.empty()) throw InvalidArgument("output_dir is empty");
}

RunConfig parse_config(const json& j) {
    expect_object(j, "<root>");
    RunConfig c;
    for (const auto& [k, v] : j.items()) {
        if (k == "grid") c.grid = parse_grid(v);
        else if (k == "n") read(v, c.n, k);
        else if (k == "m") read(v, c.m, k);
        else if (k == "shopping_categories") read(v, c.shopping_categories, k);
        else if (k == "mobility_categories") read(v, c.mobility_categories, k);
        else if (k == "nmf_max_iters") read(v, c.nmf_max_iters, k);
        else if (k == "nmf_tol") read(v, c.nmf_tol, k);
        else if (k == "nmf_restarts") read(v, c.nmf_restarts, k);
        else if (k == "top_k") read(v, c.top_k, k);
        else if (k == "hyperparams") {
            expect_object(v, "hyperparams");
            if (v.contains("seed")) throw InputError("config: set the seed at the top level, not in hyperparams");
            c.hyper = io::hyperparams_from_json(v);
        } else if (k == "inputs") c.inputs = parse_inputs(v);
        else if (k == "evaluation") c.evaluation = parse_evaluation(v);
        else if (k == "synth") c.synth = parse_synth(v);
        else if (k == "output_dir") read(v, c.output_dir, k);
        else if (k == "emit_pgm") read(v, c.emit_pgm, k);
        else if (k == "seed") {
            if (!v.is_null()) {
                std::uint64_t s = 0;
                read(v, s, k);
                c.seed = s;
            }
        } else unknown("", k);
    }
    return c;
}

json to_json(const RunConfig& c) {
    json h = io::to_json(c.hyper);
    h.erase("seed");
    json j = {{"grid", grid_json(c.grid)},
              {"n", c.n},
              {"m", c.m},
              {"shopping_categories", c.shopping_categories},
              {"mobility_categories", c.mobility_categories},
              {"nmf_max_iters", c.nmf_max_iters},
              {"nmf_tol", c.nmf_tol},
              {"nmf_restarts", c.nmf_restarts},
              {"top_k", c.top_k},
              {"hyperparams", h},
              {"inputs", inputs_json(c.inputs)},
              {"evaluation", evaluation_json(c.evaluation)},
              {"synth", synth_json(c.synth)},
              {"output_dir", c.output_dir},
              {"emit_pgm", c.emit_pgm}};
    if (c.seed) j["seed"] = *c.seed;
    return j;
}

RunConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace citymf
