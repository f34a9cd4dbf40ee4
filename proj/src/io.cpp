#include "citymf/io.hpp"

#include "citymf/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace citymf::io {

namespace {

std::string where(const fs::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

double parse_double(std::string_view s, const fs::path& path, std::size_t line, std::string_view field) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
        throw InputError(where(path, line) + ": field '" + std::string(field) + "' is not a finite number: '" +
                         std::string(s) + "'");
    return v;
}

template <class Int>
Int parse_int(std::string_view s, const fs::path& path, std::size_t line, std::string_view field) {
    Int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw InputError(where(path, line) + ": field '" + std::string(field) + "' is not an integer: '" +
                         std::string(s) + "'");
    return v;
}

// Calls fn(fields, line_number) for every data line with exactly
// header.size() fields. A first line equal to the header is skipped.
template <class Fn>
void for_each_row(const fs::path& path, const std::vector<std::string_view>& header, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string text;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, text)) {
        ++line_no;
        std::string_view sv = trim(text);
        if (sv.empty() || sv.front() == '#') continue;
        auto fields = split_fields(sv);
        if (first) {
            first = false;
            if (fields == header) continue;
        }
        if (fields.size() != header.size())
            throw InputError(where(path, line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        fn(fields, line_no);
    }
}

GeoPoint parse_point(std::string_view lat, std::string_view lon, const fs::path& path, std::size_t line,
                     bool geographic) {
    GeoPoint p{parse_double(lat, path, line, "lat"), parse_double(lon, path, line, "lon")};
    if (geographic && !p.valid_geographic())
        throw InputError(where(path, line) + ": coordinate out of range");
    return p;
}

std::string require_id(std::string_view s, const fs::path& path, std::size_t line, std::string_view field) {
    if (s.empty()) throw InputError(where(path, line) + ": empty " + std::string(field));
    return std::string(s);
}

void append_row(std::string& out, const auto& row) {
    for (Index j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        out += format_double(row(j));
    }
    out += '\n';
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw InputError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot rename onto " + path.string());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<BrowsingRecord> read_browsing_csv(const fs::path& path) {
    std::vector<BrowsingRecord> out;
    for_each_row(path, {"location_id", "product_category_id"}, [&](const auto& f, std::size_t line) {
        int c = parse_int<int>(f[1], path, line, "product_category_id");
        if (c < 0) throw InputError(where(path, line) + ": negative product_category_id");
        out.push_back({require_id(f[0], path, line, "location_id"), c});
    });
    return out;
}

std::vector<std::pair<std::string, GeoPoint>> read_towers_csv(const fs::path& path, bool geographic) {
    std::vector<std::pair<std::string, GeoPoint>> out;
    for_each_row(path, {"location_id", "lat", "lon"}, [&](const auto& f, std::size_t line) {
        out.emplace_back(require_id(f[0], path, line, "location_id"),
                         parse_point(f[1], f[2], path, line, geographic));
    });
    return out;
}

std::vector<CheckinRecord> read_checkins_csv(const fs::path& path, bool geographic) {
    std::vector<CheckinRecord> out;
    for_each_row(path, {"user_id", "poi_category_id", "lat", "lon", "timestamp"},
                 [&](const auto& f, std::size_t line) {
                     CheckinRecord r;
                     r.user_id = require_id(f[0], path, line, "user_id");
                     r.poi_category_id = parse_int<int>(f[1], path, line, "poi_category_id");
                     if (r.poi_category_id < 0)
                         throw InputError(where(path, line) + ": negative poi_category_id");
                     r.point = parse_point(f[2], f[3], path, line, geographic);
                     r.timestamp = parse_int<std::int64_t>(f[4], path, line, "timestamp");
                     out.push_back(std::move(r));
                 });
    return out;
}

std::vector<TripRecord> read_trips_csv(const fs::path& path, bool geographic) {
    std::vector<TripRecord> out;
    for_each_row(path, {"mode", "origin_lat", "origin_lon", "dest_lat", "dest_lon"},
                 [&](const auto& f, std::size_t line) {
                     TripRecord t;
                     try {
                         t.mode = parse_transport_mode(f[0]);
                     } catch (const Error& e) {
                         throw InputError(where(path, line) + ": " + e.what());
                     }
                     t.origin = parse_point(f[1], f[2], path, line, geographic);
                     t.destination = parse_point(f[3], f[4], path, line, geographic);
                     out.push_back(t);
                 });
    return out;
}

std::string browsing_csv(const std::vector<BrowsingRecord>& records) {
    std::string out = "location_id,product_category_id\n";
    for (const auto& r : records) out += r.location_id + ',' + std::to_string(r.product_category_id) + '\n';
    return out;
}

std::string towers_csv(const std::vector<std::pair<std::string, GeoPoint>>& towers) {
    std::string out = "location_id,lat,lon\n";
    for (const auto& [id, p] : towers) out += id + ',' + format_double(p.lat) + ',' + format_double(p.lon) + '\n';
    return out;
}

std::string checkins_csv(const std::vector<CheckinRecord>& records) {
    std::string out = "user_id,poi_category_id,lat,lon,timestamp\n";
    for (const auto& r : records)
        out += r.user_id + ',' + std::to_string(r.poi_category_id) + ',' + format_double(r.point.lat) + ',' +
               format_double(r.point.lon) + ',' + std::to_string(r.timestamp) + '\n';
    return out;
}

std::string trips_csv(const std::vector<TripRecord>& trips) {
    std::string out = "mode,origin_lat,origin_lon,dest_lat,dest_lon\n";
    for (const auto& t : trips)
        out += std::string(to_string(t.mode)) + ',' + format_double(t.origin.lat) + ',' +
               format_double(t.origin.lon) + ',' + format_double(t.destination.lat) + ',' +
               format_double(t.destination.lon) + '\n';
    return out;
}

Matrix read_matrix_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        std::string_view sv = trim(text);
        if (sv.empty()) continue;
        auto fields = split_fields(sv);
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j)
            row.push_back(parse_double(fields[j], path, line_no, "column " + std::to_string(j)));
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError(where(path, line_no) + ": expected " + std::to_string(rows.front().size()) +
                             " columns, found " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

std::string matrix_csv(const Matrix& m) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) append_row(out, m.row(i));
    return out;
}

std::string keyed_matrix_csv(const std::string& key_name, const std::vector<std::string>& keys, const Matrix& m) {
    if (static_cast<Index>(keys.size()) != m.rows()) throw InvalidArgument("keyed_matrix_csv: key count mismatch");
    std::string out = key_name;
    for (Index j = 0; j < m.cols(); ++j) out += ',' + std::to_string(j);
    out += '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        out += keys[static_cast<std::size_t>(i)] + ',';
        append_row(out, m.row(i));
    }
    return out;
}

std::string top_categories_csv(const Matrix& basis, int k) {
    std::string out = "pattern,rank,category_id,weight\n";
    for (Index p = 0; p < basis.rows(); ++p) {
        auto top = top_categories(basis, p, k);
        for (std::size_t rank = 0; rank < top.size(); ++rank)
            out += std::to_string(p) + ',' + std::to_string(rank + 1) + ',' + std::to_string(top[rank].first) + ',' +
                   format_double(top[rank].second) + '\n';
    }
    return out;
}

json to_json(const GravityParams& p) {
    return {{"mode", std::string(to_string(p.mode))},
            {"a", p.a},
            {"b", p.b},
            {"g", p.g},
            {"ln_c", p.ln_c},
            {"n_pairs_used", p.n_pairs_used}};
}

GravityParams gravity_from_json(const json& j) {
    try {
        GravityParams p;
        p.mode = parse_transport_mode(j.at("mode").get<std::string>());
        p.a = j.at("a").get<double>();
        p.b = j.at("b").get<double>();
        p.g = j.at("g").get<double>();
        p.ln_c = j.at("ln_c").get<double>();
        p.n_pairs_used = j.value("n_pairs_used", Index{0});
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("gravity params: ") + e.what());
    }
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, Index rows, Index cols) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows)
        throw InputError("matrix: expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw InputError("matrix: row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
        for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json to_json(const Hyperparams& h) {
    return {{"l", h.l},
            {"lambda1", h.lambda1},
            {"lambda2", h.lambda2},
            {"alpha", h.alpha},
            {"max_iters", h.max_iters},
            {"epsilon", h.epsilon},
            {"seed", h.seed},
            {"gradient", std::string(to_string(h.gradient))}};
}

Hyperparams hyperparams_from_json(const json& j, Hyperparams h) {
    if (!j.is_object()) throw InputError("hyperparams: expected an object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "l") h.l = v.get<int>();
            else if (key == "lambda1") h.lambda1 = v.get<double>();
            else if (key == "lambda2") h.lambda2 = v.get<double>();
            else if (key == "alpha") h.alpha = v.get<double>();
            else if (key == "max_iters") h.max_iters = v.get<int>();
            else if (key == "epsilon") h.epsilon = v.get<double>();
            else if (key == "seed") h.seed = v.get<std::uint64_t>();
            else if (key == "gradient") h.gradient = parse_gradient_mode(v.get<std::string>());
            else throw InputError("hyperparams: unknown key '" + key + "'");
        } catch (const json::exception& e) {
            throw InputError("hyperparams." + key + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw InputError("hyperparams." + key + ": " + e.what());
        }
    }
    return h;
}

json to_json(const TrainedModel& m) {
    const auto& f = m.factors;
    return {{"dims",
             {{"r", f.lifestyles.rows()},
              {"n", f.shopping_view.rows()},
              {"m", f.mobility_view.rows()},
              {"l", f.lifestyles.cols()}}},
            {"variant", std::string(to_string(m.variant))},
            {"hyperparams", to_json(m.hyper)},
            {"shopping_scale", m.shopping_scale},
            {"mobility_scale", m.mobility_scale},
            {"final_loss", m.final_loss},
            {"R_l", matrix_to_json(f.lifestyles)},
            {"V1", matrix_to_json(f.shopping_view)},
            {"V2", matrix_to_json(f.mobility_view)}};
}

TrainedModel model_from_json(const json& j) {
    try {
        const json& d = j.at("dims");
        Index r = d.at("r").get<Index>(), n = d.at("n").get<Index>(), m = d.at("m").get<Index>(),
              l = d.at("l").get<Index>();
        if (r < 1 || n < 1 || m < 1 || l < 1) throw InputError("model: dimensions must be positive");
        TrainedModel out;
        out.variant = parse_variant(j.at("variant").get<std::string>());
        out.hyper = hyperparams_from_json(j.at("hyperparams"));
        out.shopping_scale = j.at("shopping_scale").get<double>();
        out.mobility_scale = j.at("mobility_scale").get<double>();
        out.final_loss = j.at("final_loss").get<double>();
        out.factors.lifestyles = matrix_from_json(j.at("R_l"), r, l);
        out.factors.shopping_view = matrix_from_json(j.at("V1"), n, l);
        out.factors.mobility_view = matrix_from_json(j.at("V2"), m, l);
        return out;
    } catch (const json::exception& e) {
        throw InputError(std::string("model: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw InputError(std::string("model: ") + e.what());
    }
}

std::string loss_trace_csv(const LossTrace& trace) {
    std::string out = "iter,loss,gamma\n";
    for (const auto& s : trace.steps)
        out += std::to_string(s.iteration) + ',' + format_double(s.loss) + ',' + format_double(s.gamma) + '\n';
    return out;
}

json to_json(const MetricsReport& r) {
    json variants = json::array();
    for (std::size_t v = 0; v < r.variants.size(); ++v) {
        json per_fraction = json::array();
        for (std::size_t f = 0; f < r.fractions.size(); ++f) {
            json repeats = json::array();
            for (const auto& c : r.cells[v][f])
                repeats.push_back({{"rmse", c.rmse},
                                   {"mae", c.mae},
                                   {"iterations", c.iterations},
                                   {"stop", std::string(to_string(c.stop))}});
            json cell = {{"fraction", r.fractions[f]},
                         {"mean_rmse", r.mean_rmse[v][f]},
                         {"mean_mae", r.mean_mae[v][f]},
                         {"repeats", std::move(repeats)}};
            if (v > 0) {
                cell["improve_rmse_pct"] = r.step_improvement_rmse(v, f);
                cell["improve_mae_pct"] = r.step_improvement_mae(v, f);
            }
            per_fraction.push_back(std::move(cell));
        }
        variants.push_back({{"variant", std::string(to_string(r.variants[v]))},
                            {"name", std::string(display_name(r.variants[v]))},
                            {"fractions", std::move(per_fraction)}});
    }
    json total = json::array();
    if (r.variants.size() >= 2)
        for (std::size_t f = 0; f < r.fractions.size(); ++f)
            total.push_back({{"fraction", r.fractions[f]},
                             {"improve_rmse_pct", r.total_improvement_rmse(f)},
                             {"improve_mae_pct", r.total_improvement_mae(f)}});
    return {{"seed", r.seed},
            {"repeats", r.repeats},
            {"fractions", r.fractions},
            {"hyperparams", to_json(r.hyper)},
            {"variants", std::move(variants)},
            {"total", std::move(total)}};
}

json to_json(const SynthTruth& t) {
    json o = json::array(), d = json::array();
    for (Index i = 0; i < t.origin_mass.size(); ++i) o.push_back(t.origin_mass(i));
    for (Index i = 0; i < t.dest_mass.size(); ++i) d.push_back(t.dest_mass(i));
    return {{"dims",
             {{"r", t.lifestyles.rows()},
              {"n", t.shopping_view.rows()},
              {"m", t.mobility_view.rows()},
              {"l", t.lifestyles.cols()}}},
            {"gravity", {{"taxi", to_json(t.taxi)}, {"bus", to_json(t.bus)}}},
            {"origin_mass", std::move(o)},
            {"dest_mass", std::move(d)},
            {"R_l", matrix_to_json(t.lifestyles)},
            {"V1", matrix_to_json(t.shopping_view)},
            {"V2", matrix_to_json(t.mobility_view)}};
}

std::string heatmap_csv(const Heatmap& h) {
    if (h.values.size() != h.grid.size()) throw InvalidArgument("heatmap: value count does not match grid");
    std::string out = "row,col,center_lat,center_lon,value\n";
    for (Index i = 0; i < h.grid.size(); ++i) {
        if (!std::isfinite(h.values(i))) throw NumericalError("heatmap: non-finite value at region " + std::to_string(i));
        GeoPoint c = h.grid.center(i);
        out += std::to_string(h.grid.row_of(i)) + ',' + std::to_string(h.grid.col_of(i)) + ',' + format_double(c.lat) +
               ',' + format_double(c.lon) + ',' + format_double(h.values(i)) + '\n';
    }
    return out;
}

std::string heatmap_pgm(const Heatmap& h) {
    if (h.values.size() != h.grid.size()) throw InvalidArgument("heatmap: value count does not match grid");
    const double lo = h.values.size() ? h.values.minCoeff() : 0.0;
    const double hi = h.values.size() ? h.values.maxCoeff() : 0.0;
    std::string out = "P2\n" + std::to_string(h.grid.n_cols()) + ' ' + std::to_string(h.grid.n_rows()) + "\n255\n";
    for (int row = h.grid.n_rows() - 1; row >= 0; --row) {
        for (int col = 0; col < h.grid.n_cols(); ++col) {
            double v = h.values(h.grid.index(row, col));
            int level = hi > lo ? static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo))) : 0;
            if (col) out += ' ';
            out += std::to_string(std::clamp(level, 0, 255));
        }
        out += '\n';
    }
    return out;
}

}  // namespace citymf::io
