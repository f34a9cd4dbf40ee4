#include "citymf/evaluation.hpp"

#include "citymf/errors.hpp"
#include "citymf/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace citymf {

RowHoldoutSplit split_rows(const ShoppingPatternMatrix& shopping, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgument("train fraction must lie strictly between 0 and 1");
    std::vector<Index> candidates;
    for (Index i = 0; i < shopping.regions(); ++i) {
        bool any = false;
        for (Index j = 0; j < shopping.patterns() && !any; ++j)
            any = shopping.mask(i, j) != 0.0 && shopping.values(i, j) != 0.0;
        if (any) candidates.push_back(i);
    }
    if (candidates.size() < 2)
        throw InvalidArgument("row holdout needs at least 2 non-empty rows, found " +
                              std::to_string(candidates.size()));

    const double want = (1.0 - train_fraction) * static_cast<double>(candidates.size());
    auto held = static_cast<std::size_t>(std::ceil(want - 1e-9));
    held = std::clamp<std::size_t>(held, 1, candidates.size() - 1);

    Rng rng(seed);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    RowHoldoutSplit split;
    split.held_out_rows.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(held));
    std::sort(split.held_out_rows.begin(), split.held_out_rows.end());
    split.train_mask = shopping.mask;
    for (Index i : split.held_out_rows) {
        split.train_mask.row(i).setZero();
        for (Index j = 0; j < shopping.patterns(); ++j)
            if (shopping.mask(i, j) != 0.0 && shopping.values(i, j) != 0.0)
                split.test_entries.push_back({i, j, shopping.values(i, j)});
    }
    return split;
}

ShoppingPatternMatrix training_view(const ShoppingPatternMatrix& shopping, const RowHoldoutSplit& split) {
    ShoppingPatternMatrix out;
    out.mask = split.train_mask;
    out.values = shopping.values.cwiseProduct(split.train_mask);
    return out;
}

namespace {

void check_pair(std::span<const double> truth, std::span<const double> pred) {
    if (truth.empty()) throw InvalidArgument("metric over an empty list");
    if (truth.size() != pred.size())
        throw InvalidArgument("metric inputs differ in length: " + std::to_string(truth.size()) + " vs " +
                              std::to_string(pred.size()));
}

}  // namespace

double rmse(std::span<const double> truth, std::span<const double> pred) {
    check_pair(truth, pred);
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    return std::sqrt(s / static_cast<double>(truth.size()));
}

double mae(std::span<const double> truth, std::span<const double> pred) {
    check_pair(truth, pred);
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
    return s / static_cast<double>(truth.size());
}

double improvement_pct(double baseline, double improved) {
    if (!(baseline > 0.0)) throw InvalidArgument("improvement needs a positive baseline");
    return 100.0 * (baseline - improved) / baseline;
}

double MetricsReport::step_improvement_rmse(std::size_t v, std::size_t f) const {
    return improvement_pct(mean_rmse.at(v - 1).at(f), mean_rmse.at(v).at(f));
}
double MetricsReport::step_improvement_mae(std::size_t v, std::size_t f) const {
    return improvement_pct(mean_mae.at(v - 1).at(f), mean_mae.at(v).at(f));
}
double MetricsReport::total_improvement_rmse(std::size_t f) const {
    return improvement_pct(mean_rmse.front().at(f), mean_rmse.back().at(f));
}
double MetricsReport::total_improvement_mae(std::size_t f) const {
    return improvement_pct(mean_mae.front().at(f), mean_mae.back().at(f));
}

std::uint64_t split_seed(std::uint64_t master, std::size_t fraction_index, int repeat) {
    return derive_seed(stream_seed(master, Stream::split), {fraction_index, static_cast<std::uint64_t>(repeat)});
}

std::uint64_t train_seed(std::uint64_t master, std::size_t fraction_index, int repeat) {
    return derive_seed(stream_seed(master, Stream::train), {fraction_index, static_cast<std::uint64_t>(repeat)});
}

namespace {

[[noreturn]] void rethrow_annotated(Variant v, double fraction, int repeat) {
    char where[96];
    std::snprintf(where, sizeof where, " [variant %s, fraction %g, repeat %d]",
                  std::string(display_name(v)).c_str(), fraction, repeat);
    try {
        throw;
    } catch (const NumericalError& e) {
        throw NumericalError(e.what() + std::string(where));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(e.what() + std::string(where));
    } catch (const InputError& e) {
        throw InputError(e.what() + std::string(where));
    } catch (const std::exception& e) {
        throw Error(e.what() + std::string(where));
    }
}

std::vector<MetricCell> run_cell(const ExperimentData& data, const ExperimentOptions& opts, std::size_t f,
                                 int repeat) {
    const double fraction = opts.fractions[f];
    const RowHoldoutSplit split = split_rows(data.shopping, fraction, split_seed(opts.seed, f, repeat));
    const ShoppingPatternMatrix train_view = training_view(data.shopping, split);
    Hyperparams h = opts.hyper;
    h.seed = train_seed(opts.seed, f, repeat);

    std::vector<double> truth;
    truth.reserve(split.test_entries.size());
    for (const auto& t : split.test_entries) truth.push_back(t.value);

    std::vector<MetricCell> cells;
    for (Variant v : opts.variants) {
        try {
            RegularizerSpec reg;
            if (v == Variant::cmf_n) reg = {RegularizerKind::neighbor, data.neighbor_weights};
            if (v == Variant::cmf_i) reg = {RegularizerKind::interaction, data.interaction_weights};
            const TrainResult res = train(train_view, data.mobility, reg, h, v);
            if (!res.trace.strictly_decreasing()) throw NumericalError("loss trace is not strictly decreasing");
            const Matrix pred = predict(res.model);
            std::vector<double> guess;
            guess.reserve(split.test_entries.size());
            for (const auto& t : split.test_entries) guess.push_back(pred(t.row, t.col));
            MetricCell c;
            c.rmse = rmse(truth, guess);
            c.mae = mae(truth, guess);
            c.iterations = res.trace.steps.back().iteration;
            c.stop = res.trace.stop;
            cells.push_back(c);
        } catch (...) {
            rethrow_annotated(v, fraction, repeat);
        }
    }
    return cells;
}

}  // namespace

MetricsReport run_experiment(const ExperimentData& data, const ExperimentOptions& opts) {
    if (opts.repeats < 1) throw InvalidArgument("experiment needs repeats >= 1");
    if (opts.fractions.empty() || opts.variants.empty())
        throw InvalidArgument("experiment needs at least one fraction and one variant");
    opts.hyper.validate();

    const std::size_t nf = opts.fractions.size();
    const auto reps = static_cast<std::size_t>(opts.repeats);
    std::vector<std::vector<MetricCell>> results(nf * reps);
    std::vector<std::exception_ptr> errors(nf * reps);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < results.size(); job = next++) {
            try {
                results[job] = run_cell(data, opts, job / reps, static_cast<int>(job % reps));
            } catch (...) {
                errors[job] = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(results.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    MetricsReport rep;
    rep.variants = opts.variants;
    rep.fractions = opts.fractions;
    rep.repeats = opts.repeats;
    rep.hyper = opts.hyper;
    rep.seed = opts.seed;
    const std::size_t nv = opts.variants.size();
    rep.cells.assign(nv, std::vector<std::vector<MetricCell>>(nf, std::vector<MetricCell>(reps)));
    rep.mean_rmse.assign(nv, std::vector<double>(nf, 0.0));
    rep.mean_mae.assign(nv, std::vector<double>(nf, 0.0));
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t k = 0; k < reps; ++k) {
            for (std::size_t v = 0; v < nv; ++v) rep.cells[v][f][k] = results[f * reps + k][v];
        }
        for (std::size_t v = 0; v < nv; ++v) {
            double sr = 0.0, sa = 0.0;
            for (std::size_t k = 0; k < reps; ++k) {
                sr += rep.cells[v][f][k].rmse;
                sa += rep.cells[v][f][k].mae;
            }
            rep.mean_rmse[v][f] = sr / static_cast<double>(reps);
            rep.mean_mae[v][f] = sa / static_cast<double>(reps);
        }
    }
    return rep;
}

namespace {

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string pct(double x) {
    if (!std::isfinite(x)) return "n/a";
    return fixed(x, 2) + "%";
}

std::string pad(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

}  // namespace

std::string format_table(const MetricsReport& report) {
    constexpr std::size_t kLabel = 14, kCol = 10;
    std::ostringstream os;
    os << pad("Training Size", kLabel);
    for (double f : report.fractions) os << " |" << lpad(fixed(100.0 * f, 0) + "%", 2 * kCol + 1);
    os << '\n' << pad("Metrics", kLabel);
    for (std::size_t f = 0; f < report.fractions.size(); ++f) os << " |" << lpad("RMSE", kCol) << lpad("MAE", kCol + 1);
    os << '\n' << std::string(kLabel + report.fractions.size() * (2 * kCol + 3), '-') << '\n';

    auto safe = [](auto fn) {
        try {
            return fn();
        } catch (const InvalidArgument&) {
            return std::nan("");
        }
    };
    for (std::size_t v = 0; v < report.variants.size(); ++v) {
        os << pad(std::string(display_name(report.variants[v])), kLabel);
        for (std::size_t f = 0; f < report.fractions.size(); ++f)
            os << " |" << lpad(fixed(report.mean_rmse[v][f], 4), kCol) << lpad(fixed(report.mean_mae[v][f], 4), kCol + 1);
        os << '\n';
        if (v == 0) continue;
        os << pad("  improve", kLabel);
        for (std::size_t f = 0; f < report.fractions.size(); ++f)
            os << " |" << lpad(pct(safe([&] { return report.step_improvement_rmse(v, f); })), kCol)
               << lpad(pct(safe([&] { return report.step_improvement_mae(v, f); })), kCol + 1);
        os << '\n';
    }
    if (report.variants.size() > 1) {
        os << pad("Total", kLabel);
        for (std::size_t f = 0; f < report.fractions.size(); ++f)
            os << " |" << lpad(pct(safe([&] { return report.total_improvement_rmse(f); })), kCol)
               << lpad(pct(safe([&] { return report.total_improvement_mae(f); })), kCol + 1);
        os << '\n';
    }
    return os.str();
}

}  // namespace citymf
