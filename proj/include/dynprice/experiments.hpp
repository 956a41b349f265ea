#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynprice/analysis.hpp"
#include "dynprice/config.hpp"
#include "dynprice/detail/format.hpp"
#include "dynprice/parallel.hpp"
#include "dynprice/random.hpp"
#include "dynprice/sgd_controller.hpp"

namespace dynprice {

/// Output could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Independent seed for one purpose within an experiment, so that e.g. the
/// grid oracle and the SGD runs never share substreams.
enum class SeedPurpose : std::uint64_t { Oracle = 1, Sgd = 2, Coupling = 3, GradCheck = 4, BiasVar = 5 };

inline std::uint64_t derive_seed(std::uint64_t seed, SeedPurpose purpose) {
    return detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(purpose) * 0xd1b54a32d192ed03ULL));
}

// ---------------------------------------------------------------------------
// Output helpers

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("failed writing '" + path_.string() + "'");
    }

    ~CsvWriter() {
        if (out_.is_open()) out_.close();
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline std::string cell(double x) { return format_real(x); }
inline std::string cell(std::uint64_t x) { return std::to_string(x); }
inline std::string cell(std::int64_t x) { return std::to_string(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(bool x) { return x ? "1" : "0"; }
inline std::string cell(const std::string& s) { return s.find(',') == std::string::npos ? s : '"' + s + '"'; }

using ResultFields = std::vector<std::pair<std::string, std::string>>;

/// Output of one experiment run: the files written and headline numbers.
struct RunSummary {
    std::vector<std::filesystem::path> files;
    ResultFields results;
};

inline std::filesystem::path prepare_output(const ExperimentConfig& c) {
    std::error_code ec;
    std::filesystem::create_directories(c.output, ec);
    if (ec || !std::filesystem::is_directory(c.output))
        throw IoError("cannot create output directory '" + c.output + "'");
    return std::filesystem::path(c.output);
}

/// Sidecar next to a CSV: code version, seed, the resolved config, and the
/// headline results.
inline void write_metadata(const std::filesystem::path& csv, const ExperimentConfig& c, const ResultFields& results) {
    const std::filesystem::path path = csv.string() + ".meta";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "[meta]\n"
        << "version = " << kVersion << '\n'
        << "seed = " << c.seed << '\n'
        << "csv = " << csv.filename().string() << "\n\n"
        << dump(c);
    if (!results.empty()) {
        out << "\n[result]\n";
        for (const auto& [k, v] : results) out << k << " = " << v << '\n';
    }
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::vector<double> grid_of(const GridSpec& g) { return make_grid(g.start, g.stop, g.step); }

// ---------------------------------------------------------------------------
// Revenue curve

inline PsiCurve run_psi_curve(const ExperimentConfig& c) {
    return estimate_psi_curve(c.model.build(), c.service, grid_of(c.grid), c.grid.n_eff,
                              derive_seed(c.seed, SeedPurpose::Oracle), PsiCurveOptions{c.threads});
}

inline ResultFields curve_results(const PsiCurve& curve) {
    return {{"argmax_price", cell(curve.argmax_price)},
            {"argmax_value", cell(curve.argmax_value)},
            {"refined_price", cell(curve.refined_price)},
            {"refined_value", cell(curve.refined_value)}};
}

inline RunSummary psi_grid_experiment(const ExperimentConfig& c) {
    const auto dir = prepare_output(c);
    const PsiCurve curve = run_psi_curve(c);
    const auto path = dir / "psi_grid.csv";
    CsvWriter csv(path, {"price", "a_hat", "psi_hat"});
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
        csv.row({cell(curve.grid[i]), cell(curve.a_hat[i]), cell(curve.psi_hat[i])});
    csv.close();
    RunSummary s{{path}, curve_results(curve)};
    write_metadata(path, c, s.results);
    return s;
}

// ---------------------------------------------------------------------------
// SGD runs and regret

struct SgdBatch {
    PsiCurve oracle;
    std::vector<SgdTrace> traces;
    std::vector<RegretReport> regrets;
};

/// Replication r runs on substream (derived seed, r); the regret oracle is the
/// grid revenue curve from the same config.
inline SgdBatch run_sgd_batch(const ExperimentConfig& c) {
    const std::vector<double> grid = grid_of(c.grid);
    if (grid.front() > c.sgd.p_lo || grid.back() < c.sgd.p_hi)
        throw ConfigError("grid.stop", "the oracle grid must cover [price.p_lo, price.p_hi]");
    const JoiningModel model = c.model.build();
    SgdBatch batch;
    batch.oracle = run_psi_curve(c);
    batch.traces.resize(c.replications);
    const std::uint64_t seed = derive_seed(c.seed, SeedPurpose::Sgd);
    parallel_for(c.replications, c.threads, [&](std::size_t r) {
        RandomStream rng(seed, r);
        batch.traces[r] = run_sgd(c.sgd, model, c.service, rng);
    });
    for (const auto& t : batch.traces) batch.regrets.push_back(compute_regret(t, batch.oracle, c.sgd.alpha));
    return batch;
}

/// Mean of the last `n` prices p_{k-1} of a trace (fewer if the trace is short).
inline double tail_mean_price(const SgdTrace& trace, std::size_t n) {
    const std::size_t m = std::min(n, trace.iterations.size());
    double sum = 0.0;
    for (std::size_t i = trace.iterations.size() - m; i < trace.iterations.size(); ++i)
        sum += trace.iterations[i].price;
    return m ? sum / static_cast<double>(m) : std::numeric_limits<double>::quiet_NaN();
}

inline std::string replication_name(std::size_t r) {
    std::string s = std::to_string(r);
    return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

inline RunSummary sgd_experiment(const ExperimentConfig& c) {
    const auto dir = prepare_output(c);
    const SgdBatch batch = run_sgd_batch(c);
    RunSummary s;
    double pooled = 0.0;
    for (std::size_t r = 0; r < batch.traces.size(); ++r) {
        const auto path = dir / ("sgd_" + replication_name(r) + ".csv");
        CsvWriter csv(path, {"k", "price", "T_star", "T_k", "N_k", "a_hat", "grad_a_hat", "psi_grad_hat", "revenue",
                             "cum_sim_time", "cum_regret"});
        const SgdTrace& t = batch.traces[r];
        for (std::size_t i = 0; i < t.iterations.size(); ++i) {
            const SgdIteration& it = t.iterations[i];
            csv.row({cell(it.k), cell(it.price), cell(it.t_star), cell(it.duration), cell(it.count), cell(it.a_hat),
                     cell(it.grad_a_hat), cell(it.psi_grad_hat), cell(it.revenue), cell(it.cum_sim_time),
                     cell(batch.regrets[r].cumulative[i])});
        }
        csv.close();
        s.files.push_back(path);
        pooled += tail_mean_price(t, 10);
    }
    pooled /= static_cast<double>(batch.traces.size());

    const auto path = dir / "sgd_summary.csv";
    CsvWriter csv(path, {"replication", "final_price", "tail_mean_price", "final_psi", "cum_regret"});
    for (std::size_t r = 0; r < batch.traces.size(); ++r) {
        const SgdTrace& t = batch.traces[r];
        csv.row({cell(static_cast<std::uint64_t>(r)), cell(t.final_price), cell(tail_mean_price(t, 10)),
                 cell(batch.oracle.interpolate(t.final_price)), cell(batch.regrets[r].cumulative.back())});
    }
    csv.close();
    s.files.push_back(path);
    s.results = curve_results(batch.oracle);
    s.results.emplace_back("pooled_tail_mean_price", cell(pooled));
    for (const auto& f : s.files) write_metadata(f, c, s.results);
    return s;
}

struct RegretSummary {
    std::vector<double> mean_cumulative, comparator, mean_ratio, mean_suboptimal, mean_nonstationarity;
};

/// Replication means of the regret series, indexed by k-1.
inline RegretSummary summarize_regret(const SgdBatch& batch) {
    RegretSummary s;
    const std::size_t n = batch.regrets.front().cumulative.size();
    const double inv = 1.0 / static_cast<double>(batch.regrets.size());
    s.mean_cumulative.assign(n, 0.0);
    s.mean_ratio.assign(n, 0.0);
    s.mean_suboptimal.assign(n, 0.0);
    s.mean_nonstationarity.assign(n, 0.0);
    s.comparator = batch.regrets.front().comparator;
    for (const auto& rep : batch.regrets) {
        double sub = 0.0, non = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sub += rep.suboptimal_price[i];
            non += rep.nonstationarity[i];
            s.mean_cumulative[i] += rep.cumulative[i] * inv;
            s.mean_ratio[i] += rep.ratio[i] * inv;
            s.mean_suboptimal[i] += sub * inv;
            s.mean_nonstationarity[i] += non * inv;
        }
    }
    return s;
}

inline RunSummary regret_experiment(const ExperimentConfig& c) {
    const auto dir = prepare_output(c);
    const SgdBatch batch = run_sgd_batch(c);
    const RegretSummary rs = summarize_regret(batch);
    RunSummary s;
    const auto path = dir / "regret.csv";
    CsvWriter csv(path, {"k", "mean_cum_regret", "comparator", "mean_ratio", "mean_cum_suboptimal_price",
                         "mean_cum_nonstationarity"});
    for (std::size_t i = 0; i < rs.comparator.size(); ++i)
        csv.row({cell(static_cast<std::uint64_t>(i + 1)), cell(rs.mean_cumulative[i]), cell(rs.comparator[i]),
                 cell(rs.mean_ratio[i]), cell(rs.mean_suboptimal[i]), cell(rs.mean_nonstationarity[i])});
    csv.close();
    s.files.push_back(path);

    const auto cp_path = dir / "regret_checkpoints.csv";
    CsvWriter cp(cp_path, {"L", "mean_cum_regret", "comparator", "mean_ratio"});
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto k : c.checkpoints) {
        const std::size_t i = k - 1;
        cp.row({cell(k), cell(rs.mean_cumulative[i]), cell(rs.comparator[i]), cell(rs.mean_ratio[i])});
        lo = std::min(lo, rs.mean_ratio[i]);
        hi = std::max(hi, rs.mean_ratio[i]);
    }
    cp.close();
    s.files.push_back(cp_path);
    s.results = curve_results(batch.oracle);
    s.results.emplace_back("checkpoint_ratio_range", cell(hi / lo));
    for (const auto& f : s.files) write_metadata(f, c, s.results);
    return s;
}

// ---------------------------------------------------------------------------
// Coupling

inline CouplingReport run_coupling_experiment(const ExperimentConfig& c) {
    const CouplingSpec& k = c.coupling;
    return run_coupling(c.model.build(), c.service, k.price, k.w1, k.w2, k.steps, k.replications,
                        derive_seed(c.seed, SeedPurpose::Coupling), c.threads);
}

inline RunSummary coupling_experiment(const ExperimentConfig& c) {
    const auto dir = prepare_output(c);
    const CouplingReport rep = run_coupling_experiment(c);
    RunSummary s;
    const auto path = dir / "coupling.csv";
    CsvWriter csv(path, {"n", "mean_abs_dw", "mean_abs_da", "mean_abs_dt"});
    csv.row({cell(std::uint64_t{0}), cell(rep.initial_abs_dw), cell(0.0), cell(0.0)});
    for (std::size_t n = 0; n < rep.mean_abs_dw.size(); ++n)
        csv.row({cell(static_cast<std::uint64_t>(n + 1)), cell(rep.mean_abs_dw[n]), cell(rep.mean_abs_da[n]),
                 cell(rep.mean_abs_dt[n])});
    csv.close();
    s.files.push_back(path);

    const auto paths = dir / "coupling_paths.csv";
    CsvWriter pc(paths, {"replication", "coupling_step"});
    std::uint64_t coupled = 0;
    for (std::size_t r = 0; r < rep.coupling_step.size(); ++r) {
        pc.row({cell(static_cast<std::uint64_t>(r)), cell(rep.coupling_step[r])});
        if (rep.coupling_step[r] >= 0) ++coupled;
    }
    pc.close();
    s.files.push_back(paths);
    s.results = {{"slope", cell(rep.slope)},
                 {"decay_rate", cell(rep.decay_rate)},
                 {"coupled_fraction", cell(static_cast<double>(coupled) / static_cast<double>(rep.replications))},
                 {"gap_frozen", cell(rep.gap_frozen)}};
    for (const auto& f : s.files) write_metadata(f, c, s.results);
    return s;
}

// ---------------------------------------------------------------------------
// Derivative check

struct GradCheckRow {
    JoiningFamily family;
    double price, workload, seed;
    bool busy;
    InverseSample closed;
    InverseSample generic;
    double fd_p, fd_w;
    double roundtrip;
};

/// Central difference of the inverse in one argument, step 1e-6 max(1, |x|);
/// one-sided where the central stencil would leave x >= 0.
template <class F>
double central_difference(F&& f, double x) {
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    if (x - h < 0.0) return (f(x + h) - f(x)) / h;
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline std::vector<GradCheckRow> run_grad_check(const ExperimentConfig& c) {
    std::vector<GradCheckRow> rows;
    const std::uint64_t seed = derive_seed(c.seed, SeedPurpose::GradCheck);
    for (auto family : {JoiningFamily::Exponential, JoiningFamily::Polynomial}) {
        ModelSpec spec = c.model;
        spec.family = family;
        spec.generic = false;
        const JoiningModel model = spec.build();
        const JoiningModel generic = model.as_generic();
        RandomStream rng(seed, static_cast<std::uint64_t>(family));
        for (std::uint64_t i = 0; i < c.grad_check.points; ++i) {
            GradCheckRow row{};
            row.family = family;
            row.price = c.grad_check.p_max * rng.uniform_open();
            row.workload = c.grad_check.w_max * rng.uniform_open();
            row.seed = rng.uniform_open();
            const InterarrivalLaw law(model, row.price, row.workload);
            row.closed = law.invert(row.seed);
            row.busy = row.closed.busy;
            row.generic = InterarrivalLaw(generic, row.price, row.workload).invert(row.seed);
            row.fd_p = central_difference(
                [&](double p) { return InterarrivalLaw(model, p, row.workload).inverse_cdf(row.seed); }, row.price);
            row.fd_w = central_difference(
                [&](double w) { return InterarrivalLaw(model, row.price, w).inverse_cdf(row.seed); }, row.workload);
            row.roundtrip = std::abs(law.cdf(row.closed.interarrival) - row.seed);
            rows.push_back(row);
        }
    }
    return rows;
}

inline RunSummary grad_check_experiment(const ExperimentConfig& c) {
    const auto dir = prepare_output(c);
    const auto rows = run_grad_check(c);
    RunSummary s;
    const auto path = dir / "grad_check.csv";
    CsvWriter csv(path, {"family", "price", "workload", "seed", "busy", "interarrival", "partial_p", "fd_partial_p",
                         "partial_w", "fd_partial_w", "roundtrip_error", "generic_interarrival", "generic_partial_p",
                         "generic_partial_w"});
    double worst_generic = 0.0, worst_roundtrip = 0.0;
    for (const auto& r : rows) {
        csv.row({to_string(r.family), cell(r.price), cell(r.workload), cell(r.seed), cell(r.busy),
                 cell(r.closed.interarrival), cell(r.closed.partial_p), cell(r.fd_p), cell(r.closed.partial_w),
                 cell(r.fd_w), cell(r.roundtrip), cell(r.generic.interarrival), cell(r.generic.partial_p),
                 cell(r.generic.partial_w)});
        worst_roundtrip = std::max(worst_roundtrip, r.roundtrip);
        worst_generic = std::max({worst_generic, std::abs(r.closed.interarrival - r.generic.interarrival),
                                  std::abs(r.closed.partial_p - r.generic.partial_p),
                                  std::abs(r.closed.partial_w - r.generic.partial_w)});
    }
    csv.close();
    s.files.push_back(path);
    s.results = {{"max_roundtrip_error", cell(worst_roundtrip)}, {"max_generic_difference", cell(worst_generic)}};
    write_metadata(path, c, s.results);
    return s;
}

// ---------------------------------------------------------------------------
// Bias and variability

struct BiasVarResult {
    GradientOracle oracle;
    std::vector<BiasVarianceRow> rows;
};

inline BiasVarResult run_bias_var(const ExperimentConfig& c) {
    const BiasVarSpec& b = c.bias_var;
    const JoiningModel model = c.model.build();
    BiasVarResult res;
    res.oracle = psi_gradient_oracle(model, c.service, b.price, b.oracle_step, b.oracle_n_eff, b.oracle_pairs,
                                     derive_seed(c.seed, SeedPurpose::Oracle), c.threads);
    res.rows = bias_variance_diagnostic(model, c.service, b.price, b.windows, b.replications, res.oracle.value,
                                        derive_seed(c.seed, SeedPurpose::BiasVar), b.burn_in, c.threads);
    return res;
}

inline RunSummary bias_var_experiment(const ExperimentConfig& c) {
    const auto dir = prepare_output(c);
    const BiasVarResult res = run_bias_var(c);
    RunSummary s;
    const auto path = dir / "bias_var.csv";
    CsvWriter csv(path, {"t_star", "replications", "mean_grad", "std_error", "oracle_grad", "bias_proxy",
                         "second_moment", "variance", "mean_count"});
    for (const auto& r : res.rows)
        csv.row({cell(r.t_star), cell(static_cast<std::uint64_t>(r.replications)), cell(r.mean_grad),
                 cell(r.std_error), cell(r.oracle_grad), cell(r.bias_proxy), cell(r.second_moment), cell(r.variance),
                 cell(r.mean_count)});
    csv.close();
    s.files.push_back(path);
    s.results = {{"oracle_grad", cell(res.oracle.value)}, {"oracle_std_error", cell(res.oracle.std_error)}};
    write_metadata(path, c, s.results);
    return s;
}

// ---------------------------------------------------------------------------
// Service-time study

inline RunSummary service_study_experiment(const ExperimentConfig& c) {
    const auto dir = prepare_output(c);
    const auto rows = service_study(c.model.build(), c.study_services, grid_of(c.grid), c.grid.n_eff,
                                    derive_seed(c.seed, SeedPurpose::Oracle), PsiCurveOptions{c.threads});
    RunSummary s;
    const auto path = dir / "service_study.csv";
    CsvWriter csv(path, {"service", "price", "a_hat", "psi_hat"});
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.curve.grid.size(); ++i)
            csv.row({cell(row.service.describe()), cell(row.curve.grid[i]), cell(row.curve.a_hat[i]),
                     cell(row.curve.psi_hat[i])});
    csv.close();
    s.files.push_back(path);

    const auto sum_path = dir / "service_study_summary.csv";
    CsvWriter sum(sum_path, {"service", "mean", "variance", "argmax_price", "argmax_value", "refined_price",
                             "refined_value"});
    for (const auto& row : rows)
        sum.row({cell(row.service.describe()), cell(row.service.mean()), cell(row.service.variance()),
                 cell(row.curve.argmax_price), cell(row.curve.argmax_value), cell(row.curve.refined_price),
                 cell(row.curve.refined_value)});
    sum.close();
    s.files.push_back(sum_path);
    for (const auto& f : s.files) write_metadata(f, c, s.results);
    return s;
}

inline RunSummary run_experiment(const ExperimentConfig& c) {
    switch (c.kind) {
        case ExperimentKind::PsiGrid: return psi_grid_experiment(c);
        case ExperimentKind::Sgd: return sgd_experiment(c);
        case ExperimentKind::Coupling: return coupling_experiment(c);
        case ExperimentKind::GradCheck: return grad_check_experiment(c);
        case ExperimentKind::BiasVar: return bias_var_experiment(c);
        case ExperimentKind::Regret: return regret_experiment(c);
        case ExperimentKind::ServiceStudy: return service_study_experiment(c);
    }
    throw std::logic_error("unhandled experiment kind");
}

}  // namespace dynprice
