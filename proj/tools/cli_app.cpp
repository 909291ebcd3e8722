#include "cli_app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "gallager/exponent.hpp"
#include "gallager/finite_n_mc.hpp"
#include "gallager/io.hpp"
#include "gallager/rmt_core.hpp"
#include "gallager/saddlepoint.hpp"

namespace gallager::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw UsageError("not a number: '" + s + "'");
    return v;
}

// Options shared by the channel-level commands.
struct ChannelOpts {
    double beta = 3.0;
    std::optional<double> snr_db;
    std::optional<double> sigma2;
    double alpha = 2.0;
    std::string q = "1";
    std::string mode = "peak-power";
    std::string units = "nats";
    std::string format = "csv";
    std::string output;
    int threads = 1;

    double noise() const {
        if (sigma2) return *sigma2;
        if (snr_db) return sigma2_from_snr_db(*snr_db);
        return 0.05;  // linear SNR 20
    }
    bool q_infinite() const { return q == "inf" || q == "infinity"; }
    int q_blocks() const {
        if (q_infinite()) return 1;
        const double v = parse_double(q);
        if (!(v >= 1.0) || v != std::floor(v)) throw UsageError("--q must be a positive integer or 'inf'");
        return static_cast<int>(v);
    }
    ChannelParams params() const { return {beta, noise(), alpha, q_blocks()}; }
    Mode mode_value() const {
        try {
            return mode_from_string(mode);
        } catch (const InvalidParams& e) {
            throw UsageError(e.what());
        }
    }
    io::Units unit_value() const { return units == "bits" ? io::Units::Bits : io::Units::Nats; }
    double from_units(double v) const { return unit_value() == io::Units::Bits ? v * std::log(2.0) : v; }
};

void add_channel_options(CLI::App* cmd, ChannelOpts& o, bool with_output = true) {
    cmd->add_option("--beta", o.beta, "antenna ratio K/N (>= 1)")->capture_default_str();
    auto* snr = cmd->add_option("--snr-db", o.snr_db, "SNR in dB; sigma2 = 10^(-SNR/10)");
    auto* s2 = cmd->add_option("--sigma2", o.sigma2, "noise power (default 0.05, linear SNR 20)");
    snr->excludes(s2);
    s2->excludes(snr);
    cmd->add_option("--alpha", o.alpha, "blocklength ratio T/N")->capture_default_str();
    cmd->add_option("--q", o.q, "fading blocks per codeword, or 'inf'")->capture_default_str();
    cmd->add_option("--mode", o.mode, "peak-power | average-power | sphere-packing")
        ->check(CLI::IsMember({"peak-power", "average-power", "sphere-packing"}))
        ->capture_default_str();
    cmd->add_option("--units", o.units, "nats | bits (rates and exponents)")
        ->check(CLI::IsMember({"nats", "bits"}))
        ->capture_default_str();
    if (with_output) {
        cmd->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        cmd->add_option("--output", o.output, "output file (default: standard output)");
    }
    cmd->add_option("--threads", o.threads, "worker threads (default: $GALLAGER_THREADS or 1)")
        ->check(CLI::PositiveNumber);
}

void emit(const io::Table& t, const std::string& format, const std::string& path, std::ostream& out) {
    std::ofstream file;
    std::ostream* os = &out;
    if (!path.empty()) {
        file.open(path, std::ios::binary);
        if (!file) throw UsageError("cannot open output file '" + path + "'");
        os = &file;
    }
    if (format == "json")
        io::write_json(*os, t);
    else
        io::write_csv(*os, t);
}

std::vector<double> default_rate_grid(double r_erg, int count = 60) {
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = r_erg * (0.2 + 0.82 * i / (count - 1));
    return g;
}

exponent::CurveTable run_curve(const std::vector<double>& grid, const ChannelParams& p, Mode mode, bool q_inf,
                               int threads) {
    exponent::SweepOptions so;
    so.threads = threads;
    so.q_infinity = q_inf;
    return exponent::sweep(grid, p, mode, so);
}

// ---------------------------------------------------------------------------

int cmd_exponent(const ChannelOpts& o, const std::string& grid_spec, const std::string& list_spec, std::ostream& out,
                 std::ostream& err) {
    const auto p = o.params();
    const Mode mode = o.mode_value();
    std::vector<double> grid;
    if (!grid_spec.empty())
        grid = parse_grid(grid_spec);
    else if (!list_spec.empty())
        grid = parse_list(list_spec);
    else
        grid = default_rate_grid(rmt::ergodic_rate(p));
    for (double& r : grid) r = o.from_units(r);

    auto table = run_curve(grid, p, mode, o.q_infinite(), o.threads);
    emit(io::curve_table(table, o.unit_value()), o.format, o.output, out);
    if (!table.all_ok()) {
        for (const auto& row : table.rows)
            if (!row.ok()) err << "r = " << row.r << ": " << row.status << '\n';
        return kExitPartial;
    }
    return kExitOk;
}

io::Table dispersion_table(double beta, double sigma2, const std::vector<double>& alphas) {
    io::Table t;
    t.columns = {"alpha", "v_inf", "v_alpha", "theta_minus_over_alpha", "theta_plus_over_alpha"};
    for (double a : alphas) {
        const ChannelParams p(beta, sigma2, a, 1);
        const auto th = rmt::theta_bounds(p);
        t.add({io::fmt_num(a), io::fmt_num(rmt::dispersion_vinf(p)), io::fmt_num(rmt::v_alpha(p)),
               io::fmt_num(th.theta_minus_over_alpha(a)), io::fmt_num(th.theta_plus_over_alpha())},
              {true, true, true, true, true});
    }
    return t;
}

int cmd_dispersion(const ChannelOpts& o, const std::string& alpha_grid, std::ostream& out) {
    const auto alphas = parse_grid(alpha_grid);
    for (double a : alphas)
        if (!(a > 0.0)) throw UsageError("--alpha-grid values must be positive");
    emit(dispersion_table(o.beta, o.noise(), alphas), o.format, o.output, out);
    return kExitOk;
}

int cmd_density(const ChannelOpts& o, std::optional<double> rate, std::optional<double> rate_frac,
                std::optional<double> rho_opt, int points, std::ostream& out) {
    if (o.q_infinite()) throw UsageError("density: --q inf has no finite saddle point");
    if (points < 2) throw UsageError("--points must be >= 2");
    const auto p = o.params();
    const Mode mode = o.mode_value();
    const ChannelParams single = p.single_block();
    double rho = 0.0;
    if (rho_opt) {
        rho = *rho_opt;
        if (!(rho >= 0.0)) throw UsageError("--rho must be >= 0");
    } else {
        const double r = rate ? o.from_units(*rate) : rate_frac.value_or(0.8) * rmt::ergodic_rate(p);
        rho = saddle::rho_of_rate(r, single, mode);
    }
    const auto sol = saddle::solve_saddle(rho, single, mode);
    const auto mp = rmt::mp_support(p);
    const double lo = std::min(sol.a, mp.a0), hi = std::max(sol.b, mp.b0);
    std::vector<double> xs;
    for (int i = 0; i < points; ++i) xs.push_back(lo + (hi - lo) * i / (points - 1));
    xs.insert(xs.end(), {sol.a, sol.b, mp.a0, mp.b0});
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    io::Table t;
    t.columns = {"x", "pstar", "mp"};
    for (double x : xs)
        t.add({io::fmt_num(x), io::fmt_num(saddle::pstar_density(x, sol, single)), io::fmt_num(rmt::mp_density(x, p))},
              {true, true, true});
    emit(t, o.format, o.output, out);
    return kExitOk;
}

int cmd_mc(const ChannelOpts& o, int n, long samples, std::uint64_t seed, std::optional<double> rate,
           std::optional<double> rate_frac, std::ostream& out, std::ostream& err) {
    if (o.q_infinite()) throw UsageError("mc: --q inf is not a finite channel");
    const auto p = o.params();
    mc::McConfig cfg;
    cfg.n = n;
    cfg.params = p;
    cfg.r = rate ? o.from_units(*rate) : rate_frac.value_or(0.6) * rmt::ergodic_rate(p);
    cfg.num_samples = samples;
    cfg.seed = seed;
    cfg.threads = o.threads;
    try {
        cfg.validate();
    } catch (const InvalidParams& e) {
        throw UsageError(e.what());
    }
    const auto est = mc::estimate_en(cfg);
    const double asym = exponent::gallager_exponent(cfg.r, p).e;
    if (!est.warning.empty()) err << "warning: " << est.warning << '\n';

    std::ofstream file;
    std::ostream* os = &out;
    if (!o.output.empty()) {
        file.open(o.output, std::ios::binary);
        if (!file) throw UsageError("cannot open output file '" + o.output + "'");
        os = &file;
    }
    *os << io::mc_json(est, cfg, asym).dump(2) << '\n';
    return kExitOk;
}

// Long-format figure tables: one row per (curve, r), plus r1 marker rows.
struct FigureWriter {
    io::Table t;
    bool failed = false;

    FigureWriter() { t.columns = {"curve", "kind", "alpha", "q", "mode", "r", "E", "rho", "regime", "status"}; }

    void curve(const std::string& name, double alpha, const std::string& q, Mode mode,
               const exponent::CurveTable& c) {
        for (const auto& pt : c.rows) {
            failed |= !pt.ok();
            t.add({name, "curve", io::fmt_num(alpha), q, std::string(to_string(mode)), io::fmt_num(pt.r),
                   io::fmt_num(pt.e), io::fmt_num(pt.rho), std::string(exponent::to_string(pt.regime)), pt.status},
                  {false, false, true, false, false, true, true, true, false, false});
        }
    }
    void marker(const std::string& name, double alpha, const std::string& q, Mode mode, double r, double e) {
        t.add({name, "r1", io::fmt_num(alpha), q, std::string(to_string(mode)), io::fmt_num(r), io::fmt_num(e), "1",
               "clamped", "ok"},
              {false, false, true, false, false, true, true, true, false, false});
    }
    void reference(const std::string& name, const std::vector<double>& grid, const ChannelParams& p) {
        for (double r : grid)
            t.add({name, "reference", "inf", "1", "outage", io::fmt_num(r),
                   io::fmt_num(r < rmt::ergodic_rate(p)
                                   ? exponent::quadratic_approx(r, p, exponent::QuadraticRegime::Outage)
                                   : 0.0),
                   "nan", "", "ok"},
                  {false, false, false, false, false, true, true, true, false, false});
    }
};

std::vector<double> figure_grid(double r_erg, int count) {
    auto g = default_rate_grid(r_erg, count);
    g.push_back(r_erg);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

int cmd_figures(const std::string& dir, int points, int threads, std::ostream& err) {
    if (points < 2) throw UsageError("--points must be >= 2");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create directory '" + dir + "': " + ec.message());
    auto save = [&](const io::Table& t, const std::string& name) {
        std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
        if (!f) throw UsageError("cannot write " + name);
        io::write_csv(f, t);
    };
    constexpr double beta = 3.0, sigma2 = 0.05;
    bool failed = false;

    // Exponent vs alpha, plus the ensemble variants at alpha = 2.
    {
        FigureWriter w;
        const ChannelParams base(beta, sigma2, 2.0, 1);
        const auto grid = figure_grid(rmt::ergodic_rate(base), points);
        auto run_one = [&](double alpha, Mode mode) {
            const auto p = base.with_alpha(alpha);
            const std::string name = "alpha=" + io::fmt_num(alpha) + " " + std::string(to_string(mode));
            try {
                w.curve(name, alpha, "1", mode, run_curve(grid, p, mode, false, threads));
                if (mode != Mode::SpherePacking) {
                    const double r1 = exponent::r1(p, mode);
                    w.marker(name, alpha, "1", mode, r1, exponent::gallager_exponent(r1, p, mode).e);
                }
            } catch (const std::exception& e) {
                err << "fig1 " << name << ": " << e.what() << '\n';
                w.failed = true;
            }
        };
        for (double alpha : {2.0, 5.0, 20.0}) run_one(alpha, Mode::PeakPower);
        run_one(2.0, Mode::AveragePower);
        run_one(2.0, Mode::SpherePacking);
        w.reference("outage quadratic", grid, base);
        save(w.t, "fig1.csv");
        failed |= w.failed;
    }

    // Dispersions against alpha.
    {
        std::vector<double> alphas;
        for (int a = 1; a <= 40; ++a) alphas.push_back(a);
        save(dispersion_table(beta, sigma2, alphas), "fig2.csv");
    }

    // Exponent vs number of fading blocks at alpha = 20.
    {
        FigureWriter w;
        const ChannelParams base(beta, sigma2, 20.0, 1);
        const auto grid = figure_grid(rmt::ergodic_rate(base), points);
        for (int q : {1, 2, 4, 8, 0}) {
            const bool inf = q == 0;
            const std::string qs = inf ? "inf" : std::to_string(q);
            const auto p = inf ? base : base.with_q(q);
            const std::string name = "Q=" + qs;
            try {
                w.curve(name, 20.0, qs, Mode::PeakPower, run_curve(grid, p, Mode::PeakPower, inf, threads));
                const double r1 = inf ? exponent::r1_q_infinity(p) : exponent::r1(p);
                const double e1 = inf ? exponent::exponent_q_infinity(r1, p).e : exponent::gallager_exponent(r1, p).e;
                w.marker(name, 20.0, qs, Mode::PeakPower, r1, e1);
            } catch (const std::exception& e) {
                err << "fig3 " << name << ": " << e.what() << '\n';
                w.failed = true;
            }
        }
        save(w.t, "fig3.csv");
        failed |= w.failed;
    }
    return failed ? kExitPartial : kExitOk;
}

}  // namespace

int default_threads() {
    if (const char* env = std::getenv("GALLAGER_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 1024L));
    }
    return 1;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw UsageError("grid must be min:max:count, got '" + text + "'");
    const double lo = parse_double(parts[0]), hi = parse_double(parts[1]), cnt = parse_double(parts[2]);
    if (!(cnt >= 1.0) || cnt != std::floor(cnt)) throw UsageError("grid count must be a positive integer");
    const int count = static_cast<int>(cnt);
    if (count > 1 && !(lo < hi)) throw UsageError("grid needs min < max when count > 1");
    if (count == 1) return {lo};
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
    g.back() = hi;
    return g;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(parse_double(item));
    if (v.empty()) throw UsageError("empty rate list");
    return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Large-system Gallager exponent for MIMO Rayleigh block fading", "gallager"};
    app.require_subcommand(1);

    const int threads = default_threads();
    ChannelOpts exp_o, disp_o, dens_o, mc_o;
    exp_o.threads = disp_o.threads = dens_o.threads = mc_o.threads = threads;

    auto* exp = app.add_subcommand("exponent", "E(r) on a rate grid");
    add_channel_options(exp, exp_o);
    std::string grid_spec, list_spec;
    auto* g = exp->add_option("--r-grid", grid_spec, "min:max:count (default 60 points over [0.2, 1.02] r_erg)");
    auto* l = exp->add_option("--r-list", list_spec, "comma separated rates");
    g->excludes(l);
    l->excludes(g);

    auto* disp = app.add_subcommand("dispersion", "v_inf, v_alpha and theta bounds over an alpha grid");
    add_channel_options(disp, disp_o);
    std::string alpha_grid = "1:40:40";
    disp->add_option("--alpha-grid", alpha_grid, "min:max:count")->capture_default_str();

    auto* dens = app.add_subcommand("density", "saddle-point density p* next to the MP law");
    add_channel_options(dens, dens_o);
    std::optional<double> d_rate, d_frac, d_rho;
    int d_points = 2001;
    auto* dr = dens->add_option("--rate", d_rate, "rate (in --units)");
    auto* df = dens->add_option("--rate-frac", d_frac, "rate as a fraction of r_erg (default 0.8)");
    auto* dh = dens->add_option("--rho", d_rho, "Gallager parameter directly");
    dr->excludes(df, dh);
    df->excludes(dr, dh);
    dh->excludes(dr, df);
    dens->add_option("--points", d_points, "grid points")->capture_default_str();

    auto* mcc = app.add_subcommand("mc", "finite-N Monte Carlo estimate of E_N(r) (JSON)");
    add_channel_options(mcc, mc_o, false);
    mcc->add_option("--output", mc_o.output, "output file (default: standard output)");
    int mc_n = 4;
    long mc_samples = 10000;
    std::uint64_t mc_seed = 1;
    std::optional<double> m_rate, m_frac;
    mcc->add_option("--n", mc_n, "transmit antennas N")->capture_default_str();
    mcc->add_option("--samples", mc_samples, "channel draws M")->capture_default_str();
    mcc->add_option("--seed", mc_seed, "random seed")->capture_default_str();
    auto* mr = mcc->add_option("--rate", m_rate, "rate (in --units)");
    auto* mf = mcc->add_option("--rate-frac", m_frac, "rate as a fraction of r_erg (default 0.6)");
    mr->excludes(mf);
    mf->excludes(mr);

    auto* fig = app.add_subcommand("figures", "write fig1.csv, fig2.csv, fig3.csv (beta 3, sigma2 0.05)");
    std::string out_dir;
    int fig_points = 60, fig_threads = threads;
    fig->add_option("--out-dir", out_dir, "output directory")->required();
    fig->add_option("--points", fig_points, "rate grid points per curve")->capture_default_str();
    fig->add_option("--threads", fig_threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*exp) return cmd_exponent(exp_o, grid_spec, list_spec, out, err);
        if (*disp) return cmd_dispersion(disp_o, alpha_grid, out);
        if (*dens) return cmd_density(dens_o, d_rate, d_frac, d_rho, d_points, out);
        if (*mcc) return cmd_mc(mc_o, mc_n, mc_samples, mc_seed, m_rate, m_frac, out, err);
        if (*fig) return cmd_figures(out_dir, fig_points, fig_threads, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const InvalidParams& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitUsage;
}

}  // namespace gallager::cli
