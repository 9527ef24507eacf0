#include "qsut/harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "qsut/error.h"

namespace qsut {

namespace {

constexpr Method kAllMethods[] = {Method::ALHT, Method::ALHTPlus, Method::ALVT, Method::LHT,
                                  Method::BLHT, Method::LVT,      Method::BLVT};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            return parts;
        }
        start = pos + 1;
    }
}

[[noreturn]] void parse_fail(int line, const std::string &what) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double parse_real(std::string_view text, int line, std::string_view key) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        parse_fail(line, std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

template <typename Int>
Int parse_integer(std::string_view text, int line, std::string_view key) {
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        parse_fail(line, std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

[[noreturn]] void config_fail(const std::string &field, const std::string &what) {
    throw Error(ErrorCode::ConfigError, field + ": " + what);
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::ALHT: return "aLHT";
        case Method::ALHTPlus: return "aLHT+";
        case Method::ALVT: return "aLVT";
        case Method::LHT: return "LHT";
        case Method::BLHT: return "bLHT";
        case Method::LVT: return "LVT";
        case Method::BLVT: return "bLVT";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    for (Method m : kAllMethods) {
        if (method_name(m) == text) {
            return m;
        }
    }
    throw Error(ErrorCode::ParseError,
                "unknown method '" + std::string(text) + "' (expected aLHT, aLHT+, aLVT, LHT, bLHT, LVT or bLVT)");
}

bool is_sequential(Method m) {
    return m == Method::ALHT || m == Method::ALHTPlus || m == Method::ALVT;
}

int minimum_budget(Method m, int block_copies, int joint_copies) {
    switch (m) {
        case Method::LHT:
        case Method::LVT: return joint_copies;
        case Method::BLHT:
        case Method::BLVT: return block_copies;
        default: return 1;
    }
}

void ExperimentConfig::validate() const {
    try {
        family.validate();
    } catch (const Error &e) {
        config_fail("r_z/r_x", e.what());
    }
    if (null_set.empty()) {
        config_fail("null_set", "missing or empty");
    }
    if (alt_set.empty()) {
        config_fail("alt_set", "missing or empty");
    }
    if (!null_set.disjoint_from(alt_set)) {
        config_fail("null_set", null_set.to_string() + " overlaps alt_set " + alt_set.to_string());
    }
    if (!(omega_resolution > 0.0)) {
        config_fail("omega_resolution", "must be positive");
    }
    try {
        build_grid(null_set, omega_resolution);
        build_grid(alt_set, omega_resolution);
        state_from_angle(family, truth_omega);
    } catch (const Error &e) {
        config_fail("null_set/alt_set/truth_omega", e.what());
    }
    if (methods.empty()) {
        config_fail("methods", "at least one method is required");
    }
    if (budgets.empty()) {
        config_fail("budgets", "at least one budget is required");
    }
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (budgets[i] < 1) {
            config_fail("budgets", "budgets must be positive");
        }
        if (i > 0 && budgets[i] <= budgets[i - 1]) {
            config_fail("budgets", "budgets must be strictly ascending");
        }
    }
    if (runs < 1) {
        config_fail("runs", "must be at least 1");
    }
    if (!(eps0 > 0.0 && eps0 < 1.0)) {
        config_fail("eps0", "must lie in (0, 1)");
    }
    if (eps1 && !(*eps1 > 0.0 && *eps1 < 1.0)) {
        config_fail("eps1", "must lie in (0, 1)");
    }
    if (!(numerator_prior >= 0.0)) {
        config_fail("numerator_prior", "must be nonnegative");
    }
    if (lambda_grid < 2) {
        config_fail("lambda_grid", "needs at least two points");
    }
    if (theta_grid < 2) {
        config_fail("theta_grid", "needs at least two points");
    }
    if (n_ic < 0) {
        config_fail("n_ic", "must be nonnegative");
    }
    if (n_joint < 1 || n_joint > 12) {
        config_fail("n_joint", "must lie in [1, 12]");
    }
    if (block_copies < n_joint) {
        config_fail("block_copies", "must be at least n_joint");
    }
    for (Method m : methods) {
        if ((m == Method::LHT || m == Method::BLHT) && !null_set.is_single_point()) {
            config_fail("methods", method_name(m) + " needs a single-point null_set");
        }
        const int need = minimum_budget(m, block_copies, n_joint);
        if (budgets.front() < need) {
            config_fail("budgets", method_name(m) + " needs budgets of at least " + std::to_string(need));
        }
    }
    std::set<Method> seen(methods.begin(), methods.end());
    if (seen.size() != methods.size()) {
        config_fail("methods", "duplicate method");
    }
}

ExperimentConfig parse_config_text(std::string_view text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    bool have_null = false;
    bool have_alt = false;
    bool have_truth = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            parse_fail(line_no, "expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) {
            parse_fail(line_no, "missing key");
        }
        if (value.empty()) {
            parse_fail(line_no, key + ": missing value");
        }
        if (!seen.insert(key).second) {
            parse_fail(line_no, "duplicate key '" + key + "'");
        }
        try {
            if (key == "r_z") {
                cfg.family.r_z = parse_real(value, line_no, key);
            } else if (key == "r_x") {
                cfg.family.r_x = parse_real(value, line_no, key);
            } else if (key == "null_set") {
                cfg.null_set = HypothesisSet::parse(value);
                have_null = true;
            } else if (key == "alt_set") {
                cfg.alt_set = HypothesisSet::parse(value);
                have_alt = true;
            } else if (key == "truth_omega") {
                cfg.truth_omega = parse_real(value, line_no, key);
                have_truth = true;
            } else if (key == "methods") {
                for (std::string_view part : split(value, ',')) {
                    cfg.methods.push_back(parse_method(part));
                }
            } else if (key == "budgets") {
                for (std::string_view part : split(value, ',')) {
                    cfg.budgets.push_back(parse_integer<int>(part, line_no, key));
                }
            } else if (key == "runs") {
                cfg.runs = parse_integer<int>(value, line_no, key);
            } else if (key == "eps0") {
                cfg.eps0 = parse_real(value, line_no, key);
            } else if (key == "eps1") {
                cfg.eps1 = parse_real(value, line_no, key);
            } else if (key == "master_seed") {
                cfg.master_seed = parse_integer<std::uint64_t>(value, line_no, key);
            } else if (key == "omega_resolution") {
                cfg.omega_resolution = parse_real(value, line_no, key);
            } else if (key == "lambda_grid") {
                cfg.lambda_grid = parse_integer<int>(value, line_no, key);
            } else if (key == "theta_grid") {
                cfg.theta_grid = parse_integer<int>(value, line_no, key);
            } else if (key == "n_ic") {
                cfg.n_ic = parse_integer<int>(value, line_no, key);
            } else if (key == "n_joint") {
                cfg.n_joint = parse_integer<int>(value, line_no, key);
            } else if (key == "block_copies") {
                cfg.block_copies = parse_integer<int>(value, line_no, key);
            } else if (key == "numerator_prior") {
                cfg.numerator_prior = parse_real(value, line_no, key);
            } else if (key == "estimation_povm") {
                if (value == "computational") {
                    cfg.estimation_povm = EstimationPovm::Computational;
                } else if (value == "sic") {
                    cfg.estimation_povm = EstimationPovm::Sic;
                } else {
                    parse_fail(line_no, "estimation_povm: expected 'computational' or 'sic'");
                }
            } else {
                parse_fail(line_no, "unknown key '" + key + "'");
            }
        } catch (const Error &e) {
            if (e.code() == ErrorCode::ParseError && std::string_view(e.what()).find("line ") != std::string_view::npos) {
                throw;
            }
            parse_fail(line_no, key + ": " + e.what());
        }
    }
    if (!have_null) {
        config_fail("null_set", "required key missing");
    }
    if (!have_alt) {
        config_fail("alt_set", "required key missing");
    }
    if (!have_truth) {
        config_fail("truth_omega", "required key missing");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open config '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

SequentialTestConfig sequential_config(const ExperimentConfig &config, Method method) {
    SequentialTestConfig s;
    s.setup = TestSetup{config.family, config.null_set, config.alt_set, config.omega_resolution,
                        config.numerator_prior, config.estimation_povm};
    switch (method) {
        case Method::ALHT: s.policy.kind = PolicyKind::ALHT; break;
        case Method::ALHTPlus: s.policy.kind = PolicyKind::ALHTPlus; break;
        case Method::ALVT: s.policy.kind = PolicyKind::ALVT; break;
        default: throw Error(ErrorCode::InvalidArgument, method_name(method) + " is not a sequential method");
    }
    s.policy.n_ic = config.n_ic;
    s.policy.n_joint = config.n_joint;
    s.policy.estimation_povm = config.estimation_povm;
    s.policy.lambda_grid = config.lambda_grid;
    s.policy.theta_grid = config.theta_grid;
    s.eps0 = config.eps0;
    s.eps1 = config.eps1;
    return s;
}

SingleRun run_single(const ExperimentConfig &config, Method method, int budget, RandomStream &rng) {
    SingleRun run;
    run.method = method;
    run.budget = budget;
    run.two_sided = config.eps1.has_value() && is_sequential(method);
    const DensityMatrix truth = state_from_angle(config.family, config.truth_omega);
    if (is_sequential(method)) {
        TestOutcome out = run_sequential_test(sequential_config(config, method), truth, budget, rng);
        run.result = TrialResult{out.decision == Decision::Reject, out.copies_used, out.rounds_used};
        run.sequential = std::move(out);
        return run;
    }
    const ParamGrid alt_grid = build_grid(config.alt_set, config.omega_resolution);
    const bool blocked = method == Method::BLHT || method == Method::BLVT;
    const FixedTestConfig fixed = blocked ? multi_block_config(budget, config.block_copies, config.n_joint, config.eps0)
                                          : single_block_config(budget, config.n_joint, config.eps0);
    FixedRunResult out;
    if (method == Method::LHT || method == Method::BLHT) {
        if (!config.null_set.is_single_point()) {
            throw Error(ErrorCode::ConfigError, method_name(method) + " needs a single-point null_set");
        }
        out = run_blht(fixed, truth, config.family, config.null_set.points().front(), alt_grid, rng,
                       config.lambda_grid);
    } else {
        const ParamGrid null_grid = build_grid(config.null_set, config.omega_resolution);
        out = run_blvt(fixed, truth, config.family, null_grid.angles, alt_grid, rng, config.theta_grid);
    }
    run.result = TrialResult{out.decision == 1, out.copies_used, out.rounds_used};
    run.fixed = std::move(out);
    return run;
}

std::uint64_t trial_seed(std::uint64_t master_seed, Method method, int budget, int run) {
    return derive_seed(master_seed, {static_cast<std::uint64_t>(method), static_cast<std::uint64_t>(budget),
                                     static_cast<std::uint64_t>(run)});
}

ResultRow summarize(Method method, int budget, std::uint64_t master_seed, const std::vector<TrialResult> &trials) {
    ResultRow row;
    row.method = method_name(method);
    row.budget = budget;
    row.runs = static_cast<int>(trials.size());
    row.master_seed = master_seed;
    if (trials.empty()) {
        return row;
    }
    const double n = static_cast<double>(trials.size());
    double rejects = 0.0;
    double copies = 0.0;
    double rounds = 0.0;
    for (const TrialResult &t : trials) {
        rejects += t.rejected ? 1.0 : 0.0;
        copies += t.copies_used;
        rounds += t.rounds_used;
    }
    row.power = rejects / n;
    row.avg_copies = copies / n;
    row.avg_rounds = rounds / n;
    double ss = 0.0;
    for (const TrialResult &t : trials) {
        const double d = t.copies_used - row.avg_copies;
        ss += d * d;
    }
    row.std_copies = std::sqrt(ss / n);
    return row;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig &config, unsigned threads) {
    config.validate();
    struct Cell {
        Method method;
        int budget;
    };
    std::vector<Cell> cells;
    for (Method m : config.methods) {
        for (int b : config.budgets) {
            cells.push_back(Cell{m, b});
        }
    }
    const std::size_t per_cell = static_cast<std::size_t>(config.runs);
    const std::size_t total = cells.size() * per_cell;
    std::vector<TrialResult> results(total);

    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(total, 1)));
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr failure;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) {
                return;
            }
            const Cell &cell = cells[i / per_cell];
            const int run = static_cast<int>(i % per_cell);
            try {
                RandomStream rng(trial_seed(config.master_seed, cell.method, cell.budget, run));
                results[i] = run_single(config, cell.method, cell.budget, rng).result;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(total);
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<ResultRow> rows;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::vector<TrialResult> slice(results.begin() + static_cast<std::ptrdiff_t>(c * per_cell),
                                             results.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_cell));
        rows.push_back(summarize(cells[c].method, cells[c].budget, config.master_seed, slice));
    }
    return rows;
}

std::string format_results(const std::vector<ResultRow> &rows) {
    std::string out(kResultHeader);
    out += '\n';
    for (const ResultRow &r : rows) {
        out += r.method + ',' + std::to_string(r.budget) + ',' + format_real(r.power) + ',' + format_real(r.avg_copies) +
               ',' + format_real(r.std_copies) + ',' + format_real(r.avg_rounds) + ',' + std::to_string(r.runs) + ',' +
               std::to_string(r.master_seed) + '\n';
    }
    return out;
}

void emit_results(const std::vector<ResultRow> &rows, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    }
    const std::string text = format_results(rows);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) {
        throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
    }
}

std::vector<ResultRow> parse_results(std::string_view text) {
    std::vector<ResultRow> rows;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const std::string_view line =
            trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kResultHeader) {
                parse_fail(line_no, "unexpected header");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 8) {
            parse_fail(line_no, "expected 8 fields");
        }
        ResultRow r;
        r.method = std::string(f[0]);
        r.budget = parse_integer<int>(f[1], line_no, "budget");
        r.power = parse_real(f[2], line_no, "power");
        r.avg_copies = parse_real(f[3], line_no, "avg_copies");
        r.std_copies = parse_real(f[4], line_no, "std_copies");
        r.avg_rounds = parse_real(f[5], line_no, "avg_rounds");
        r.runs = parse_integer<int>(f[6], line_no, "runs");
        r.master_seed = parse_integer<std::uint64_t>(f[7], line_no, "master_seed");
        rows.push_back(std::move(r));
    }
    if (line_no == 0) {
        throw Error(ErrorCode::ParseError, "missing header");
    }
    return rows;
}

std::vector<CalibrationRow> calibration_table(const ExperimentConfig &config) {
    config.validate();
    std::vector<CalibrationRow> rows;
    const ParamGrid alt_grid = build_grid(config.alt_set, config.omega_resolution);
    const double alt = alt_grid.angles[alt_grid.nearest(config.truth_omega)];
    const ParamGrid null_grid = build_grid(config.null_set, config.omega_resolution);
    for (Method m : config.methods) {
        if (is_sequential(m)) {
            continue;
        }
        const bool blocked = m == Method::BLHT || m == Method::BLVT;
        for (int budget : config.budgets) {
            const FixedTestConfig fixed = blocked
                                              ? multi_block_config(budget, config.block_copies, config.n_joint, config.eps0)
                                              : single_block_config(budget, config.n_joint, config.eps0);
            CalibrationRow row;
            row.method = method_name(m);
            row.budget = budget;
            row.estimation_copies = fixed.estimation_copies;
            row.blocks = fixed.blocks;
            row.block_eps = block_level(fixed.blocks, fixed.eps0);
            try {
                if (m == Method::LHT || m == Method::BLHT) {
                    const LambdaCalibration c = calibrate_lht_lambda(
                        state_from_angle(config.family, config.null_set.points().front()),
                        state_from_angle(config.family, alt), config.n_joint, row.block_eps, config.lambda_grid);
                    row.parameter = c.lambda;
                    row.size = c.size;
                    row.power = c.power;
                } else {
                    const LvtDesign d = design_lvt(config.family, null_grid.angles, alt, config.n_joint, row.block_eps,
                                                   config.theta_grid);
                    row.parameter = d.theta * 180.0 / std::numbers::pi;
                    row.threshold = d.threshold;
                    row.size = d.size;
                    row.power = d.power;
                }
                row.feasible = true;
            } catch (const Error &e) {
                if (e.code() != ErrorCode::InfeasibleCalibration) {
                    throw;
                }
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::string format_calibration(const std::vector<CalibrationRow> &rows) {
    std::string out = "method,budget,estimation_copies,blocks,block_eps,feasible,parameter,threshold,size,power\n";
    for (const CalibrationRow &r : rows) {
        out += r.method + ',' + std::to_string(r.budget) + ',' + std::to_string(r.estimation_copies) + ',' +
               std::to_string(r.blocks) + ',' + format_real(r.block_eps) + ',' + (r.feasible ? "1" : "0") + ',' +
               format_real(r.parameter) + ',' + format_real(r.threshold) + ',' + format_real(r.size) + ',' +
               format_real(r.power) + '\n';
    }
    return out;
}

std::string format_trace(const SingleRun &run) {
    std::ostringstream out;
    out << "# method=" << method_name(run.method) << " budget=" << run.budget << " seed=" << run.seed << '\n';
    if (run.sequential) {
        const TestOutcome &o = *run.sequential;
        const bool two_sided = run.two_sided;
        out << "round,copies,povm,outcome,log_numerator_term,log_slr" << (two_sided ? ",log_reverse_slr" : "") << '\n';
        for (std::size_t t = 0; t < o.transcript.size(); ++t) {
            const RoundRecord &r = o.transcript[t];
            out << t + 1 << ',' << r.copies << ',' << '"' << r.povm.to_string() << '"' << ',' << r.label << ','
                << format_real(r.log_numerator_term) << ',' << format_real(r.log_slr);
            if (two_sided) {
                out << ',' << format_real(r.log_reverse_slr);
            }
            out << '\n';
        }
        out << "# decision=" << decision_name(o.decision) << " copies=" << o.copies_used << " rounds=" << o.rounds_used
            << " log_slr=" << format_real(o.final_log_slr) << '\n';
    } else if (run.fixed) {
        const FixedRunResult &f = *run.fixed;
        out << "# alt_estimate=" << format_real(f.alt_estimate) << " calibrated=" << (f.calibrated ? 1 : 0)
            << " parameter=" << format_real(f.parameter) << " block_eps=" << format_real(f.block_eps) << '\n';
        out << "block,vote\n";
        for (std::size_t i = 0; i < f.votes.size(); ++i) {
            out << i + 1 << ',' << f.votes[i] << '\n';
        }
        out << "# decision=" << (f.decision == 1 ? "reject" : "accept") << " copies=" << f.copies_used
            << " rounds=" << f.rounds_used << '\n';
    }
    return out.str();
}

}  // namespace qsut
