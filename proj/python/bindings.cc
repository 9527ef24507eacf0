#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qsut/baselines.h"
#include "qsut/engine.h"
#include "qsut/error.h"
#include "qsut/harness.h"
#include "qsut/measurements.h"
#include "qsut/oracle.h"

namespace py = pybind11;

namespace {

using namespace qsut;

DensityMatrix as_density(const Matrix &m) {
    return DensityMatrix::validate(m);
}

py::dict row_to_dict(const ResultRow &r) {
    py::dict d;
    d["method"] = r.method;
    d["budget"] = r.budget;
    d["power"] = r.power;
    d["avg_copies"] = r.avg_copies;
    d["std_copies"] = r.std_copies;
    d["avg_rounds"] = r.avg_rounds;
    d["runs"] = r.runs;
    d["master_seed"] = r.master_seed;
    return d;
}

}  // namespace

PYBIND11_MODULE(_qsut, m) {
    m.doc() = "Adaptive sequential tests for quantum state hypotheses";

    static py::exception<Error> error(m, "QsutError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error &e) {
            py::set_error(error, (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::class_<FamilyConfig>(m, "FamilyConfig")
        .def(py::init([](double r_z, double r_x) { return FamilyConfig{r_z, r_x}; }), py::arg("r_z") = 1.0,
             py::arg("r_x") = 1.0)
        .def_readwrite("r_z", &FamilyConfig::r_z)
        .def_readwrite("r_x", &FamilyConfig::r_x)
        .def("validate", &FamilyConfig::validate);

    m.def(
        "state_from_angle", [](const FamilyConfig &f, double omega) { return state_from_angle(f, omega).matrix(); },
        py::arg("family"), py::arg("omega_deg"), "Density matrix of the family member at omega (degrees).");

    py::class_<HypothesisSet>(m, "HypothesisSet")
        .def_static("parse", &HypothesisSet::parse, py::arg("text"))
        .def("contains", &HypothesisSet::contains, py::arg("omega_deg"))
        .def("disjoint_from", &HypothesisSet::disjoint_from)
        .def("default_angle", &HypothesisSet::default_angle)
        .def("__str__", &HypothesisSet::to_string)
        .def("__repr__", [](const HypothesisSet &s) { return "HypothesisSet(" + s.to_string() + ")"; });

    m.def(
        "grid_angles",
        [](const HypothesisSet &s, double resolution) { return build_grid(s, resolution).angles; },
        py::arg("set"), py::arg("resolution_deg") = kDefaultResolutionDeg);

    m.def(
        "tensor_power", [](const Matrix &rho, int n) { return tensor_power(as_density(rho), n).matrix(); },
        py::arg("rho"), py::arg("n"));
    m.def(
        "born_probabilities", [](const Matrix &rho, const std::vector<Matrix> &elements) {
            std::vector<std::string> labels;
            for (std::size_t i = 0; i < elements.size(); ++i) {
                labels.push_back(std::to_string(i));
            }
            return born_probabilities(as_density(rho).matrix(), Povm::validate(labels, elements));
        },
        py::arg("rho"), py::arg("elements"));
    m.def(
        "helstrom_povm",
        [](const Matrix &rho0, const Matrix &rho1, int n, double lambda) {
            return helstrom_povm(HelstromSpec{as_density(rho0), as_density(rho1), n, lambda}).elements();
        },
        py::arg("rho0"), py::arg("rho1"), py::arg("n_joint") = 1, py::arg("lam") = 0.5,
        "Elements [M0, M1] of the Helstrom measurement; outcome 1 rejects the null.");
    m.def(
        "helstrom_bound",
        [](const Matrix &rho0, const Matrix &rho1, double lambda, int n) {
            return helstrom_bound(as_density(rho0), as_density(rho1), lambda, n);
        },
        py::arg("rho0"), py::arg("rho1"), py::arg("lam") = 0.5, py::arg("n") = 1);
    m.def(
        "variational_distribution", [](double theta, int n, const Matrix &rho) {
            return variational_distribution(theta, n, as_density(rho).matrix());
        },
        py::arg("theta"), py::arg("n_joint"), py::arg("rho"));
    m.def(
        "optimize_lambda",
        [](const Matrix &rho0, const Matrix &rho1, int n, int grid) {
            return optimize_lambda(as_density(rho0), as_density(rho1), n, grid);
        },
        py::arg("rho0"), py::arg("rho1"), py::arg("n_joint"), py::arg("grid_size") = kDefaultLambdaGrid);
    m.def(
        "optimize_theta",
        [](const Matrix &rho0, const Matrix &rho1, int n, int grid) {
            return optimize_theta(as_density(rho0), as_density(rho1), n, grid);
        },
        py::arg("rho0"), py::arg("rho1"), py::arg("n_joint"), py::arg("grid_size") = kDefaultThetaGrid);

    m.def(
        "calibrate_lht_lambda",
        [](const Matrix &rho0, const Matrix &rho1, int n, double eps0) {
            const LambdaCalibration c = calibrate_lht_lambda(as_density(rho0), as_density(rho1), n, eps0);
            return py::make_tuple(c.lambda, c.size, c.power);
        },
        py::arg("rho0"), py::arg("rho1"), py::arg("n_joint"), py::arg("eps0"),
        "Returns (lambda, size, power).");
    m.def("block_level", &block_level, py::arg("blocks"), py::arg("eps0"));

    m.def(
        "eprocess_expectation",
        [](const std::string &policy, const FamilyConfig &family, const std::string &null_set,
           const std::string &alt_set, double truth, int n_ic, int n_joint, int horizon) {
            PolicyConfig p;
            const Method method = parse_method(policy);
            if (!is_sequential(method)) {
                throw Error(ErrorCode::InvalidArgument, "eprocess_expectation needs a sequential policy");
            }
            p.kind = method == Method::ALHT ? PolicyKind::ALHT
                     : method == Method::ALVT ? PolicyKind::ALVT
                                              : PolicyKind::ALHTPlus;
            p.n_ic = n_ic;
            p.n_joint = n_joint;
            const TestSetup setup{family, HypothesisSet::parse(null_set), HypothesisSet::parse(alt_set)};
            const EprocessExpectation e = eprocess_expectation(p, setup, truth, horizon);
            return py::make_tuple(e.true_denominator, e.mle_denominator);
        },
        py::arg("policy"), py::arg("family"), py::arg("null_set"), py::arg("alt_set"), py::arg("truth_omega"),
        py::arg("n_ic") = 1, py::arg("n_joint") = 2, py::arg("horizon") = 3,
        "Exact (E[bar Lambda^t], E[Lambda^t]) for t = 1..horizon by enumeration.");

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_static("from_text", &parse_config_text, py::arg("text"))
        .def_static("from_file", [](const std::string &path) { return parse_config(path); }, py::arg("path"))
        .def_readwrite("runs", &ExperimentConfig::runs)
        .def_readwrite("master_seed", &ExperimentConfig::master_seed)
        .def_readwrite("budgets", &ExperimentConfig::budgets)
        .def_readwrite("eps0", &ExperimentConfig::eps0)
        .def_readwrite("truth_omega", &ExperimentConfig::truth_omega)
        .def_property_readonly("methods",
                               [](const ExperimentConfig &c) {
                                   std::vector<std::string> names;
                                   for (Method x : c.methods) {
                                       names.push_back(method_name(x));
                                   }
                                   return names;
                               })
        .def("validate", &ExperimentConfig::validate);

    m.def(
        "run_sweep",
        [](const ExperimentConfig &c, unsigned threads) {
            std::vector<ResultRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_sweep(c, threads);
            }
            py::list out;
            for (const ResultRow &r : rows) {
                out.append(row_to_dict(r));
            }
            return out;
        },
        py::arg("config"), py::arg("threads") = 0, "One dict per (method, budget) cell.");
    m.def(
        "sweep_csv",
        [](const ExperimentConfig &c, unsigned threads) {
            py::gil_scoped_release release;
            return format_results(run_sweep(c, threads));
        },
        py::arg("config"), py::arg("threads") = 0);
    m.def(
        "run_single",
        [](const ExperimentConfig &c, const std::string &method, int budget, std::uint64_t seed) {
            RandomStream rng(seed);
            const SingleRun run = run_single(c, parse_method(method), budget, rng);
            py::dict d;
            d["rejected"] = run.result.rejected;
            d["copies_used"] = run.result.copies_used;
            d["rounds_used"] = run.result.rounds_used;
            d["trace"] = format_trace(run);
            return d;
        },
        py::arg("config"), py::arg("method"), py::arg("budget"), py::arg("seed"));
    m.def("verify", [](std::uint64_t seed) {
        py::list out;
        for (const CheckResult &c : run_verification_suite(seed)) {
            out.append(py::make_tuple(c.name, c.passed, c.detail));
        }
        return out;
    }, py::arg("seed") = 20240601);
    m.attr("RESULT_HEADER") = std::string(kResultHeader);
}
