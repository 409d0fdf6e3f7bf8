#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rhlearn/experiment.hpp"
#include "rhlearn/selftest.hpp"

#include <filesystem>
#include <sstream>

namespace py = pybind11;
using namespace rhlearn;

namespace {

// Trajectory log as a dense array with the CSV column layout.
Eigen::MatrixXd log_to_matrix(const TrajectoryLog& log) {
  if (log.records.empty()) return Eigen::MatrixXd(0, 0);
  const auto p = log.records.front().y.size();
  const auto q = log.records.front().v.size();
  Eigen::MatrixXd out(static_cast<long>(log.records.size()), 1 + p + q + 6);
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const StepRecord& r = log.records[i];
    long col = 0;
    out(i, col++) = r.k;
    for (long j = 0; j < p; ++j) out(i, col++) = r.y(j);
    for (long j = 0; j < q; ++j) out(i, col++) = r.v(j);
    out(i, col++) = r.eps;
    out(i, col++) = r.gamma_over_eps;
    out(i, col++) = r.v1_value;
    out(i, col++) = r.est_residual;
    out(i, col++) = r.lambda_used;
    out(i, col++) = r.controllable ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_rhlearn, m) {
  m.doc() = "Receding-horizon learning: proximity-based signal-model estimation "
            "with a model-independent receding-horizon controller.";

  py::register_exception<DimensionMismatch>(m, "DimensionMismatch");
  py::register_exception<InfeasibleConstraints>(m, "InfeasibleConstraints");
  py::register_exception<IndefiniteReducedHessian>(m, "IndefiniteReducedHessian");
  py::register_exception<NumericalFailure>(m, "NumericalFailure");
  py::register_exception<HorizonExceeded>(m, "HorizonExceeded");
  py::register_exception<TerminalInfeasible>(m, "TerminalInfeasible");
  py::register_exception<RestorationFailed>(m, "RestorationFailed");
  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<ValidationError>(m, "ValidationError");

  // qp kernels
  m.def(
      "solve_eq_qp",
      [](const Matrix& H, const Vector& f, const Matrix& Aeq, const Vector& beq) {
        const EqQpSolution sol = solve_eq_qp({H, f, Aeq, beq});
        return py::make_tuple(sol.w, sol.value, sol.multipliers);
      },
      py::arg("H"), py::arg("f"), py::arg("Aeq") = Matrix(0, 0), py::arg("beq") = Vector(0),
      "Minimize 0.5 w'Hw + f'w subject to Aeq w = beq; returns (w, value, multipliers).");
  m.def("min_norm_least_squares", &min_norm_least_squares, py::arg("M"), py::arg("b"));
  m.def("numerical_rank", &numerical_rank, py::arg("M"), py::arg("tol") = kDefaultRankTol);

  // signal model
  py::class_<SignalModel>(m, "SignalModel")
      .def(py::init<Matrix, Matrix>(), py::arg("A"), py::arg("B"))
      .def_readwrite("A", &SignalModel::A)
      .def_readwrite("B", &SignalModel::B)
      .def("__repr__", [](const SignalModel& s) {
        std::ostringstream out;
        out << "SignalModel(state_dim=" << s.state_dim() << ", input_dim=" << s.input_dim()
            << ")";
        return out.str();
      });
  m.def("theta_to_model", &theta_to_model, py::arg("theta"), py::arg("state_dim"),
        py::arg("input_dim"));
  m.def("model_to_theta", &model_to_theta, py::arg("model"));
  m.def("canonical_theta", &canonical_theta, py::arg("state_dim"), py::arg("input_dim"),
        py::arg("scale") = 1.0);
  m.def("controllability_matrix", &controllability_matrix, py::arg("model"));
  m.def("is_controllable", &is_controllable, py::arg("model"), py::arg("tol") = kDefaultRankTol);
  m.def("blend", &blend, py::arg("a"), py::arg("b"), py::arg("lam"));
  m.def(
      "restore_controllability",
      [](const Theta& cand, const Theta& prev, int n, int q, double lambda_max, double tol) {
        const RestorationResult res = restore_controllability(cand, prev, n, q, lambda_max, tol);
        return py::make_tuple(res.theta, res.lambda_used);
      },
      py::arg("candidate"), py::arg("previous"), py::arg("state_dim"), py::arg("input_dim"),
      py::arg("lambda_max"), py::arg("tol") = kDefaultRankTol);

  py::class_<PredictorMaps>(m, "PredictorMaps")
      .def_property_readonly("horizon", &PredictorMaps::horizon)
      .def("state_matrix", [](const PredictorMaps& maps, int i) { return maps.A_pow.at(i); },
           py::arg("i"))
      .def("input_matrix", [](const PredictorMaps& maps, int i) { return maps.B_pow.at(i); },
           py::arg("i"))
      .def("predict", &predict, py::arg("x0"), py::arg("inputs"), py::arg("steps"));
  m.def("build_predictor_maps", &build_predictor_maps, py::arg("model"), py::arg("horizon"));

  // estimator
  py::class_<EstimatorDiagnostics>(m, "EstimatorDiagnostics")
      .def_readonly("residual", &EstimatorDiagnostics::residual)
      .def_readonly("candidate_residual", &EstimatorDiagnostics::candidate_residual)
      .def_readonly("lambda_used", &EstimatorDiagnostics::lambda_used)
      .def_readonly("controllable", &EstimatorDiagnostics::controllable);
  py::class_<Estimator>(m, "Estimator")
      .def(py::init([](int state_dim, int input_dim, int window, double lambda_max,
                       const Theta& theta0, bool frozen) {
             EstimatorConfig cfg;
             cfg.state_dim = state_dim;
             cfg.input_dim = input_dim;
             cfg.window = window;
             cfg.lambda_max = lambda_max;
             cfg.theta0 = theta0;
             cfg.frozen = frozen;
             return Estimator(cfg);
           }),
           py::arg("state_dim"), py::arg("input_dim"), py::arg("window"),
           py::arg("lambda_max") = 0.5, py::arg("theta0") = Theta(), py::arg("frozen") = false)
      .def("update", &Estimator::update, py::arg("x"), py::arg("u_prev"))
      .def_property_readonly("theta", [](const Estimator& est) { return est.theta(); })
      .def("model", &Estimator::model);

  // receding-horizon problems
  py::class_<RhcConfig>(m, "RhcConfig")
      .def(py::init([](int horizon, const Matrix& Q, const Matrix& R, const Matrix& Q_N,
                       double alpha, double eps_c0, double eps_c1) {
             RhcConfig cfg;
             cfg.horizon = horizon;
             cfg.Q = Q;
             cfg.R = R;
             cfg.Q_N = Q_N;
             cfg.alpha = alpha;
             cfg.epsilon = {eps_c0, eps_c1};
             return cfg;
           }),
           py::arg("horizon"), py::arg("Q"), py::arg("R"), py::arg("Q_N"),
           py::arg("alpha") = 1.0, py::arg("eps_c0") = 1.0, py::arg("eps_c1") = 0.0);
  py::class_<RhcSolution>(m, "RhcSolution")
      .def_readonly("inputs", &RhcSolution::inputs)
      .def_readonly("states", &RhcSolution::states)
      .def_readonly("value", &RhcSolution::value);
  m.def("gamma_weight", &gamma_weight, py::arg("x"), py::arg("alpha"));
  m.def("solve_v1", &solve_v1, py::arg("maps"), py::arg("x"), py::arg("eps"), py::arg("cfg"));
  m.def("solve_v2", &solve_v2, py::arg("maps"), py::arg("x"), py::arg("cfg"));
  m.def("solve_v3", &solve_v3, py::arg("maps"), py::arg("x"), py::arg("r"), py::arg("cfg"));
  m.def("policy_step", &policy_step, py::arg("maps"), py::arg("x"), py::arg("k"), py::arg("cfg"));

  // lifting
  py::class_<LiftingConfig>(m, "LiftingConfig")
      .def(py::init([](int depth, int output_dim, int input_dim) {
             LiftingConfig cfg{depth, output_dim, input_dim};
             cfg.validate();
             return cfg;
           }),
           py::arg("m"), py::arg("output_dim"), py::arg("input_dim"))
      .def_readonly("m", &LiftingConfig::m)
      .def_property_readonly("lifted_state_dim", &LiftingConfig::lifted_state_dim)
      .def_property_readonly("lifted_input_dim", &LiftingConfig::lifted_input_dim)
      .def_property_readonly("augmented_dim", &LiftingConfig::augmented_dim);
  m.def(
      "augment_model",
      [](const SignalModel& model, const LiftingConfig& cfg) {
        return augment_model(model, cfg).model;
      },
      py::arg("model"), py::arg("cfg"),
      "Signal model with shift states appended so the input is the raw v(k).");

  // simulation and experiments
  m.def(
      "exact_signal_model",
      [](const Matrix& F, const Matrix& G, const Matrix& H, int depth) {
        const LinearPlant plant(F, G, H, Vector::Zero(F.rows()));
        return exact_signal_model(plant, depth);
      },
      py::arg("F"), py::arg("G"), py::arg("H"), py::arg("m"),
      "Exact lifted signal model of an observable linear plant.");
  m.def(
      "simulate",
      [](const std::string& config_text) {
        ClosedLoopSetup setup = build_setup(parse_config(config_text));
        Estimator est(setup.estimator);
        return log_to_matrix(
            run_closed_loop(*setup.plant, setup.lift, est, setup.rhc, setup.steps));
      },
      py::arg("config_text"),
      "Run a closed-loop experiment from config text; returns the trajectory "
      "with the CSV column layout.");
  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& out_dir) {
        const ExperimentConfig cfg = parse_config_file(config_path);
        const std::string stem =
            std::filesystem::path(config_path).stem().string();
        const ExperimentResult res = run_experiment(cfg, out_dir, stem);
        py::dict out;
        out["exit_code"] = res.exit_code;
        out["csv_path"] = res.csv_path;
        out["summary_path"] = res.summary_path;
        out["steps_completed"] = res.steps_completed;
        if (res.metrics) {
          out["peak"] = res.metrics->peak;
          out["tail_max"] = res.metrics->tail_max;
          out["first_k_below"] = res.metrics->first_k_below;
        }
        return out;
      },
      py::arg("config_path"), py::arg("out_dir"),
      "Run a config file, writing the trajectory CSV and summary.");
  m.def("selftest", [] {
    std::ostringstream out;
    const int failures = selftest(out);
    return py::make_tuple(failures, out.str());
  });
}
