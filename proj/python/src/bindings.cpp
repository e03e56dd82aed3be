// Python bindings. Structured values cross the boundary as plain dicts and
// lists using the same JSON layout as config and checkpoint files.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rulebo/acquisition.hpp"
#include "rulebo/config.hpp"
#include "rulebo/controller.hpp"
#include "rulebo/diagnosis.hpp"
#include "rulebo/json_io.hpp"
#include "rulebo/protocol.hpp"
#include "rulebo/rules.hpp"
#include "rulebo/surrogate.hpp"
#include "rulebo/synthetic.hpp"

namespace py = pybind11;
using namespace rulebo;

namespace {

json from_py(const py::handle& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(text);
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

TrainRequest request_from_json(const json& j) {
  TrainRequest r;
  r.assignment = assignment_from_json(j.at("assignment"));
  r.directives = j.value("directives", std::vector<std::string>{});
  r.epochs = j.value("epochs", 1);
  r.seed = j.value("seed", std::uint64_t{0});
  return r;
}

json request_to_json(const TrainRequest& r) {
  return {{"assignment", to_json(r.assignment)}, {"directives", r.directives}, {"epochs", r.epochs},
          {"seed", r.seed}};
}

json outcome_to_json(const TrainOutcome& o) {
  return {{"history", to_json(o.history)}, {"result", to_json(o.result)}, {"notes", o.notes}};
}

DiagnosisReport report_from_py(const py::handle& obj) { return report_from_json(from_py(obj)); }

// Trainee backed by a Python callable: request dict -> {"history", "result"}.
class CallableTrainee : public Trainee {
 public:
  explicit CallableTrainee(py::function fn) : fn_(std::move(fn)) {}
  std::string name() const override { return "python"; }
  TrainOutcome train(const TrainRequest& req) override {
    json out;
    try {
      out = from_py(fn_(to_py(request_to_json(req))));
    } catch (const py::error_already_set& e) {
      throw TraineeCrashed(std::string("python trainee raised: ") + e.what());
    }
    TrainOutcome o;
    o.history = history_from_json(out.at("history"));
    o.result = eval_result_from_json(out.at("result"));
    return o;
  }

 private:
  py::function fn_;
};

std::unique_ptr<Trainee> trainee_for(const ExperimentConfig& cfg, const py::object& trainee) {
  if (!trainee.is_none()) return std::make_unique<CallableTrainee>(trainee.cast<py::function>());
  return make_trainee(cfg);
}

json summary_to_json(const Summary& s) {
  json records = json::array();
  for (const auto& r : s.records) records.push_back(to_json(r));
  return {{"best_assignment", to_json(s.best_assignment)},
          {"best_objective", s.best_objective},
          {"trainings", s.trainings},
          {"records", records}};
}

Eigen::MatrixXd matrix_from(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InsufficientData("no input rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw DimensionMismatch("input rows differ in length");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "rulebo core bindings";

  static py::exception<Error> base(m, "RuleboError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    } catch (const json::exception& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.def("expected_improvement", &expected_improvement, py::arg("mean"), py::arg("std"), py::arg("best_y"),
        py::arg("xi") = 0.0);

  m.def("oscillation_score", [](const std::vector<double>& loss) { return oscillation_score(loss); },
        py::arg("loss"));

  m.def(
      "diagnose",
      [](const py::dict& history, const py::dict& result, const py::object& thresholds) {
        const auto t = thresholds.is_none() ? DiagnosisThresholds{} : thresholds_from_json(from_py(thresholds));
        return to_py(to_json(diagnose(history_from_json(from_py(history)), eval_result_from_json(from_py(result)), t)));
      },
      py::arg("history"), py::arg("result"), py::arg("thresholds") = py::none());

  m.def(
      "tune",
      [](const py::list& report, const py::list& space, const py::object& model, const py::object& rules) {
        const ModelSpec ms = model.is_none() ? ModelSpec{} : model_spec_from_json(from_py(model));
        const RuleTable table = rules.is_none() ? default_rule_table() : rule_table_from_json(from_py(rules));
        const auto r = tune(report_from_py(report), ms, space_from_json(from_py(space)), table);
        json applied = json::array();
        for (const auto& a : r.applied)
          applied.push_back({{"issue", issue_name(a.issue)}, {"action", to_json(a.action)}});
        return to_py({{"model", to_json(r.model)}, {"space", to_json(r.space)}, {"applied", applied},
                      {"skipped", r.skipped}});
      },
      py::arg("report"), py::arg("space"), py::arg("model") = py::none(), py::arg("rules") = py::none());

  m.def(
      "sample_random",
      [](const py::list& space, std::uint64_t seed) {
        Rng rng(seed);
        return to_py(to_json(sample_random(space_from_json(from_py(space)), rng)));
      },
      py::arg("space"), py::arg("seed"));
  m.def(
      "encode",
      [](const py::list& space, const py::dict& a) {
        return encode(space_from_json(from_py(space)), assignment_from_json(from_py(a)));
      },
      py::arg("space"), py::arg("assignment"));
  m.def(
      "decode",
      [](const py::list& space, const std::vector<double>& u) {
        return to_py(to_json(decode(space_from_json(from_py(space)), u)));
      },
      py::arg("space"), py::arg("point"));

  py::class_<GpModel>(m, "GaussianProcess")
      .def_static(
          "fit",
          [](const std::vector<std::vector<double>>& x, const std::vector<double>& y, const py::object& config) {
            const FitConfig cfg = config.is_none() ? FitConfig{} : fit_config_from_json(from_py(config));
            const Eigen::VectorXd targets = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
            return fit(matrix_from(x), targets, cfg);
          },
          py::arg("x"), py::arg("y"), py::arg("config") = py::none())
      .def(
          "posterior",
          [](const GpModel& g, const std::vector<double>& x) {
            const auto p = g.posterior(x);
            return py::make_tuple(p.mean, p.variance);
          },
          py::arg("x"))
      .def("log_marginal_likelihood", &GpModel::log_marginal_likelihood)
      .def_property_readonly("length_scales", [](const GpModel& g) { return g.params().length_scales; })
      .def_property_readonly("signal_variance", [](const GpModel& g) { return g.params().signal_variance; })
      .def_property_readonly("noise_variance", [](const GpModel& g) { return g.params().noise_variance; });

  m.def(
      "propose_next",
      [](const GpModel& g, const py::list& space, double best_y, std::uint64_t seed, const py::object& config) {
        const AcquisitionConfig cfg = config.is_none() ? AcquisitionConfig{} : acquisition_from_json(from_py(config));
        Rng rng(seed);
        return to_py(to_json(propose_next(g, space_from_json(from_py(space)), best_y, rng, cfg)));
      },
      py::arg("gp"), py::arg("space"), py::arg("best_y"), py::arg("seed"), py::arg("config") = py::none());

  m.def(
      "synthetic_curves",
      [](const py::dict& request, const py::list& space, const py::object& constants) {
        const auto k = constants.is_none() ? SyntheticConstants{} : synthetic_constants_from_json(from_py(constants));
        const auto roles = RoleBindings::from_space(space_from_json(from_py(space)));
        return to_py(outcome_to_json(synthetic_curves(request_from_json(from_py(request)), roles, k)));
      },
      py::arg("request"), py::arg("space"), py::arg("constants") = py::none());

  m.def(
      "run_external_trainee",
      [](const std::vector<std::string>& command, const py::dict& request, double timeout_s) {
        return to_py(outcome_to_json(run_external_trainee(command, request_from_json(from_py(request)), timeout_s)));
      },
      py::arg("command"), py::arg("request"), py::arg("timeout_s") = 3600.0);

  m.def(
      "run_experiment",
      [](const py::dict& config, const py::object& trainee) {
        const auto cfg = config_from_json(from_py(config));
        auto t = trainee_for(cfg, trainee);
        return to_py(summary_to_json(run(cfg, *t)));
      },
      py::arg("config"), py::arg("trainee") = py::none(),
      "Runs the initial training plus config['cycles'] iterations. `trainee` is an optional callable "
      "taking a request dict and returning {'history': ..., 'result': ...}.");

  m.def(
      "start",
      [](const py::dict& config, const py::object& trainee) {
        const auto cfg = config_from_json(from_py(config));
        auto t = trainee_for(cfg, trainee);
        Controller c(cfg, *t);
        return to_py(to_json(c.start()));
      },
      py::arg("config"), py::arg("trainee") = py::none());

  m.def(
      "step",
      [](const py::dict& config, const py::dict& checkpoint, const py::object& trainee) {
        const auto cfg = config_from_json(from_py(config));
        auto t = trainee_for(cfg, trainee);
        Controller c(cfg, *t);
        auto ckpt = checkpoint_from_json(from_py(checkpoint));
        c.step(ckpt);
        return to_py(to_json(ckpt));
      },
      py::arg("config"), py::arg("checkpoint"), py::arg("trainee") = py::none());

  m.def(
      "load_checkpoint", [](const std::string& path) { return to_py(to_json(load_checkpoint(path))); },
      py::arg("path"));
  m.def(
      "save_checkpoint",
      [](const py::dict& checkpoint, const std::string& path) {
        save_checkpoint(checkpoint_from_json(from_py(checkpoint)), path);
      },
      py::arg("checkpoint"), py::arg("path"));
}
