#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "kspin/annealing.hpp"
#include "kspin/dp_oracles.hpp"
#include "kspin/error.hpp"
#include "kspin/hamiltonian.hpp"
#include "kspin/mdp.hpp"
#include "kspin/pseudo_boolean.hpp"
#include "kspin/quadratizer.hpp"
#include "kspin/resources.hpp"

namespace py = pybind11;
using namespace kspin;

namespace {

using TermDict = std::map<std::vector<VarId>, double>;

TermDict terms_of(const PseudoBooleanPolynomial& p) { return {p.terms().begin(), p.terms().end()}; }

PseudoBooleanPolynomial poly_from(const TermDict& terms, std::size_t num_variables) {
  PseudoBooleanPolynomial p(num_variables);
  for (const auto& [vars, c] : terms) p.add_term(vars, c);
  return p;
}

TerminalMode terminal_mode(const std::string& s) {
  if (s == "absorbing") return TerminalMode::absorbing;
  if (s == "reflecting") return TerminalMode::reflecting;
  throw ValidationError({"terminals must be absorbing or reflecting"});
}

std::optional<std::vector<std::size_t>> actions_or_none(const PolicyAssignment& p) {
  if (!p.feasible()) return std::nullopt;
  return p.actions();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "K-spin policy Hamiltonians for finite discounted MDPs";

  auto base = py::register_exception<Error>(m, "KspinError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<LimitError>(m, "LimitError", base.ptr());

  py::class_<Mdp>(m, "Mdp")
      .def(py::init<std::size_t, std::size_t, std::vector<double>, std::vector<double>, double, std::string>(),
           py::arg("num_states"), py::arg("num_actions"), py::arg("transition"), py::arg("reward"),
           py::arg("discount"), py::arg("name") = "")
      .def_property_readonly("num_states", &Mdp::num_states)
      .def_property_readonly("num_actions", &Mdp::num_actions)
      .def_property_readonly("discount", &Mdp::discount)
      .def_property_readonly("name", &Mdp::name)
      .def_property_readonly("transition", [](const Mdp& mdp) { return mdp.transition(); }, "flat P[s][a][s'] in row-major order")
      .def_property_readonly("reward", [](const Mdp& mdp) { return mdp.reward(); }, "flat R[s][a][s'] in row-major order")
      .def("probability", [](const Mdp& mdp, std::size_t s, std::size_t a, std::size_t t) { return mdp.probability(s, a, t); })
      .def("expected_reward", &Mdp::expected_reward)
      .def("validate", [](const Mdp& mdp) { return validate(mdp).violations; })
      .def("to_json", [](const Mdp& mdp) { return save_mdp(mdp); })
      .def("__repr__", [](const Mdp& mdp) {
        return "<Mdp " + mdp.name() + " |S|=" + std::to_string(mdp.num_states()) +
               " |A|=" + std::to_string(mdp.num_actions()) + ">";
      });

  m.def(
      "build_hallway",
      [](std::size_t n, double gamma, double slip, const std::string& terminals) {
        HallwayOptions o;
        o.slip = slip;
        o.terminals = terminal_mode(terminals);
        return build_hallway(n, gamma, o);
      },
      py::arg("num_states"), py::arg("gamma"), py::arg("slip") = 0.04, py::arg("terminals") = "absorbing");
  m.def("load_mdp", &load_mdp, py::arg("text"));
  m.def("interior_states", &interior_states);
  m.def("absorbing_states", [](const Mdp& mdp) { return absorbing_states(mdp); });

  py::class_<PseudoBooleanPolynomial>(m, "Polynomial")
      .def(py::init([](const TermDict& terms, std::size_t n) { return poly_from(terms, n); }),
           py::arg("terms") = TermDict{}, py::arg("num_variables") = 0)
      .def_property_readonly("terms", &terms_of, "{tuple of variable ids: coefficient}")
      .def_property_readonly("num_variables", &PseudoBooleanPolynomial::num_variables)
      .def_property_readonly("degree", &PseudoBooleanPolynomial::degree)
      .def("__len__", &PseudoBooleanPolynomial::size)
      .def("evaluate", [](const PseudoBooleanPolynomial& p, const std::vector<std::uint8_t>& x) { return p.evaluate(x); })
      .def("to_text", [](const PseudoBooleanPolynomial& p) { return to_text(p); });

  py::class_<CompiledHamiltonian>(m, "Hamiltonian")
      .def_readonly("polynomial", &CompiledHamiltonian::polynomial)
      .def_readonly("objective", &CompiledHamiltonian::objective)
      .def_readonly("penalty", &CompiledHamiltonian::penalty)
      .def_readonly("constant_offset", &CompiledHamiltonian::constant_offset)
      .def_property_readonly("num_variables", &CompiledHamiltonian::num_variables)
      .def("energy", [](const CompiledHamiltonian& h, const std::vector<std::uint8_t>& x) { return h.energy(x); })
      .def("objective_value",
           [](const CompiledHamiltonian& h, const std::vector<std::uint8_t>& x) { return h.objective_value(x); });

  m.def(
      "compile",
      [](const Mdp& mdp, std::size_t order, double penalty, bool include_constant, unsigned threads) {
        CompilerConfig c;
        c.truncation_order = order;
        c.penalty_strength = penalty;
        c.include_constant = include_constant;
        c.num_threads = threads;
        return compile(mdp, c);
      },
      py::arg("mdp"), py::arg("order") = 3, py::arg("penalty") = 3.0, py::arg("include_constant") = false,
      py::arg("threads") = 1);
  m.def("minimal_truncation_order", &minimal_truncation_order, py::arg("mdp"), py::arg("penalty") = 3.0,
        py::arg("max_order") = 10);
  m.def(
      "truncated_q",
      [](const Mdp& mdp, const std::vector<std::size_t>& actions, std::size_t order) {
        return truncated_q_table(mdp, PolicyAssignment::from_actions(actions, mdp.num_actions()), order);
      },
      py::arg("mdp"), py::arg("actions"), py::arg("order"));

  py::class_<QuboProblem>(m, "Qubo")
      .def_readonly("polynomial", &QuboProblem::polynomial)
      .def_readonly("reduction_penalty", &QuboProblem::reduction_penalty)
      .def_property_readonly("num_variables", [](const QuboProblem& q) { return q.registry.total_variables(); })
      .def_property_readonly("ancillas",
                             [](const QuboProblem& q) {
                               std::vector<std::tuple<VarId, VarId, VarId>> out;
                               for (const auto& e : q.registry.entries()) out.emplace_back(e.ancilla, e.parent_a, e.parent_b);
                               return out;
                             })
      .def("lift", [](const QuboProblem& q, const std::vector<std::uint8_t>& x) { return lift(x, q.registry); })
      .def("project", [](const QuboProblem& q, const std::vector<std::uint8_t>& x) { return project(x, q.registry); })
      .def("to_text", [](const QuboProblem& q) { return to_qubo_text(q); })
      .def("resources", [](const QuboProblem& q) {
        const auto r = count_resources(q);
        return py::dict(py::arg("base_variables") = r.base_variables, py::arg("logical_variables") = r.logical_variables,
                        py::arg("coefficients") = r.coefficient_count);
      });

  m.def("quadratize", &quadratize, py::arg("polynomial"), py::arg("reduction_penalty") = 5.0);
  m.def("sufficient_reduction_penalty", &sufficient_reduction_penalty);

  m.def(
      "exhaustive_ground_state",
      [](const PseudoBooleanPolynomial& p, std::size_t max_variables) {
        const auto g = exhaustive_ground_state(p, 1e-9, max_variables);
        return py::make_tuple(g.energy, g.minimizers);
      },
      py::arg("polynomial"), py::arg("max_variables") = 24);

  m.def(
      "simulated_anneal",
      [](const PseudoBooleanPolynomial& p, std::size_t sweeps, std::size_t reads, std::uint64_t seed,
         std::optional<double> beta_start, std::optional<double> beta_end, const std::string& beta_rule,
         unsigned threads) {
        AnnealSchedule s;
        s.num_sweeps = sweeps;
        s.num_reads = reads;
        s.seed = seed;
        s.beta_start = beta_start;
        s.beta_end = beta_end;
        s.beta_rule = parse_beta_rule(beta_rule);
        s.num_threads = threads;
        std::vector<std::pair<std::vector<std::uint8_t>, double>> out;
        for (auto& r : simulated_anneal(p, s)) out.emplace_back(std::move(r.assignment), r.energy);
        return out;
      },
      py::arg("polynomial"), py::arg("sweeps") = 100, py::arg("reads") = 100, py::arg("seed") = 0,
      py::arg("beta_start") = py::none(), py::arg("beta_end") = py::none(),
      py::arg("beta_rule") = "flip-probability", py::arg("threads") = 1);

  m.def(
      "tts",
      [](double p_s, double effort, double p_d, double p_err) {
        const auto t = tts(p_s, effort, p_d, p_err);
        return py::dict(py::arg("value") = t.value, py::arg("error") = t.value_error,
                        py::arg("status") = std::string(to_string(t.status)));
      },
      py::arg("success_probability"), py::arg("effort"), py::arg("desired_probability") = 0.99,
      py::arg("success_error") = 0.0);

  m.def(
      "value_iteration",
      [](const Mdp& mdp, double tol) {
        const auto r = value_iteration(mdp, tol);
        return py::dict(py::arg("q") = r.q.values(), py::arg("actions") = actions_or_none(r.policy),
                        py::arg("iterations") = r.iterations);
      },
      py::arg("mdp"), py::arg("tol") = 1e-12);
  m.def(
      "policy_evaluation",
      [](const Mdp& mdp, const std::vector<std::size_t>& actions) {
        return policy_evaluation_exact(mdp, PolicyAssignment::from_actions(actions, mdp.num_actions())).values();
      },
      py::arg("mdp"), py::arg("actions"));
  m.def(
      "q_learning",
      [](const Mdp& mdp, std::size_t episodes, double learning_rate, double epsilon, std::uint64_t seed) {
        QLearningConfig c;
        c.num_episodes = episodes;
        c.learning_rate = learning_rate;
        c.epsilon = epsilon;
        c.seed = seed;
        const auto r = q_learning(mdp, c);
        return py::dict(py::arg("q") = r.q.values(), py::arg("actions") = actions_or_none(r.policy));
      },
      py::arg("mdp"), py::arg("episodes") = 20000, py::arg("learning_rate") = 0.1, py::arg("epsilon") = 0.1,
      py::arg("seed") = 0);
}
