#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coforget/codec.hpp"
#include "coforget/decay.hpp"
#include "coforget/relevance.hpp"
#include "coforget/report.hpp"
#include "coforget/simulation.hpp"
#include "coforget/voting.hpp"

namespace py = pybind11;
using namespace coforget;

namespace {

Vote vote_from(const std::string& s) {
  if (s == "keep") return Vote::keep;
  if (s == "forget") return Vote::forget;
  throw py::value_error("vote must be 'keep' or 'forget'");
}

std::vector<AgentVote> votes_from(const std::vector<std::pair<std::string, std::string>>& raw) {
  std::vector<AgentVote> out;
  for (const auto& [agent, vote] : raw) out.push_back(AgentVote{agent, "", vote_from(vote), 0.0});
  return out;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Collective memory forgetting: decay, voting, codec and simulation";

  static py::exception<Error> error(m, "CoforgetError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // The message starts with the error code name.
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<ProtocolConfig>(m, "ProtocolConfig")
      .def(py::init<>())
      .def_readwrite("n_agents", &ProtocolConfig::n_agents)
      .def_readwrite("f", &ProtocolConfig::f)
      .def_readwrite("alpha", &ProtocolConfig::alpha)
      .def_readwrite("decay_scales", &ProtocolConfig::decay_scales)
      .def_readwrite("decay_weights", &ProtocolConfig::decay_weights)
      .def_readwrite("decay_threshold", &ProtocolConfig::decay_threshold)
      .def_readwrite("variance_warn", &ProtocolConfig::variance_warn)
      .def_readwrite("omega_d", &ProtocolConfig::omega_d)
      .def_readwrite("omega_r", &ProtocolConfig::omega_r)
      .def_readwrite("vote_threshold", &ProtocolConfig::vote_threshold)
      .def_readwrite("epoch_interactions", &ProtocolConfig::epoch_interactions)
      .def_readwrite("cache_capacity", &ProtocolConfig::cache_capacity)
      .def_readwrite("batch_size", &ProtocolConfig::batch_size)
      .def_readwrite("batch_interval_s", &ProtocolConfig::batch_interval_s)
      .def_readwrite("rng_seed", &ProtocolConfig::rng_seed)
      .def_readwrite("dimension", &ProtocolConfig::dimension);

  m.def("check_config", [](const ProtocolConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& v : check_config(cfg)) out.emplace_back(to_string(v.code), v.message);
    return out;
  }, "All violated constraints as (code, message) pairs.");

  m.def("decay_score", [](double t_last, double now, const ProtocolConfig& cfg) {
    const auto d = decay_score(t_last, now, cfg);
    py::dict out;
    out["per_scale"] = d.per_scale;
    out["combined"] = d.combined;
    out["variance"] = d.variance;
    out["high_variance"] = d.high_variance;
    out["propose_forget"] = d.proposal == DecayProposal::propose_forget;
    return out;
  }, py::arg("t_last"), py::arg("now"), py::arg("cfg") = ProtocolConfig{});

  m.def("form_vote", [](double decay, double relevance, const ProtocolConfig& cfg) {
    const auto v = form_vote(decay, relevance, cfg);
    return py::make_tuple(std::string(to_string(v.vote)), v.combined_score);
  }, py::arg("decay"), py::arg("relevance"), py::arg("cfg") = ProtocolConfig{});

  m.def("quorum_threshold", [](const std::vector<double>& weights, double alpha) {
    std::vector<AgentProfile> agents;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      agents.push_back(AgentProfile{std::to_string(i), weights[i], 1.0, true, {}});
    }
    return quorum_threshold(agents, alpha);
  }, py::arg("weights"), py::arg("alpha") = 2.0 / 3.0);

  m.def("weighted_forget_score",
        [](const std::vector<std::pair<std::string, std::string>>& votes,
           const std::vector<std::tuple<std::string, double, double>>& agents) {
          std::vector<AgentProfile> roster;
          for (const auto& [id, w, c] : agents) roster.push_back(AgentProfile{id, w, c, true, {}});
          return weighted_forget_score(votes_from(votes), roster);
        },
        py::arg("votes"), py::arg("agents"),
        "votes: [(agent_id, 'keep'|'forget')]; agents: [(agent_id, weight, confidence)]");

  m.def("cosine_similarity", &cosine_similarity);

  m.def("encode_frame",
        [](int kind, std::uint64_t epoch, const std::string& sender,
           const std::vector<std::string>& ids, std::optional<std::string> vote) {
          Frame f;
          if (kind < 0 || kind > 4) throw py::value_error("kind must be 0..4");
          f.kind = static_cast<MessageKind>(kind);
          f.epoch = epoch;
          f.sender = sender;
          f.ids = ids;
          if (vote) f.vote = vote_from(*vote);
          const auto bytes = encode_frame(f);
          return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        },
        py::arg("kind"), py::arg("epoch"), py::arg("sender"), py::arg("ids"),
        py::arg("vote") = std::nullopt);

  m.def("decode_frame", [](const py::bytes& data) {
    const std::string raw = data;
    const auto f = decode_frame(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
    py::dict out;
    out["kind"] = static_cast<int>(f.kind);
    out["epoch"] = f.epoch;
    out["sender"] = f.sender;
    out["ids"] = f.ids;
    out["vote"] = f.vote ? py::object(py::str(std::string(to_string(*f.vote)))) : py::object(py::none());
    return out;
  });

  m.def("run_simulation",
        [](const std::string& scenario, std::size_t epochs, std::optional<std::uint64_t> seed,
           const std::string& config_text, bool strict) {
          const auto s = parse_scenario(scenario);
          if (!s) throw py::value_error("unknown scenario: " + scenario);
          auto run = scenario_config(*s);
          if (!config_text.empty()) run = apply_config_text(std::move(run), config_text);
          apply_seed(run, seed.value_or(run.protocol.rng_seed));
          RunResult result;
          {
            py::gil_scoped_release release;
            result = run_simulation(run, epochs, strict);
          }
          return json_to_py(report_document(run, scenario, result));
        },
        py::arg("scenario") = "baseline_no_faults", py::arg("epochs") = 10,
        py::arg("seed") = std::nullopt, py::arg("config_text") = "", py::arg("strict") = false,
        "Runs a simulation and returns the report document as a dict.");
}
