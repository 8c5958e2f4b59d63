#include "s2wef/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

namespace s2wef::fedsim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::S1:
      return "S1";
    case Scenario::S2:
      return "S2";
    case Scenario::CLEAN:
      return "CLEAN";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "S1") return Scenario::S1;
  if (name == "S2") return Scenario::S2;
  if (name == "CLEAN") return Scenario::CLEAN;
  return std::nullopt;
}

std::size_t SimConfig::free_rider_count() const {
  if (scenario == Scenario::CLEAN) return 0;
  return static_cast<std::size_t>(std::llround(free_rider_ratio * static_cast<double>(clients)));
}

std::size_t SimConfig::attack_onset() const { return scenario == Scenario::S1 ? 2 : 1; }

std::vector<std::size_t> SimConfig::architecture() const {
  return {dataset.features, hidden_units, dataset.classes};
}

void SimConfig::validate() const {
  if (clients < 3) throw ConfigError("clients: need at least 3 clients");
  if (!(free_rider_ratio >= 0.0 && free_rider_ratio < 0.5)) {
    throw ConfigError("free_rider_ratio: must lie in [0, 0.5) (honest majority)");
  }
  const double count = free_rider_ratio * static_cast<double>(clients);
  if (std::abs(count - std::round(count)) > 1e-9) {
    throw ConfigError("free_rider_ratio: clients * ratio must be an integer");
  }
  if (2 * static_cast<std::size_t>(std::llround(count)) >= clients) {
    throw ConfigError("free_rider_ratio: free-riders must be fewer than half the clients");
  }
  if (rounds < 3) throw ConfigError("rounds: need at least 3 rounds");
  if (seeds.empty()) throw ConfigError("seeds: need at least one trial seed");
  if (hidden_units < 1) throw ConfigError("model.hidden_units: must be positive");
  if (!(baseline_epsilon > 0.0)) throw ConfigError("baseline_epsilon: must be positive");
  if (partition.kind == PartitionKind::DIRICHLET &&
      (!(partition.beta > 0.0) || !std::isfinite(partition.beta))) {
    throw ConfigError("partition.beta: must be positive");
  }
  if (!(train.learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be positive");
  const auto scoped = [](const char* section, const auto& part) {
    try {
      part.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  scoped("train", train);
  scoped("attack", attack);
  scoped("dataset", dataset);
  if (dataset.samples < clients) throw ConfigError("dataset.samples: fewer samples than clients");
}

ConfigFileError::ConfigFileError(std::vector<std::string> diagnostics)
    : ConfigError([&] {
        std::string msg = "invalid config";
        for (const auto& d : diagnostics) msg += "\n  " + d;
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

namespace {

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Walks the config object, converting fields and collecting diagnostics.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  void object(const json& node, const std::string& path,
              const std::vector<std::pair<std::string, std::function<void(const json&)>>>& fields) {
    if (!node.is_object()) {
      error(path, "expected an object");
      return;
    }
    std::set<std::string> known;
    for (const auto& [key, handler] : fields) {
      known.insert(key);
      auto it = node.find(key);
      if (it == node.end()) continue;
      const std::string saved = path_;
      path_ = path + "/" + key;
      handler(*it);
      path_ = saved;
    }
    for (const auto& [key, value] : node.items()) {
      if (!known.count(key)) error(path + "/" + key, "unknown key");
    }
  }

  std::size_t count(const json& v) {
    if (!v.is_number_unsigned()) {
      if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::size_t>();
      error(path_, "expected a non-negative integer");
      return 0;
    }
    return v.get<std::size_t>();
  }

  double real(const json& v) {
    if (!v.is_number()) {
      error(path_, "expected a number");
      return 0.0;
    }
    return v.get<double>();
  }

  bool boolean(const json& v) {
    if (!v.is_boolean()) {
      error(path_, "expected true or false");
      return false;
    }
    return v.get<bool>();
  }

  std::string string(const json& v) {
    if (!v.is_string()) {
      error(path_, "expected a string");
      return {};
    }
    return v.get<std::string>();
  }

  void error(const std::string& path, const std::string& message) {
    diagnostics_.push_back(locate(path) + path + ": " + message);
  }
  void error(const std::string& message) { error(path_, message); }

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  // Best-effort line lookup: find each key of the pointer in turn.
  std::string locate(const std::string& path) const {
    std::size_t pos = 0;
    std::size_t found = std::string::npos;
    std::stringstream ss(path);
    std::string key;
    while (std::getline(ss, key, '/')) {
      if (key.empty()) continue;
      const auto hit = text_.find("\"" + key + "\"", pos);
      if (hit == std::string_view::npos) break;
      found = hit;
      pos = hit + key.size() + 2;
    }
    if (found == std::string::npos) return "";
    const auto [line, col] = line_col(text_, found);
    return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": ";
  }

  std::string_view text_;
  std::string path_;
  std::vector<std::string> diagnostics_;
};

}  // namespace

SimConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigFileError({"line " + std::to_string(line) + ", column " + std::to_string(col) +
                           ": malformed JSON (" + e.what() + ")"});
  }

  SimConfig cfg;
  Reader r(text);
  bool has_version = false;
  r.object(root, "", {
    {"schema_version", [&](const json& v) {
       has_version = true;
       if (r.count(v) != static_cast<std::size_t>(kConfigSchemaVersion)) {
         r.error("unsupported schema version (expected " + std::to_string(kConfigSchemaVersion) + ")");
       }
     }},
    {"clients", [&](const json& v) { cfg.clients = r.count(v); }},
    {"free_rider_ratio", [&](const json& v) { cfg.free_rider_ratio = r.real(v); }},
    {"scenario", [&](const json& v) {
       auto s = parse_scenario(r.string(v));
       if (s) cfg.scenario = *s; else r.error("expected one of S1, S2, CLEAN");
     }},
    {"rounds", [&](const json& v) { cfg.rounds = r.count(v); }},
    {"detector", [&](const json& v) {
       auto d = detect::parse_detector_kind(r.string(v));
       if (d) cfg.detector = *d;
       else r.error("expected one of S2WEF, WEF_NA_BASELINE, CLUSTER_ONLY, COS_ONLY_CLUSTER, NONE");
     }},
    {"accumulate", [&](const json& v) { cfg.accumulate = r.boolean(v); }},
    {"baseline_epsilon", [&](const json& v) { cfg.baseline_epsilon = r.real(v); }},
    {"seeds", [&](const json& v) {
       if (!v.is_array()) { r.error("expected an array of seeds"); return; }
       cfg.seeds.clear();
       for (const auto& s : v) {
         if (!s.is_number_unsigned()) { r.error("seeds must be non-negative integers"); continue; }
         cfg.seeds.push_back(s.get<std::uint64_t>());
       }
     }},
    {"attack", [&](const json& v) {
       r.object(v, "/attack", {
         {"kind", [&](const json& k) {
            auto a = attacks::parse_attack_kind(r.string(k));
            if (a) cfg.attack.kind = *a; else r.error("expected one of RWA, SPA, DWA, ADWA, AWCA");
          }},
         {"rwa_range", [&](const json& x) { cfg.attack.rwa_range = r.real(x); }},
         {"adwa_sigma", [&](const json& x) { cfg.attack.adwa_sigma = r.real(x); }},
         {"spa_sigma", [&](const json& x) { cfg.attack.spa_sigma = r.real(x); }},
         {"awca_sigma", [&](const json& x) { cfg.attack.awca_sigma = r.real(x); }},
         {"use_abs", [&](const json& x) { cfg.attack.use_abs = r.boolean(x); }},
       });
     }},
    {"partition", [&](const json& v) {
       r.object(v, "/partition", {
         {"kind", [&](const json& k) {
            const auto name = r.string(k);
            if (name == "IID") cfg.partition.kind = PartitionKind::IID;
            else if (name == "DIRICHLET") cfg.partition.kind = PartitionKind::DIRICHLET;
            else r.error("expected IID or DIRICHLET");
          }},
         {"beta", [&](const json& x) { cfg.partition.beta = r.real(x); }},
       });
     }},
    {"train", [&](const json& v) {
       r.object(v, "/train", {
         {"learning_rate", [&](const json& x) { cfg.train.learning_rate = r.real(x); }},
         {"momentum", [&](const json& x) { cfg.train.momentum = r.real(x); }},
         {"batch_size", [&](const json& x) { cfg.train.batch_size = r.count(x); }},
         {"local_iterations", [&](const json& x) { cfg.train.local_iterations = r.count(x); }},
       });
     }},
    {"model", [&](const json& v) {
       r.object(v, "/model", {
         {"hidden_units", [&](const json& x) { cfg.hidden_units = r.count(x); }},
       });
     }},
    {"dataset", [&](const json& v) {
       r.object(v, "/dataset", {
         {"classes", [&](const json& x) { cfg.dataset.classes = r.count(x); }},
         {"features", [&](const json& x) { cfg.dataset.features = r.count(x); }},
         {"samples", [&](const json& x) { cfg.dataset.samples = r.count(x); }},
         {"test_samples", [&](const json& x) { cfg.dataset.test_samples = r.count(x); }},
         {"separation", [&](const json& x) { cfg.dataset.separation = r.real(x); }},
       });
     }},
  });
  if (root.is_object() && !has_version) r.error("/schema_version", "missing schema version");

  std::vector<std::string> diagnostics = r.diagnostics();
  if (diagnostics.empty()) {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      // Messages start with the field path; point at its line when possible.
      std::string msg = e.what();
      std::string field = msg.substr(0, msg.find(':'));
      Reader locator(text);
      std::string path = "/" + field;
      for (auto& ch : path) {
        if (ch == '.') ch = '/';
      }
      locator.error(path, msg.substr(msg.find(':') == std::string::npos ? 0 : msg.find(':') + 2));
      diagnostics = locator.diagnostics();
    }
  }
  if (!diagnostics.empty()) throw ConfigFileError(std::move(diagnostics));
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigFileError({path + ": cannot open config file"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string dump_config(const SimConfig& cfg) {
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["clients"] = cfg.clients;
  j["free_rider_ratio"] = cfg.free_rider_ratio;
  j["scenario"] = std::string(to_string(cfg.scenario));
  j["rounds"] = cfg.rounds;
  j["detector"] = std::string(detect::to_string(cfg.detector));
  j["accumulate"] = cfg.accumulate;
  j["baseline_epsilon"] = cfg.baseline_epsilon;
  j["seeds"] = cfg.seeds;
  j["attack"] = {
      {"kind", std::string(attacks::to_string(cfg.attack.kind))},
      {"rwa_range", cfg.attack.rwa_range},
      {"adwa_sigma", cfg.attack.adwa_sigma},
      {"spa_sigma", cfg.attack.spa_sigma},
      {"awca_sigma", cfg.attack.awca_sigma},
      {"use_abs", cfg.attack.use_abs},
  };
  j["partition"] = {
      {"kind", cfg.partition.kind == PartitionKind::IID ? "IID" : "DIRICHLET"},
      {"beta", cfg.partition.beta},
  };
  j["train"] = {
      {"learning_rate", cfg.train.learning_rate},
      {"momentum", cfg.train.momentum},
      {"batch_size", cfg.train.batch_size},
      {"local_iterations", cfg.train.local_iterations},
  };
  j["model"] = {{"hidden_units", cfg.hidden_units}};
  j["dataset"] = {
      {"classes", cfg.dataset.classes},
      {"features", cfg.dataset.features},
      {"samples", cfg.dataset.samples},
      {"test_samples", cfg.dataset.test_samples},
      {"separation", cfg.dataset.separation},
  };
  return j.dump(2) + "\n";
}

}  // namespace s2wef::fedsim
