#include "woc/experiment/config.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>

#include <fmt/format.h>

#include "woc/util/sectioned.hpp"
#include "woc/util/text.hpp"

namespace woc::experiment {

using util::format_double;

std::string_view to_string(Transport t) {
  switch (t) {
    case Transport::InProcess: return "in-process";
    case Transport::TcpThreads: return "tcp-threads";
    case Transport::Spawn: return "spawn";
  }
  return "in-process";
}

std::optional<Transport> transport_from_string(std::string_view text) {
  for (auto t : {Transport::InProcess, Transport::TcpThreads, Transport::Spawn}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::map<std::string, double> line_length_study() {
  return {{"line1", 0.8}, {"line2", 1.4}, {"line12", 6.3}};
}

std::string ExperimentConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

bool ExperimentConfig::has_client(const std::string& client) const {
  return std::any_of(clients.begin(), clients.end(), [&](const bus::ManifestEntry& e) { return e.name == client; });
}

std::vector<bus::ManifestEntry> ExperimentConfig::roster() const {
  std::vector<bus::ManifestEntry> out;
  for (const auto& e : clients) {
    if (e.name == "controller" && k == 0) continue;
    out.push_back(e);
  }
  return out;
}

bus::Manifest ExperimentConfig::manifest() const { return bus::Manifest{schedule, roster(), true}; }

void ExperimentConfig::validate() const {
  if (schedule.steps < 1) throw ConfigError("steps must be at least 1");
  if (!(schedule.step_seconds > 0)) throw ConfigError("step_seconds must be positive");
  if (!(schedule.speedup > 0)) throw ConfigError("speedup must be positive");
  if (!has_client("grid")) throw ConfigError("client roster must include the grid client");
  if (!has_client("recorder")) throw ConfigError("client roster must include the recorder client");
  static const std::map<std::string, bus::ClientMode> roles = {{"grid", bus::ClientMode::Stepped},
                                                               {"converter", bus::ClientMode::Stepped},
                                                               {"controller", bus::ClientMode::FreeRunning},
                                                               {"recorder", bus::ClientMode::FreeRunning}};
  for (std::size_t i = 0; i < clients.size(); ++i) {
    auto it = roles.find(clients[i].name);
    if (it == roles.end()) throw ConfigError(fmt::format("unknown client '{}'", clients[i].name));
    if (it->second != clients[i].mode) {
      throw ConfigError(fmt::format("client '{}' must be {}", clients[i].name, bus::to_string(it->second)));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (clients[j].name == clients[i].name) throw ConfigError(fmt::format("duplicate client '{}'", clients[i].name));
    }
  }
  if (k >= 1 && !has_client("controller")) throw ConfigError("k >= 1 requires the controller client");
  if (cadence < 1) throw ConfigError("cadence must be at least 1");
  if (!(band.lo < band.hi)) throw ConfigError("voltage band requires v_lo < v_hi");
  if (!(penalty_weight >= 0)) throw ConfigError("penalty_weight must be non-negative");
  if (relaxation_iterations < 0) throw ConfigError("relaxation_iterations must be non-negative");
  if (!(converter.rated_s_kva > 0) || !(converter.q_max_kvar >= 0) || !(converter.p_peak_kw >= 0)) {
    throw ConfigError("converter ratings must be positive");
  }
  for (const auto& [id, len] : line_lengths) {
    if (!(len > 0)) throw ConfigError(fmt::format("line '{}': length must be positive", id));
  }
  try {
    de.validate();
    droop.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

namespace {


}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.clients.clear();
  try {
    auto doc = util::SectionedDocument::parse(text, source);
    for (const auto& s : doc.sections()) {
      static constexpr std::string_view known[] = {"meta", "experiment", "clients", "droop", "line_lengths"};
      if (std::find(std::begin(known), std::end(known), s.name) == std::end(known)) {
        throw ConfigError(fmt::format("{}:{}: unknown section [{}]", source, s.line, s.name));
      }
    }
    const auto* meta = doc.find("meta");
    bool format_ok = false;
    if (meta) {
      for (const auto& [key, rec] : util::key_values(doc, *meta)) {
        util::RecordReader r(doc, *meta, *rec);
        if (key != "format") r.fail("key", fmt::format("unknown [meta] key '{}'", key));
        if (r.string("value") != "1") r.fail("value", "unsupported format, expected 1");
        format_ok = true;
      }
    }
    if (!format_ok) throw ConfigError(fmt::format("{}: [meta] requires format=1", source));

    auto u64 = [](const util::RecordReader& r) {
      std::uint64_t v = 0;
      if (!util::parse_u64(r.string("value"), v)) r.fail("value", "expected a non-negative integer");
      return v;
    };
    auto num = [](const util::RecordReader& r) { return r.number("value"); };
    auto str = [](const util::RecordReader& r) { return r.string("value"); };
    const std::map<std::string, std::function<void(const util::RecordReader&)>> setters = {
        {"name", [&](auto& r) { c.name = str(r); }},
        {"network", [&](auto& r) { c.network = str(r); }},
        {"load_profile", [&](auto& r) { c.load_profile = str(r); }},
        {"irradiance_profile", [&](auto& r) { c.irradiance_profile = str(r); }},
        {"output_dir", [&](auto& r) { c.output_dir = str(r); }},
        {"steps", [&](auto& r) { c.schedule.steps = u64(r); }},
        {"step_seconds", [&](auto& r) { c.schedule.step_seconds = num(r); }},
        {"pacing",
         [&](auto& r) {
           auto p = bus::pacing_from_string(str(r));
           if (!p) r.fail("value", "pacing must be 'fast' or 'paced'");
           c.schedule.pacing = *p;
         }},
        {"speedup", [&](auto& r) { c.schedule.speedup = num(r); }},
        {"transport",
         [&](auto& r) {
           auto t = transport_from_string(str(r));
           if (!t) r.fail("value", "transport must be in-process, tcp-threads or spawn");
           c.transport = *t;
         }},
        {"port",
         [&](auto& r) {
           auto p = u64(r);
           if (p > 65535) r.fail("value", "port out of range");
           c.port = static_cast<std::uint16_t>(p);
         }},
        {"k", [&](auto& r) { c.k = u64(r); }},
        {"modified", [&](auto& r) { c.modified = r.boolean("value"); }},
        {"de_population", [&](auto& r) { c.de.population = u64(r); }},
        {"de_mutation", [&](auto& r) { c.de.mutation = num(r); }},
        {"de_crossover", [&](auto& r) { c.de.crossover = num(r); }},
        {"de_generations", [&](auto& r) { c.de.max_generations = u64(r); }},
        {"de_tolerance", [&](auto& r) { c.de.tolerance = num(r); }},
        {"v_lo", [&](auto& r) { c.band.lo = num(r); }},
        {"v_hi", [&](auto& r) { c.band.hi = num(r); }},
        {"penalty_weight", [&](auto& r) { c.penalty_weight = num(r); }},
        {"cadence", [&](auto& r) { c.cadence = u64(r); }},
        {"seed", [&](auto& r) { c.seed = u64(r); }},
        {"droop_dead_lo", [&](auto& r) { c.droop.dead_lo = num(r); }},
        {"droop_dead_hi", [&](auto& r) { c.droop.dead_hi = num(r); }},
        {"converter_generator", [&](auto& r) { c.converter.generator = str(r); }},
        {"converter_bus", [&](auto& r) { c.converter.bus = str(r); }},
        {"converter_rated_kva", [&](auto& r) { c.converter.rated_s_kva = num(r); }},
        {"converter_q_max_kvar", [&](auto& r) { c.converter.q_max_kvar = num(r); }},
        {"converter_p_peak_kw", [&](auto& r) { c.converter.p_peak_kw = num(r); }},
        {"relaxation_iterations",
         [&](auto& r) {
           auto v = u64(r);
           if (v > 1000) r.fail("value", "relaxation_iterations above 1000");
           c.relaxation_iterations = static_cast<int>(v);
         }},
    };
    if (const auto* exp = doc.find("experiment")) {
      for (const auto& [key, rec] : util::key_values(doc, *exp)) {
        util::RecordReader r(doc, *exp, *rec);
        auto it = setters.find(key);
        if (it == setters.end()) r.fail("key", fmt::format("unknown [experiment] key '{}'", key));
        it->second(r);
      }
    }
    if (const auto* cl = doc.find("clients")) {
      for (const auto& rec : cl->records) {
        util::RecordReader r(doc, *cl, rec);
        auto mode = bus::client_mode_from_string(r.string("mode"));
        if (!mode) r.fail("mode", "mode must be 'stepped' or 'free-running'");
        c.clients.push_back(bus::ManifestEntry{r.string("name"), *mode});
      }
    }
    if (const auto* dr = doc.find("droop")) {
      c.droop.knots.clear();
      for (const auto& rec : dr->records) {
        util::RecordReader r(doc, *dr, rec);
        c.droop.knots.push_back(clients::DroopKnot{r.number("u"), r.number("fraction")});
      }
    }
    if (const auto* ll = doc.find("line_lengths")) {
      for (const auto& rec : ll->records) {
        util::RecordReader r(doc, *ll, rec);
        if (!c.line_lengths.emplace(r.string("id"), r.number("length_km")).second) {
          r.fail("id", "duplicate line");
        }
      }
    } else {
      c.line_lengths = line_length_study();
    }
  } catch (const util::ParseError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = util::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(text, path, dir.empty() ? "." : dir);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out = "[meta]\nkey,value\nformat,1\n\n[experiment]\nkey,value\n";
  auto kv = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{},{}\n", key, util::csv_field(value));
  };
  kv("name", c.name);
  kv("network", c.network);
  kv("load_profile", c.load_profile);
  kv("irradiance_profile", c.irradiance_profile);
  kv("output_dir", c.output_dir);
  kv("steps", std::to_string(c.schedule.steps));
  kv("step_seconds", format_double(c.schedule.step_seconds));
  kv("pacing", std::string(bus::to_string(c.schedule.pacing)));
  kv("speedup", format_double(c.schedule.speedup));
  kv("transport", std::string(to_string(c.transport)));
  kv("port", std::to_string(c.port));
  kv("k", std::to_string(c.k));
  kv("modified", c.modified ? "true" : "false");
  kv("de_population", std::to_string(c.de.population));
  kv("de_mutation", format_double(c.de.mutation));
  kv("de_crossover", format_double(c.de.crossover));
  kv("de_generations", std::to_string(c.de.max_generations));
  kv("de_tolerance", format_double(c.de.tolerance));
  kv("v_lo", format_double(c.band.lo));
  kv("v_hi", format_double(c.band.hi));
  kv("penalty_weight", format_double(c.penalty_weight));
  kv("cadence", std::to_string(c.cadence));
  kv("seed", std::to_string(c.seed));
  kv("droop_dead_lo", format_double(c.droop.dead_lo));
  kv("droop_dead_hi", format_double(c.droop.dead_hi));
  kv("converter_generator", c.converter.generator);
  kv("converter_bus", c.converter.bus);
  kv("converter_rated_kva", format_double(c.converter.rated_s_kva));
  kv("converter_q_max_kvar", format_double(c.converter.q_max_kvar));
  kv("converter_p_peak_kw", format_double(c.converter.p_peak_kw));
  kv("relaxation_iterations", std::to_string(c.relaxation_iterations));
  out += "\n[clients]\nname,mode\n";
  for (const auto& e : c.clients) out += fmt::format("{},{}\n", e.name, bus::to_string(e.mode));
  out += "\n[droop]\nu,fraction\n";
  for (const auto& k : c.droop.knots) out += fmt::format("{},{}\n", format_double(k.u), format_double(k.fraction));
  out += "\n[line_lengths]\nid,length_km\n";
  for (const auto& [id, len] : c.line_lengths) out += fmt::format("{},{}\n", id, format_double(len));
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& c) { return util::fnv1a(serialize_config(c)); }

}  // namespace woc::experiment
