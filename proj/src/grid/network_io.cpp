#include "woc/grid/network_io.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "woc/util/sectioned.hpp"
#include "woc/util/text.hpp"

namespace woc::grid {

using util::ParseError;
using util::RecordReader;
using util::SectionedDocument;

namespace {

const util::Section& require(const SectionedDocument& doc, std::string_view name) {
  const auto* s = doc.find(name);
  if (s == nullptr) {
    throw ParseError(doc.source(), 0, 0, fmt::format("missing [{}] section", name));
  }
  return *s;
}

void require_columns(const SectionedDocument& doc, const util::Section& s,
                     std::initializer_list<std::string_view> columns) {
  for (auto c : columns) {
    if (!s.column_index(c)) {
      throw ParseError(doc.source(), s.line, 1,
                       fmt::format("section [{}] lacks column '{}'", s.name, c));
    }
  }
}

void parse_meta(const SectionedDocument& doc, Network& net) {
  const auto& meta = require(doc, "meta");
  bool have_format = false;
  for (const auto& [key, rec] : util::key_values(doc, meta)) {
    RecordReader r(doc, meta, *rec);
    if (key == "format") {
      if (r.string("value") != "1") {
        r.fail("value", fmt::format("unsupported format '{}', expected 1", r.string("value")));
      }
      have_format = true;
    } else if (key == "base_mva") {
      net.base_mva = r.number("value");
    } else if (key == "base_frequency_hz") {
      net.base_frequency_hz = r.number("value");
    } else if (key == "name") {
      net.name = r.string("value");
    } else {
      r.fail("key", fmt::format("unknown [meta] key '{}'", key));
    }
  }
  if (!have_format) {
    throw ParseError(doc.source(), meta.line, 1, "[meta] requires format=1");
  }
}

}  // namespace

Network parse_network_text(std::string_view text, std::string source) {
  auto doc = SectionedDocument::parse(text, std::move(source));
  for (const auto& s : doc.sections()) {
    static constexpr std::string_view known[] = {"meta", "buses", "branches", "loads", "generators"};
    if (std::find(std::begin(known), std::end(known), s.name) == std::end(known)) {
      throw ParseError(doc.source(), s.line, 2, fmt::format("unknown section [{}]", s.name));
    }
  }

  Network net;
  parse_meta(doc, net);

  const auto& buses = require(doc, "buses");
  require_columns(doc, buses, {"id", "kind", "nominal_kv"});
  for (const auto& rec : buses.records) {
    RecordReader r(doc, buses, rec);
    Bus b;
    b.id = r.string("id");
    auto kind = bus_kind_from_string(r.string("kind"));
    if (!kind) {
      r.fail("kind", fmt::format("unknown bus kind '{}'", r.string("kind")));
    }
    b.kind = *kind;
    b.nominal_kv = r.number("nominal_kv");
    if (r.has("v_set")) {
      b.v_set = r.optional_number("v_set");
    }
    net.buses.push_back(std::move(b));
  }

  const auto& branches = require(doc, "branches");
  require_columns(doc, branches, {"id", "from", "to", "r_per_km", "x_per_km", "length_km"});
  for (const auto& rec : branches.records) {
    RecordReader r(doc, branches, rec);
    Branch br;
    br.id = r.string("id");
    br.from_bus = r.string("from");
    br.to_bus = r.string("to");
    br.r_per_km = r.number("r_per_km");
    br.x_per_km = r.number("x_per_km");
    br.b_per_km = r.has("b_per_km") ? r.optional_number("b_per_km").value_or(0.0) : 0.0;
    br.length_km = r.number("length_km");
    br.tap_ratio = r.has("tap_ratio") ? r.optional_number("tap_ratio").value_or(1.0) : 1.0;
    net.branches.push_back(std::move(br));
  }

  if (const auto* loads = doc.find("loads")) {
    require_columns(doc, *loads, {"id", "bus", "p_mw", "q_mvar"});
    for (const auto& rec : loads->records) {
      RecordReader r(doc, *loads, rec);
      net.loads.push_back(Load{r.string("id"), r.string("bus"), r.number("p_mw"), r.number("q_mvar")});
    }
  }

  if (const auto* gens = doc.find("generators")) {
    require_columns(doc, *gens, {"id", "bus", "p_mw", "q_mvar", "q_min_mvar", "q_max_mvar"});
    for (const auto& rec : gens->records) {
      RecordReader r(doc, *gens, rec);
      Generator g;
      g.id = r.string("id");
      g.bus = r.string("bus");
      g.p_mw = r.number("p_mw");
      g.q_mvar = r.number("q_mvar");
      g.q_min_mvar = r.number("q_min_mvar");
      g.q_max_mvar = r.number("q_max_mvar");
      g.controllable = r.has("controllable") && r.optional_boolean("controllable").value_or(false);
      g.external = r.has("external") && r.optional_boolean("external").value_or(false);
      net.generators.push_back(std::move(g));
    }
  }

  net.validate();
  return net;
}

Network parse_network(const std::string& path) {
  return parse_network_text(util::read_file(path), path);
}

namespace {

template <typename T>
std::vector<const T*> sorted_by_id(const std::vector<T>& items) {
  std::vector<const T*> out;
  out.reserve(items.size());
  for (const auto& i : items) out.push_back(&i);
  std::sort(out.begin(), out.end(),
            [](const T* a, const T* b) { return util::natural_less(a->id, b->id); });
  return out;
}

}  // namespace

std::string serialize_network(const Network& net) {
  using util::format_double;
  std::string out;
  out += "[meta]\nkey,value\nformat,1\n";
  if (!net.name.empty()) {
    out += fmt::format("name,{}\n", net.name);
  }
  out += fmt::format("base_mva,{}\n", format_double(net.base_mva));
  out += fmt::format("base_frequency_hz,{}\n", format_double(net.base_frequency_hz));

  out += "\n[buses]\nid,kind,nominal_kv,v_set\n";
  for (const auto* b : sorted_by_id(net.buses)) {
    out += fmt::format("{},{},{},{}\n", b->id, to_string(b->kind), format_double(b->nominal_kv),
                       b->v_set ? format_double(*b->v_set) : "");
  }

  out += "\n[branches]\nid,from,to,r_per_km,x_per_km,b_per_km,length_km,tap_ratio\n";
  for (const auto* b : sorted_by_id(net.branches)) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", b->id, b->from_bus, b->to_bus,
                       format_double(b->r_per_km), format_double(b->x_per_km),
                       format_double(b->b_per_km), format_double(b->length_km),
                       format_double(b->tap_ratio));
  }

  out += "\n[loads]\nid,bus,p_mw,q_mvar\n";
  for (const auto* l : sorted_by_id(net.loads)) {
    out += fmt::format("{},{},{},{}\n", l->id, l->bus, format_double(l->p_mw), format_double(l->q_mvar));
  }

  out += "\n[generators]\nid,bus,p_mw,q_mvar,q_min_mvar,q_max_mvar,controllable,external\n";
  for (const auto* g : sorted_by_id(net.generators)) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", g->id, g->bus, format_double(g->p_mw),
                       format_double(g->q_mvar), format_double(g->q_min_mvar),
                       format_double(g->q_max_mvar), g->controllable ? "true" : "false",
                       g->external ? "true" : "false");
  }
  return out;
}

}  // namespace woc::grid
