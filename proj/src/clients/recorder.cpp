#include "woc/clients/recorder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "woc/util/text.hpp"

namespace woc::clients {

void RecordStore::append(Record r) {
  auto [it, fresh] = last_step_.try_emplace(r.topic, r.step);
  if (!fresh) {
    if (r.step < it->second) {
      throw RecordError(fmt::format("topic {}: step {} after step {}", r.topic, r.step, it->second));
    }
    it->second = r.step;
  }
  rows_.push_back(std::move(r));
}

std::vector<Record> RecordStore::sorted() const {
  std::vector<Record> out = rows_;
  std::stable_sort(out.begin(), out.end(), [](const Record& a, const Record& b) {
    if (a.topic != b.topic) return a.topic < b.topic;
    return a.step < b.step;
  });
  return out;
}

std::vector<std::string> RecordStore::topics() const {
  std::vector<std::string> out;
  for (const auto& [t, s] : last_step_) out.push_back(t);
  return out;
}

std::vector<const Record*> RecordStore::series(const std::string& topic) const {
  std::vector<const Record*> out;
  for (const auto& r : rows_) {
    if (r.topic == topic) out.push_back(&r);
  }
  return out;
}

std::vector<double> RecordStore::numbers(const std::string& topic) const {
  std::vector<double> out;
  for (const auto* r : series(topic)) {
    double v = 0.0;
    if (!util::parse_double(r->value, v)) throw RecordError(fmt::format("topic {}: non-numeric value '{}'", topic, r->value));
    out.push_back(v);
  }
  return out;
}

std::string RecordStore::to_csv() const {
  std::string out = "topic,step,wall_time_ms,value\n";
  for (const auto& r : sorted()) {
    out += util::csv_row({r.topic, std::to_string(r.step), util::format_double(r.wall_time_ms), r.value});
    out += '\n';
  }
  return out;
}

void RecordStore::export_csv(const std::string& path) const {
  try {
    util::write_file(path, to_csv());
  } catch (const std::exception& e) {
    throw RecordError(fmt::format("cannot write recorder CSV: {}", e.what()));
  }
}

RecordStore RecordStore::from_csv(const std::string& text) {
  RecordStore store;
  std::size_t lineno = 0;
  bool header = false;
  for (auto line : util::split(text, '\n')) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto f = util::parse_csv_row(line);
    if (!header) {
      if (f != std::vector<std::string>{"topic", "step", "wall_time_ms", "value"}) {
        throw RecordError("recorder CSV: expected header topic,step,wall_time_ms,value");
      }
      header = true;
      continue;
    }
    Record r;
    if (f.size() != 4 || !util::parse_u64(f[1], r.step) || !util::parse_double(f[2], r.wall_time_ms)) {
      throw RecordError(fmt::format("recorder CSV line {}: malformed row", lineno));
    }
    r.topic = f[0];
    r.value = f[3];
    store.append(std::move(r));
  }
  if (!header) throw RecordError("recorder CSV: missing header");
  return store;
}

RecordStore RecordStore::import_csv(const std::string& path) { return from_csv(util::read_file(path)); }

std::string format_value(const bus::Json& val) {
  if (val.is_number()) return util::format_double(val.get<double>());
  return val.dump();
}

Recorder::Recorder(std::string name, std::vector<std::string> patterns)
    : name_(std::move(name)), patterns_(std::move(patterns)) {}

void Recorder::on_publish(const bus::BusMessage& msg, bus::Outbox& out) {
  store_.append(Record{msg.topic, msg.step.value_or(0), std::round(out.now() * 1e6) / 1e3, format_value(msg.val)});
}

}  // namespace woc::clients
