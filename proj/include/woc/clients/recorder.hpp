#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "woc/bus/client.hpp"

namespace woc::clients {

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Record {
  std::string topic;
  std::uint64_t step = 0;
  double wall_time_ms = 0.0;
  std::string value;  // number in shortest round-trip form, or compact JSON

  bool operator==(const Record&) const = default;
};

// Append-only; step indices per topic never decrease.
class RecordStore {
 public:
  void append(Record r);
  std::size_t size() const noexcept { return rows_.size(); }
  std::vector<Record> sorted() const;
  std::vector<std::string> topics() const;
  std::vector<const Record*> series(const std::string& topic) const;
  // Numeric values of one topic in step order; throws on non-numeric values.
  std::vector<double> numbers(const std::string& topic) const;

  std::string to_csv() const;
  void export_csv(const std::string& path) const;
  static RecordStore from_csv(const std::string& text);
  static RecordStore import_csv(const std::string& path);

  bool operator==(const RecordStore& other) const { return sorted() == other.sorted(); }

 private:
  std::vector<Record> rows_;
  std::map<std::string, std::uint64_t> last_step_;
};

std::string format_value(const bus::Json& val);

class Recorder : public bus::Client {
 public:
  explicit Recorder(std::string name = "recorder", std::vector<std::string> patterns = {"signal/#"});

  std::string name() const override { return name_; }
  bus::ClientMode mode() const override { return bus::ClientMode::FreeRunning; }
  std::vector<std::string> subscriptions() const override { return patterns_; }
  void on_publish(const bus::BusMessage& msg, bus::Outbox& out) override;

  const RecordStore& store() const noexcept { return store_; }

 private:
  std::string name_;
  std::vector<std::string> patterns_;
  RecordStore store_;
};

}  // namespace woc::clients
