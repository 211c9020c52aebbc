// Copyright 2026 The QSD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Result records (JSON) and flat CSV tables.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qsd/errors.hpp"
#include "qsd/experiments.hpp"

namespace qsd {

using Json = nlohmann::ordered_json;

/// Bumped on any breaking change to the record layout.
inline constexpr int kSchemaVersion = 1;

class IoError : public Error {
 public:
  using Error::Error;
};

struct ResultRecord {
  int schema_version = kSchemaVersion;
  std::string experiment;
  std::string timestamp;
  Json config;
  Json payload;

  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

inline Json to_json(const ResultRecord& r) {
  Json j;
  j["schema_version"] = r.schema_version;
  j["experiment"] = r.experiment;
  j["timestamp"] = r.timestamp;
  j["config"] = r.config;
  j["payload"] = r.payload;
  return j;
}

inline ResultRecord record_from_json(const Json& j) {
  try {
    ResultRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    r.experiment = j.at("experiment").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.config = j.at("config");
    r.payload = j.at("payload");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed result record: ") + e.what());
  }
}

inline std::string serialize(const ResultRecord& r) { return to_json(r).dump(2) + "\n"; }

inline ResultRecord parse_record(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("result record is not valid JSON: ") + e.what());
  }
  return record_from_json(j);
}

inline ResultRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_record(ss.str());
}

// ---- JSON views of library values ------------------------------------------

inline Json to_json(const CostBreakdown& b) {
  return Json{{"cost", b.cost}, {"p_err", b.p_err}, {"p_inc", b.p_inc}, {"loss", b.loss}};
}

inline Json to_json(const OutcomeDistribution& d) { return Json::array({d.p00, d.p01, d.p10, d.p11}); }

inline Json to_json(const ClassHistogram& h) {
  Json j;
  for (InputClass c : {InputClass::A, InputClass::BPlus, InputClass::BMinus}) {
    j[std::string(to_string(c))] = to_json(h[c]);
  }
  return j;
}

inline Json to_json(const DistributionStats& s) {
  return Json{{"count", s.count},   {"mean", s.mean},
              {"median", s.median}, {"q1", s.q1},
              {"q3", s.q3},         {"p5", s.p5},
              {"p95", s.p95},       {"whisker_low", s.whisker_low},
              {"whisker_high", s.whisker_high}, {"min", s.min},
              {"max", s.max},       {"outliers", s.outliers}};
}

/// Flat keys shared by config files and record echoes.
inline Json to_json(const TrainConfig& c) {
  return Json{{"circuit", to_string(c.circuit)},
              {"noise", c.train_noise.two_qubit()},
              {"validation_noise", c.validation_noise.two_qubit()},
              {"mu_a", c.state_params.mu_a},
              {"sigma_a", c.state_params.sigma_a},
              {"alpha_err", c.cost_params.alpha_err},
              {"alpha_inc", c.cost_params.alpha_inc},
              {"batch_size", c.batch_size},
              {"validation_size", c.validation_size},
              {"max_steps", c.max_steps},
              {"window", c.convergence.window},
              {"rel_tol", c.convergence.rel_tol},
              {"lr", c.lr},
              {"seed", c.seed}};
}

inline Json to_json(const RunResult& r) {
  Json j = to_json(r.config);
  j["initial_thetas"] = r.initial_thetas;
  j["final_thetas"] = r.final_thetas;
  j["steps"] = r.converged_step;
  j["converged"] = r.converged;
  j["validation"] = to_json(r.validation);
  j["histogram"] = to_json(r.histogram);
  return j;
}

inline Json to_json(const RepeatSummary& s) {
  Json runs = Json::array();
  for (const auto& r : s.runs) runs.push_back(to_json(r));
  return Json{{"loss", to_json(s.loss)}, {"p_err", to_json(s.p_err)}, {"p_inc", to_json(s.p_inc)},
              {"runs", std::move(runs)}};
}

// ---- CSV -------------------------------------------------------------------

/// Shortest decimal form that reads back to the same double.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::uint64_t x) { return std::to_string(x); }

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) {
      throw ShapeError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header_.size()));
    }
    rows_.push_back(std::move(cells));
  }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// ---- atomic output ---------------------------------------------------------

/// Writes every (name, contents) pair into `dir`. Files are first written
/// under a temporary name and renamed once all writes succeeded; on any
/// failure nothing from this call is left behind.
inline void write_files_atomically(const std::filesystem::path& dir,
                                   const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
  std::vector<fs::path> staged, committed;
  auto cleanup = [&] {
    std::error_code ignore;
    for (const auto& p : staged) fs::remove(p, ignore);
    for (const auto& p : committed) fs::remove(p, ignore);
  };
  for (const auto& [name, contents] : files) {
    const fs::path tmp = dir / (name + ".partial");
    staged.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.close();
    if (!out) {
      cleanup();
      throw IoError("cannot write " + tmp.string());
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    const fs::path target = dir / files[i].first;
    fs::rename(staged[i], target, ec);
    if (ec) {
      cleanup();
      throw IoError("cannot move output into place at " + target.string() + ": " + ec.message());
    }
    committed.push_back(target);
  }
}

}  // namespace qsd
