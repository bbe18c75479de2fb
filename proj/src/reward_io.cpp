// SPDX-License-Identifier: Apache-2.0
#include "oric/reward_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oric/error.hpp"

namespace oric {
namespace {

using ordered_json = nlohmann::ordered_json;

double read_number(const ordered_json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ParseError("line " + std::to_string(line) + ": field '" + key + "' missing or not a number");
  }
  return it->get<double>();
}

}  // namespace

std::string reward_to_line(const RewardRecord& r) {
  ordered_json obj;
  obj["image_id"] = r.image_id;
  obj["ori"] = r.ori;
  obj["oric"] = r.oric;
  obj["moric"] = r.moric;
  if (r.estimate) {
    obj["estimate"] = *r.estimate;
  } else {
    obj["estimate"] = nullptr;
  }
  obj["oric_unscaled"] = r.oric_unscaled;
  obj["no_ground_truth"] = r.no_ground_truth;
  return obj.dump();
}

RewardRecord reward_from_line(const std::string& line, std::size_t line_number) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_number) + ": malformed record at byte " +
                     std::to_string(e.byte));
  }
  if (!obj.is_object()) throw ParseError("line " + std::to_string(line_number) + ": expected an object");
  RewardRecord r;
  auto id = obj.find("image_id");
  if (id == obj.end() || !id->is_number_integer()) {
    throw ParseError("line " + std::to_string(line_number) + ": field 'image_id' missing or not an integer");
  }
  r.image_id = id->get<ImageId>();
  r.ori = read_number(obj, "ori", line_number);
  r.oric = read_number(obj, "oric", line_number);
  r.moric = read_number(obj, "moric", line_number);
  if (auto it = obj.find("estimate"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw ParseError("line " + std::to_string(line_number) + ": 'estimate' not a number");
    r.estimate = it->get<double>();
  }
  if (obj.contains("oric_unscaled")) r.oric_unscaled = read_number(obj, "oric_unscaled", line_number);
  if (auto it = obj.find("no_ground_truth"); it != obj.end() && it->is_boolean()) {
    r.no_ground_truth = it->get<bool>();
  }
  return r;
}

std::vector<RewardRecord> parse_rewards(const std::string& text) {
  std::vector<RewardRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(reward_from_line(line, number));
  }
  return out;
}

void save_rewards(const std::string& path, const std::vector<RewardRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& r : records) out << reward_to_line(r) << '\n';
  if (!out) throw IoError("error while writing '" + path + "'");
}

std::vector<RewardRecord> load_rewards(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_rewards(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace oric
