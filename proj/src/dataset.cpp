// SPDX-License-Identifier: Apache-2.0
#include "oric/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "oric/error.hpp"

namespace oric {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("error while writing '" + path + "'");
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": malformed JSON at byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return v.get<std::int64_t>();
}

BoundingBox read_box(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) {
    throw ValidationError(where + ": bbox must be an array [x, y, width, height]");
  }
  const auto field = where + " bbox";
  return checked_box(number(v[0], field), number(v[1], field), number(v[2], field),
                     number(v[3], field), where.c_str());
}

struct Lookup {
  std::unordered_map<std::int64_t, ClassId> category;
  std::unordered_map<ImageId, std::size_t> image;
};

void read_detections(const std::string& text, const std::string& source, const Lookup& lookup,
                     Dataset& dataset, DetectorKind which) {
  const json root = parse_json(text, source);
  if (!root.is_array()) throw ValidationError(source + ": results file must be a JSON array");
  for (std::size_t k = 0; k < root.size(); ++k) {
    const json& item = root[k];
    const std::string where = source + " detection[" + std::to_string(k) + "]";
    if (!item.is_object()) throw ValidationError(where + ": expected an object");
    const ImageId image_id = integer(require(item, "image_id", where), where + " image_id");
    const std::int64_t cat = integer(require(item, "category_id", where), where + " category_id");
    const double score = number(require(item, "score", where), where + " score");
    auto img = lookup.image.find(image_id);
    if (img == lookup.image.end()) {
      throw ValidationError(where + ": image_id " + std::to_string(image_id) +
                            " is not in the annotation file");
    }
    auto cls = lookup.category.find(cat);
    if (cls == lookup.category.end()) {
      throw ValidationError(where + ": unknown category_id " + std::to_string(cat));
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw ValidationError(where + ": score " + std::to_string(score) + " outside [0, 1]");
    }
    Detection det{read_box(require(item, "bbox", where), where), cls->second, score};
    auto& record = dataset.images[img->second];
    (which == DetectorKind::kWeak ? record.weak : record.strong).push_back(det);
  }
}

}  // namespace

std::ptrdiff_t Dataset::index_of(ImageId id) const {
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].image_id == id) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

void validate(const Dataset& dataset) {
  if (dataset.images.empty()) throw ValidationError("dataset has no images");
  if (dataset.classes.empty()) throw ValidationError("dataset has no classes");
  if (dataset.category_ids.size() != dataset.classes.size()) {
    throw ValidationError("category id table does not match class table");
  }
  const auto m = static_cast<ClassId>(dataset.classes.size());
  std::unordered_set<ImageId> seen;
  for (const auto& img : dataset.images) {
    if (!seen.insert(img.image_id).second) {
      throw ValidationError("duplicate image_id " + std::to_string(img.image_id));
    }
    const auto where = "image " + std::to_string(img.image_id);
    for (const auto& gt : img.truths) {
      if (gt.class_id < 0 || gt.class_id >= m) throw ValidationError(where + ": class id out of range");
      if (!is_valid(gt.box)) throw ValidationError(where + ": invalid ground-truth box");
    }
    for (const auto* dets : {&img.weak, &img.strong}) {
      for (const auto& d : *dets) {
        if (d.class_id < 0 || d.class_id >= m) throw ValidationError(where + ": class id out of range");
        if (!is_valid(d.box)) throw ValidationError(where + ": invalid detection box");
        if (!(d.score >= 0.0 && d.score <= 1.0)) throw ValidationError(where + ": score outside [0, 1]");
      }
    }
  }
}

Dataset parse_dataset(const std::string& gt_json, const std::string& weak_json,
                      const std::string& strong_json, const std::string& gt_source,
                      const std::string& weak_source, const std::string& strong_source) {
  const json root = parse_json(gt_json, gt_source);
  if (!root.is_object()) throw ValidationError(gt_source + ": annotation file must be a JSON object");

  Dataset dataset;
  Lookup lookup;

  const json& cats = require(root, "categories", gt_source);
  if (!cats.is_array()) throw ValidationError(gt_source + ": 'categories' must be an array");
  std::vector<std::pair<std::int64_t, std::string>> cat_list;
  for (std::size_t k = 0; k < cats.size(); ++k) {
    const auto where = gt_source + " category[" + std::to_string(k) + "]";
    const std::int64_t id = integer(require(cats[k], "id", where), where + " id");
    std::string name = std::to_string(id);
    if (auto it = cats[k].find("name"); it != cats[k].end() && it->is_string()) name = it->get<std::string>();
    cat_list.emplace_back(id, std::move(name));
  }
  std::sort(cat_list.begin(), cat_list.end());
  for (const auto& [id, name] : cat_list) {
    if (!lookup.category.emplace(id, static_cast<ClassId>(dataset.classes.size())).second) {
      throw ValidationError(gt_source + ": duplicate category id " + std::to_string(id));
    }
    dataset.category_ids.push_back(id);
    dataset.classes.push_back(name);
  }

  const json& images = require(root, "images", gt_source);
  if (!images.is_array()) throw ValidationError(gt_source + ": 'images' must be an array");
  for (std::size_t k = 0; k < images.size(); ++k) {
    const auto where = gt_source + " image[" + std::to_string(k) + "]";
    ImageRecord rec;
    rec.image_id = integer(require(images[k], "id", where), where + " id");
    if (auto it = images[k].find("width"); it != images[k].end()) rec.width = number(*it, where + " width");
    if (auto it = images[k].find("height"); it != images[k].end()) rec.height = number(*it, where + " height");
    if (!lookup.image.emplace(rec.image_id, dataset.images.size()).second) {
      throw ValidationError(where + ": duplicate image id " + std::to_string(rec.image_id));
    }
    dataset.images.push_back(std::move(rec));
  }
  if (dataset.images.empty()) throw ValidationError(gt_source + ": 'images' is empty");

  if (auto it = root.find("annotations"); it != root.end()) {
    if (!it->is_array()) throw ValidationError(gt_source + ": 'annotations' must be an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const json& ann = (*it)[k];
      std::string where = gt_source + " annotation[" + std::to_string(k) + "]";
      if (auto id = ann.find("id"); id != ann.end() && id->is_number_integer()) {
        where = gt_source + " annotation id " + std::to_string(id->get<std::int64_t>());
      }
      const ImageId image_id = integer(require(ann, "image_id", where), where + " image_id");
      const std::int64_t cat = integer(require(ann, "category_id", where), where + " category_id");
      auto img = lookup.image.find(image_id);
      if (img == lookup.image.end()) {
        throw ValidationError(where + ": unknown image_id " + std::to_string(image_id));
      }
      auto cls = lookup.category.find(cat);
      if (cls == lookup.category.end()) {
        throw ValidationError(where + ": unknown category_id " + std::to_string(cat));
      }
      dataset.images[img->second].truths.push_back({read_box(require(ann, "bbox", where), where), cls->second});
    }
  }

  read_detections(weak_json, weak_source, lookup, dataset, DetectorKind::kWeak);
  if (!strong_json.empty()) read_detections(strong_json, strong_source, lookup, dataset, DetectorKind::kStrong);

  // Images without a declared extent get the smallest extent covering their boxes.
  for (auto& img : dataset.images) {
    if (img.width > 0.0 && img.height > 0.0) continue;
    double w = 1.0, h = 1.0;
    auto cover = [&](const BoundingBox& b) {
      w = std::max(w, b.right());
      h = std::max(h, b.bottom());
    };
    for (const auto& g : img.truths) cover(g.box);
    for (const auto& d : img.weak) cover(d.box);
    for (const auto& d : img.strong) cover(d.box);
    if (!(img.width > 0.0)) img.width = w;
    if (!(img.height > 0.0)) img.height = h;
  }
  return dataset;
}

Dataset load_dataset(const std::string& gt_path, const std::string& weak_path,
                     const std::string& strong_path) {
  const std::string gt = read_file(gt_path);
  const std::string weak = read_file(weak_path);
  const std::string strong = strong_path.empty() ? std::string() : read_file(strong_path);
  return parse_dataset(gt, weak, strong, gt_path, weak_path, strong_path);
}

std::string annotations_to_json(const Dataset& dataset) {
  ordered_json root;
  root["images"] = ordered_json::array();
  root["annotations"] = ordered_json::array();
  root["categories"] = ordered_json::array();
  std::int64_t ann_id = 1;
  for (const auto& img : dataset.images) {
    root["images"].push_back(
        {{"id", img.image_id}, {"width", img.width}, {"height", img.height}});
    for (const auto& gt : img.truths) {
      root["annotations"].push_back({{"id", ann_id++},
                                     {"image_id", img.image_id},
                                     {"category_id", dataset.category_ids[gt.class_id]},
                                     {"bbox", {gt.box.x, gt.box.y, gt.box.w, gt.box.h}},
                                     {"area", gt.box.area()},
                                     {"iscrowd", 0}});
    }
  }
  for (std::size_t c = 0; c < dataset.classes.size(); ++c) {
    root["categories"].push_back({{"id", dataset.category_ids[c]}, {"name", dataset.classes[c]}});
  }
  return root.dump() + "\n";
}

std::string detections_to_json(const Dataset& dataset, DetectorKind which) {
  ordered_json root = ordered_json::array();
  for (const auto& img : dataset.images) {
    for (const auto& d : img.detections(which)) {
      root.push_back({{"image_id", img.image_id},
                      {"category_id", dataset.category_ids[d.class_id]},
                      {"bbox", {d.box.x, d.box.y, d.box.w, d.box.h}},
                      {"score", d.score}});
    }
  }
  return root.dump() + "\n";
}

void save_dataset(const Dataset& dataset, const std::string& gt_path,
                  const std::string& weak_path, const std::string& strong_path) {
  write_file(gt_path, annotations_to_json(dataset));
  write_file(weak_path, detections_to_json(dataset, DetectorKind::kWeak));
  write_file(strong_path, detections_to_json(dataset, DetectorKind::kStrong));
}

}  // namespace oric
