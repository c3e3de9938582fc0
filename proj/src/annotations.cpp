#include "semirend/annotations.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semirend/error.hpp"
#include "semirend/image_io.hpp"

namespace semirend {

using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path, std::string("malformed JSON: ") + e.what());
    }
}

namespace {

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char ch : key) {
        if (ch == '~') {
            out += "~0";
        } else if (ch == '/') {
            out += "~1";
        } else {
            out += ch;
        }
    }
    return out;
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + "/" + key, "missing field");
    return obj.at(key);
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ParseError(where, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!v[k].is_number()) throw ParseError(where + "/" + std::to_string(k), "expected a number");
        out.push_back(v[k].get<double>());
    }
    return out;
}

std::size_t positive_size(const json& v, const std::string& where) {
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > 0) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() > 0) return static_cast<std::size_t>(v.get<std::int64_t>());
    if (v.is_string()) {
        try {
            const long long n = std::stoll(v.get<std::string>());
            if (n > 0) return static_cast<std::size_t>(n);
        } catch (const std::exception&) {
        }
    }
    throw ParseError(where, "expected a positive integer");
}

// Class name of a VIA region: a plain string, or a checkbox/dropdown object
// with exactly one option set to true.
std::optional<std::string> region_class_name(const json& attrs, const std::string& key, const std::string& where) {
    if (!attrs.is_object() || !attrs.contains(key)) return std::nullopt;
    const json& v = attrs.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_object()) {
        std::optional<std::string> chosen;
        for (const auto& [name, flag] : v.items()) {
            if (flag.is_boolean() && flag.get<bool>()) {
                if (chosen) throw ParseError(where, "more than one class selected");
                chosen = name;
            }
        }
        return chosen;
    }
    throw ParseError(where, "class attribute must be a string");
}

}  // namespace

AnnotationSet parse_via(const json& doc, const ViaOptions& options, const std::string& where) {
    if (!doc.is_object()) throw ParseError(where, "VIA document must be a JSON object");
    const json* files = &doc;
    std::string base = where;
    if (doc.contains("_via_img_metadata")) {
        files = &doc.at("_via_img_metadata");
        base = where + "/_via_img_metadata";
        if (!files->is_object()) throw ParseError(base, "expected an object");
    }

    AnnotationSet set;
    for (const auto& [key, entry] : files->items()) {
        const std::string at = base + "/" + escape_pointer(key);
        if (!entry.is_object()) throw ParseError(at, "file entry must be an object");
        std::string filename = key;
        if (entry.contains("filename")) {
            if (!entry.at("filename").is_string()) throw ParseError(at + "/filename", "expected a string");
            filename = entry.at("filename").get<std::string>();
        }

        ImageInfo info;
        info.path = options.image_dir.empty() ? filename : (std::filesystem::path(options.image_dir) / filename).string();
        const json* fattrs = entry.contains("file_attributes") ? &entry.at("file_attributes") : nullptr;
        if (fattrs && fattrs->is_object() && fattrs->contains("height") && fattrs->contains("width")) {
            info.height = positive_size(fattrs->at("height"), at + "/file_attributes/height");
            info.width = positive_size(fattrs->at("width"), at + "/file_attributes/width");
        } else if (!options.image_dir.empty() && std::filesystem::exists(info.path)) {
            const GrayImage img = read_image(info.path);
            info.height = img.height;
            info.width = img.width;
        } else {
            info.height = options.default_height;
            info.width = options.default_width;
        }
        set.images[filename] = info;

        if (!entry.contains("regions")) continue;
        const json& regions = entry.at("regions");
        if (!regions.is_array()) throw ParseError(at + "/regions", "expected an array");
        for (std::size_t r = 0; r < regions.size(); ++r) {
            const std::string rat = at + "/regions/" + std::to_string(r);
            const json& shape = require(regions[r], "shape_attributes", rat);
            const json& name = require(shape, "name", rat + "/shape_attributes");
            if (!name.is_string() || name.get<std::string>() != "polygon") {
                throw UnsupportedShape(rat + "/shape_attributes/name: unsupported region shape " + name.dump() +
                                       " (only polygons are accepted)");
            }
            Polygon poly;
            poly.xs = number_list(require(shape, "all_points_x", rat + "/shape_attributes"),
                                  rat + "/shape_attributes/all_points_x");
            poly.ys = number_list(require(shape, "all_points_y", rat + "/shape_attributes"),
                                  rat + "/shape_attributes/all_points_y");
            if (poly.xs.size() != poly.ys.size()) {
                throw ParseError(rat + "/shape_attributes", "all_points_x and all_points_y differ in length");
            }
            if (poly.xs.size() < 3) throw ParseError(rat + "/shape_attributes", "polygon has fewer than 3 vertices");

            const json empty = json::object();
            const json& rattrs = regions[r].contains("region_attributes") ? regions[r].at("region_attributes") : empty;
            const auto cls_name = region_class_name(rattrs, options.class_key, rat + "/region_attributes/" +
                                                                                   options.class_key);
            const auto cls = cls_name ? parse_class(*cls_name) : std::nullopt;
            if (!cls) {
                const std::string msg = rat + "/region_attributes/" + options.class_key + ": unknown defect class '" +
                                        cls_name.value_or("") + "'";
                if (options.strict) throw UnknownClass(msg);
                set.warnings.push_back(msg + " (region skipped)");
                continue;
            }
            BinaryMask mask = polygon_to_mask(poly, info.height, info.width);
            set.instances.push_back(make_instance(filename, *cls, 1.0, std::move(mask)));
            set.polygons.emplace_back(std::move(poly));
        }
    }
    return set;
}

AnnotationSet load_via(const std::string& path, ViaOptions options) {
    if (options.image_dir.empty()) options.image_dir = std::filesystem::path(path).parent_path().string();
    return parse_via(read_json_file(path), options, path);
}

json export_via(const AnnotationSet& set, const std::string& class_key) {
    json files = json::object();
    for (const auto& [id, info] : set.images) {
        files[id + "-1"] = {{"filename", id},
                            {"size", -1},
                            {"regions", json::array()},
                            {"file_attributes", {{"height", info.height}, {"width", info.width}}}};
    }
    for (std::size_t k = 0; k < set.instances.size(); ++k) {
        const MaskInstance& inst = set.instances[k];
        if (k >= set.polygons.size() || !set.polygons[k]) {
            throw InvalidInput("instance " + std::to_string(k) + " has no source polygon to export");
        }
        const std::string key = inst.image_id + "-1";
        if (!files.contains(key)) throw InvalidInput("instance references unknown image '" + inst.image_id + "'");
        files[key]["regions"].push_back(
            {{"shape_attributes",
              {{"name", "polygon"}, {"all_points_x", set.polygons[k]->xs}, {"all_points_y", set.polygons[k]->ys}}},
             {"region_attributes", {{class_key, class_id(inst.class_id)}}}});
    }
    json classes = json::object();
    for (DefectClass c : kAllDefectClasses) classes[std::string(class_id(c))] = class_label(c);
    return {{"_via_settings", {{"project", {{"name", "semirend"}}}}},
            {"_via_img_metadata", files},
            {"_via_attributes",
             {{"region", {{class_key, {{"type", "dropdown"}, {"options", classes}}}}}, {"file", json::object()}}}};
}

std::vector<MaskInstance> predictions_from_json(const json& doc, const std::string& where, bool strict,
                                                std::vector<std::string>* warnings) {
    if (!doc.is_array()) throw ParseError(where, "predictions must be a JSON array");
    std::vector<MaskInstance> out;
    out.reserve(doc.size());
    for (std::size_t k = 0; k < doc.size(); ++k) {
        const std::string at = where + "/" + std::to_string(k);
        const json& obj = doc[k];
        if (!obj.is_object()) throw ParseError(at, "prediction must be an object");

        const json& id = require(obj, "image_id", at);
        if (!id.is_string()) throw ParseError(at + "/image_id", "expected a string");
        const json& cls_name = require(obj, "class", at);
        if (!cls_name.is_string()) throw ParseError(at + "/class", "expected a string");
        const auto cls = parse_class(cls_name.get<std::string>());
        if (!cls) {
            const std::string msg = at + "/class: unknown defect class '" + cls_name.get<std::string>() + "'";
            if (strict) throw UnknownClass(msg);
            if (warnings) warnings->push_back(msg + " (skipped)");
            continue;
        }
        const json& score = require(obj, "score", at);
        if (!score.is_number()) throw ParseError(at + "/score", "expected a number");
        const double s = score.get<double>();
        if (!(s >= 0.0 && s <= 1.0)) throw ParseError(at + "/score", "score must lie in [0, 1]");

        const auto box = number_list(require(obj, "bbox", at), at + "/bbox");
        if (box.size() != 4) throw ParseError(at + "/bbox", "expected [x, y, w, h]");
        if (!(box[2] >= 0.0) || !(box[3] >= 0.0)) throw ParseError(at + "/bbox", "negative box extent");

        const json& mask = require(obj, "mask", at);
        const json& size = require(mask, "size", at + "/mask");
        if (!size.is_array() || size.size() != 2) throw ParseError(at + "/mask/size", "expected [H, W]");
        const std::size_t h = positive_size(size[0], at + "/mask/size/0");
        const std::size_t w = positive_size(size[1], at + "/mask/size/1");
        const json& counts = require(mask, "counts", at + "/mask");
        if (!counts.is_array()) throw ParseError(at + "/mask/counts", "expected an array of run lengths");
        std::vector<std::uint32_t> runs;
        runs.reserve(counts.size());
        for (std::size_t r = 0; r < counts.size(); ++r) {
            if (!counts[r].is_number_unsigned() && !(counts[r].is_number_integer() && counts[r].get<std::int64_t>() >= 0)) {
                throw ParseError(at + "/mask/counts/" + std::to_string(r), "expected a non-negative integer");
            }
            runs.push_back(counts[r].get<std::uint32_t>());
        }
        MaskInstance inst;
        inst.image_id = id.get<std::string>();
        inst.class_id = *cls;
        inst.score = s;
        inst.bbox = {box[0], box[1], box[2], box[3]};
        try {
            inst.mask = BinaryMask::from_counts(h, w, std::move(runs));
        } catch (const CorruptMask& e) {
            throw ParseError(at + "/mask/counts", e.what());
        }
        out.push_back(std::move(inst));
    }
    return out;
}

json predictions_to_json(std::span<const MaskInstance> instances) {
    json arr = json::array();
    for (const MaskInstance& inst : instances) {
        arr.push_back({{"image_id", inst.image_id},
                       {"class", class_id(inst.class_id)},
                       {"score", inst.score},
                       {"bbox", {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h}},
                       {"mask", {{"size", {inst.mask.height(), inst.mask.width()}}, {"counts", inst.mask.counts()}}}});
    }
    return arr;
}

std::string dump_predictions(std::span<const MaskInstance> instances) {
    const json arr = predictions_to_json(instances);
    std::string out = "[";
    for (std::size_t k = 0; k < arr.size(); ++k) {
        out += k == 0 ? "\n" : ",\n";
        out += arr[k].dump();
    }
    out += arr.empty() ? "]\n" : "\n]\n";
    return out;
}

std::vector<MaskInstance> load_predictions(const std::string& path, bool strict, std::vector<std::string>* warnings) {
    return predictions_from_json(read_json_file(path), path, strict, warnings);
}

void save_predictions(const std::string& path, std::span<const MaskInstance> instances) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << dump_predictions(instances);
    if (!out) throw Error("failed writing " + path);
}

}  // namespace semirend
