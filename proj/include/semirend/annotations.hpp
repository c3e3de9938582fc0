#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semirend/mask.hpp"

namespace semirend {

struct ImageInfo {
    std::size_t height = 0;
    std::size_t width = 0;
    std::string path;

    friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

// Ground-truth annotations. `polygons` runs parallel to `instances` and holds
// the source polygon when one is known (VIA input, synthetic data).
struct AnnotationSet {
    std::map<std::string, ImageInfo> images;
    std::vector<MaskInstance> instances;
    std::vector<std::optional<Polygon>> polygons;
    std::vector<std::string> warnings;
};

struct ViaOptions {
    std::string class_key = "class";
    bool strict = true;
    // Image sizes come from file_attributes "height"/"width" when present,
    // else from the image file under `image_dir`, else these defaults.
    std::string image_dir;
    std::size_t default_height = 480;
    std::size_t default_width = 480;
};

// VIA project export: either the full project (with "_via_img_metadata") or
// the bare per-file map. Only polygon regions are accepted.
AnnotationSet parse_via(const nlohmann::json& doc, const ViaOptions& options, const std::string& where = "via");
AnnotationSet load_via(const std::string& path, ViaOptions options);

// VIA project JSON for instances that carry a polygon. Throws InvalidInput
// for an instance without one.
nlohmann::json export_via(const AnnotationSet& set, const std::string& class_key = "class");

// Prediction files: a JSON array of
//   {"image_id", "class", "score", "bbox": [x, y, w, h], "mask": {"size": [H, W], "counts": [...]}}.
std::vector<MaskInstance> predictions_from_json(const nlohmann::json& doc, const std::string& where,
                                                bool strict = true, std::vector<std::string>* warnings = nullptr);
nlohmann::json predictions_to_json(std::span<const MaskInstance> instances);

// Canonical text: one compact object per line, keys sorted, shortest
// round-trip float formatting. Re-saving a loaded file is byte-identical.
std::string dump_predictions(std::span<const MaskInstance> instances);

std::vector<MaskInstance> load_predictions(const std::string& path, bool strict = true,
                                           std::vector<std::string>* warnings = nullptr);
void save_predictions(const std::string& path, std::span<const MaskInstance> instances);

// Reads a whole file and parses it as JSON; errors carry the path.
nlohmann::json read_json_file(const std::string& path);

}  // namespace semirend
