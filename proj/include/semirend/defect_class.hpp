#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace semirend {

// The five line-space defect classes of the SEM defect dataset.
enum class DefectClass {
    thin_bridge,
    single_bridge,
    line_collapse,
    multi_bridge_horizontal,
    multi_bridge_non_horizontal,
};

inline constexpr std::array<DefectClass, 5> kAllDefectClasses{
    DefectClass::thin_bridge,
    DefectClass::single_bridge,
    DefectClass::line_collapse,
    DefectClass::multi_bridge_horizontal,
    DefectClass::multi_bridge_non_horizontal,
};

// Canonical identifier, e.g. "multi_bridge_horizontal".
std::string_view class_id(DefectClass c);

// Human-readable table label, e.g. "Multi bridge horizontal".
std::string_view class_label(DefectClass c);

// Accepts canonical ids and label spellings: case-insensitive, with spaces,
// hyphens and underscores interchangeable ("Single bridge", "single-bridge").
std::optional<DefectClass> parse_class(std::string_view name);

constexpr std::size_t class_index(DefectClass c) { return static_cast<std::size_t>(c); }

}  // namespace semirend
