#include "semirend/defect_class.hpp"

#include <cctype>

namespace semirend {

std::string_view class_id(DefectClass c) {
    switch (c) {
        case DefectClass::thin_bridge: return "thin_bridge";
        case DefectClass::single_bridge: return "single_bridge";
        case DefectClass::line_collapse: return "line_collapse";
        case DefectClass::multi_bridge_horizontal: return "multi_bridge_horizontal";
        case DefectClass::multi_bridge_non_horizontal: return "multi_bridge_non_horizontal";
    }
    return "unknown";
}

std::string_view class_label(DefectClass c) {
    switch (c) {
        case DefectClass::thin_bridge: return "Thin bridge";
        case DefectClass::single_bridge: return "Single bridge";
        case DefectClass::line_collapse: return "Line collapse";
        case DefectClass::multi_bridge_horizontal: return "Multi bridge horizontal";
        case DefectClass::multi_bridge_non_horizontal: return "Multi bridge non-horizontal";
    }
    return "Unknown";
}

std::optional<DefectClass> parse_class(std::string_view name) {
    std::string key;
    key.reserve(name.size());
    for (char ch : name) {
        if (ch == ' ' || ch == '-' || ch == '_') {
            if (!key.empty() && key.back() != '_') key.push_back('_');
        } else {
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    while (!key.empty() && key.back() == '_') key.pop_back();
    for (DefectClass c : kAllDefectClasses) {
        if (key == class_id(c)) return c;
    }
    return std::nullopt;
}

}  // namespace semirend
