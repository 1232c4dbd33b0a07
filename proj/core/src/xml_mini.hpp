#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vjdet::xmlmini {

/// Minimal XML element tree: names, attributes, text, children. Everything
/// the cascade file format needs, nothing more. parse() never crashes on
/// arbitrary bytes; malformed input raises Error(MalformedXml).
struct Element {
  std::string name;
  std::string text;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;

  const Element* child(std::string_view child_name) const {
    for (const Element& c : children)
      if (c.name == child_name) return &c;
    return nullptr;
  }

  const std::string* attribute(std::string_view attr_name) const {
    for (const auto& [k, v] : attributes)
      if (k == attr_name) return &v;
    return nullptr;
  }
};

/// Parses a complete document and returns its single root element.
Element parse(std::string_view bytes);

}  // namespace vjdet::xmlmini
