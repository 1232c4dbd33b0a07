#include "xml_mini.hpp"

#include <cctype>

#include "vjdet/error.hpp"

namespace vjdet::xmlmini {

namespace {

constexpr std::size_t kMaxDepth = 200;

struct Cursor {
  std::string_view in;
  std::size_t pos = 0;

  bool eof() const { return pos >= in.size(); }
  char peek(std::size_t ahead = 0) const { return pos + ahead < in.size() ? in[pos + ahead] : '\0'; }
  bool starts_with(std::string_view s) const { return in.substr(pos, s.size()) == s; }

  [[noreturn]] void fail(const std::string& what) const {
    raise(Errc::MalformedXml, what + " at byte " + std::to_string(pos));
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(in[pos]))) ++pos;
  }

  /// Advances past `close`, or fails at EOF.
  void skip_until(std::string_view close, const char* what) {
    const std::size_t found = in.find(close, pos);
    if (found == std::string_view::npos) fail(std::string("unterminated ") + what);
    pos = found + close.size();
  }
};

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' || c == '.';
}

std::string read_name(Cursor& c) {
  if (c.eof() || !is_name_start(c.peek())) c.fail("expected name");
  const std::size_t start = c.pos;
  while (!c.eof() && is_name_char(c.peek())) ++c.pos;
  return std::string(c.in.substr(start, c.pos - start));
}

void append_entity(Cursor& c, std::string& out) {
  // c.pos sits on '&'.
  const std::size_t semi = c.in.find(';', c.pos);
  if (semi == std::string_view::npos || semi - c.pos > 12) c.fail("unterminated entity");
  const std::string_view ent = c.in.substr(c.pos + 1, semi - c.pos - 1);
  if (ent == "lt") out += '<';
  else if (ent == "gt") out += '>';
  else if (ent == "amp") out += '&';
  else if (ent == "quot") out += '"';
  else if (ent == "apos") out += '\'';
  else if (!ent.empty() && ent[0] == '#') {
    long code = 0;
    bool ok = false;
    std::size_t i = 1;
    int base = 10;
    if (i < ent.size() && (ent[i] == 'x' || ent[i] == 'X')) {
      base = 16;
      ++i;
    }
    for (; i < ent.size(); ++i) {
      const char ch = ent[i];
      int digit;
      if (std::isdigit(static_cast<unsigned char>(ch))) digit = ch - '0';
      else if (base == 16 && ch >= 'a' && ch <= 'f') digit = ch - 'a' + 10;
      else if (base == 16 && ch >= 'A' && ch <= 'F') digit = ch - 'A' + 10;
      else { ok = false; break; }
      code = code * base + digit;
      ok = true;
      if (code > 0x10FFFF) c.fail("character reference out of range");
    }
    if (!ok) c.fail("bad character reference");
    // UTF-8 encode
    if (code < 0x80) {
      out += static_cast<char>(code);
    } else if (code < 0x800) {
      out += static_cast<char>(0xC0 | (code >> 6));
      out += static_cast<char>(0x80 | (code & 0x3F));
    } else if (code < 0x10000) {
      out += static_cast<char>(0xE0 | (code >> 12));
      out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (code & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (code >> 18));
      out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (code & 0x3F));
    }
  } else {
    c.fail("unknown entity");
  }
  c.pos = semi + 1;
}

std::string read_attribute_value(Cursor& c) {
  if (c.peek() != '"' && c.peek() != '\'') c.fail("expected quoted attribute value");
  const char quote = c.peek();
  ++c.pos;
  std::string value;
  while (!c.eof() && c.peek() != quote) {
    if (c.peek() == '&') append_entity(c, value);
    else value += c.in[c.pos++];
  }
  if (c.eof()) c.fail("unterminated attribute value");
  ++c.pos;
  return value;
}

/// Parses attributes and the tag terminator. Returns true for self-closing.
bool read_tag_rest(Cursor& c, Element& el) {
  while (true) {
    c.skip_ws();
    if (c.eof()) c.fail("unterminated tag");
    if (c.peek() == '>') {
      ++c.pos;
      return false;
    }
    if (c.peek() == '/' && c.peek(1) == '>') {
      c.pos += 2;
      return true;
    }
    std::string attr = read_name(c);
    c.skip_ws();
    if (c.peek() != '=') c.fail("expected '=' after attribute name");
    ++c.pos;
    c.skip_ws();
    el.attributes.emplace_back(std::move(attr), read_attribute_value(c));
  }
}

}  // namespace

Element parse(std::string_view bytes) {
  Cursor c{bytes};
  // UTF-8 BOM
  if (c.starts_with("\xEF\xBB\xBF")) c.pos += 3;

  std::vector<Element> stack;
  bool have_root = false;
  Element root;

  while (true) {
    if (stack.empty()) {
      c.skip_ws();
      if (c.eof()) break;
      if (c.peek() != '<') c.fail("text outside the root element");
    } else if (c.eof()) {
      c.fail("unterminated element <" + stack.back().name + ">");
    }

    if (c.peek() != '<') {
      // Text content of the innermost open element.
      std::string& text = stack.back().text;
      while (!c.eof() && c.peek() != '<') {
        if (c.peek() == '&') append_entity(c, text);
        else text += c.in[c.pos++];
      }
      continue;
    }

    if (c.starts_with("<?")) {
      c.pos += 2;
      c.skip_until("?>", "processing instruction");
      continue;
    }
    if (c.starts_with("<!--")) {
      c.pos += 4;
      c.skip_until("-->", "comment");
      continue;
    }
    if (c.starts_with("<![CDATA[")) {
      if (stack.empty()) c.fail("CDATA outside the root element");
      c.pos += 9;
      const std::size_t end = c.in.find("]]>", c.pos);
      if (end == std::string_view::npos) c.fail("unterminated CDATA");
      stack.back().text.append(c.in.substr(c.pos, end - c.pos));
      c.pos = end + 3;
      continue;
    }
    if (c.starts_with("<!")) {
      c.pos += 2;
      c.skip_until(">", "declaration");
      continue;
    }
    if (c.starts_with("</")) {
      c.pos += 2;
      c.skip_ws();
      const std::string name = read_name(c);
      c.skip_ws();
      if (c.peek() != '>') c.fail("malformed closing tag");
      ++c.pos;
      if (stack.empty()) c.fail("closing tag without open element");
      if (stack.back().name != name)
        c.fail("mismatched closing tag </" + name + "> for <" + stack.back().name + ">");
      Element done = std::move(stack.back());
      stack.pop_back();
      if (stack.empty()) {
        if (have_root) c.fail("multiple root elements");
        root = std::move(done);
        have_root = true;
      } else {
        stack.back().children.push_back(std::move(done));
      }
      continue;
    }

    // Opening tag.
    ++c.pos;
    if (stack.empty() && have_root) c.fail("content after the root element");
    Element el;
    el.name = read_name(c);
    const bool self_closing = read_tag_rest(c, el);
    if (self_closing) {
      if (stack.empty()) {
        if (have_root) c.fail("multiple root elements");
        root = std::move(el);
        have_root = true;
      } else {
        stack.back().children.push_back(std::move(el));
      }
    } else {
      if (stack.size() >= kMaxDepth) c.fail("element nesting too deep");
      stack.push_back(std::move(el));
    }
  }

  if (!have_root) raise(Errc::MalformedXml, "document has no root element");
  return root;
}

}  // namespace vjdet::xmlmini
