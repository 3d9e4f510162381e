#include "tgscrape/xlsx.hpp"

#include <fmt/format.h>

#include <map>

#include "tgscrape/error.hpp"
#include "tgscrape/zip.hpp"

namespace tgscrape::xlsx {
namespace {

constexpr std::string_view kXmlDecl = R"(<?xml version="1.0" encoding="UTF-8" standalone="yes"?>)"
                                      "\n";
constexpr std::string_view kMainNs = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
constexpr std::string_view kRelNs =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
constexpr std::string_view kPkgRelNs = "http://schemas.openxmlformats.org/package/2006/relationships";

// Element content. CR goes out as a character reference so parsers do not
// fold it into LF; other C0 controls cannot be represented in XML 1.0 and are
// dropped.
void append_cell_text(std::string& out, std::string_view text) {
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '\r')
      out += "&#13;";
    else if (u < 0x20 && c != '\t' && c != '\n')
      continue;
    else
      out += c;
  }
}

void append_attr(std::string& out, std::string_view text) {
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// ---------------------------------------------------------------------------
// Just enough XML to walk SpreadsheetML parts.

struct Token {
  enum class Kind { start, end, text, eof } kind = Kind::eof;
  std::string name;  // local name, namespace prefix dropped
  std::map<std::string, std::string> attrs;
  bool self_closing = false;
  std::string text;
};

class XmlReader {
 public:
  explicit XmlReader(std::string_view doc) : doc_(doc) {}

  Token next() {
    while (pos_ < doc_.size()) {
      if (doc_[pos_] != '<') return text_token();
      if (starts("<?")) {
        skip_past("?>");
      } else if (starts("<!--")) {
        skip_past("-->");
      } else if (starts("<![CDATA[")) {
        auto begin = pos_ + 9;
        skip_past("]]>");
        Token t;
        t.kind = Token::Kind::text;
        t.text = std::string(doc_.substr(begin, pos_ - 3 - begin));
        return t;
      } else if (starts("<!")) {
        skip_past(">");
      } else {
        return tag_token();
      }
    }
    return {};
  }

 private:
  bool starts(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

  void skip_past(std::string_view s) {
    auto at = doc_.find(s, pos_);
    if (at == std::string_view::npos) throw FormatError("xlsx: unterminated XML construct");
    pos_ = at + s.size();
  }

  static std::string local(std::string_view name) {
    auto colon = name.find(':');
    return std::string(colon == std::string_view::npos ? name : name.substr(colon + 1));
  }

  static bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  static std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
      if (s[i] != '&') {
        out += s[i++];
        continue;
      }
      auto semi = s.find(';', i);
      if (semi == std::string_view::npos) throw FormatError("xlsx: bad entity reference");
      auto ent = s.substr(i + 1, semi - i - 1);
      if (ent == "lt")
        out += '<';
      else if (ent == "gt")
        out += '>';
      else if (ent == "amp")
        out += '&';
      else if (ent == "quot")
        out += '"';
      else if (ent == "apos")
        out += '\'';
      else if (!ent.empty() && ent[0] == '#') {
        bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
        auto digits = std::string(ent.substr(hex ? 2 : 1));
        if (digits.empty()) throw FormatError("xlsx: bad character reference");
        append_utf8(out, static_cast<char32_t>(std::stoul(digits, nullptr, hex ? 16 : 10)));
      } else {
        throw FormatError(fmt::format("xlsx: unknown entity &{};", ent));
      }
      i = semi + 1;
    }
    return out;
  }

  Token text_token() {
    auto lt = doc_.find('<', pos_);
    if (lt == std::string_view::npos) lt = doc_.size();
    Token t;
    t.kind = Token::Kind::text;
    t.text = decode_entities(doc_.substr(pos_, lt - pos_));
    pos_ = lt;
    return t;
  }

  Token tag_token() {
    auto gt = pos_;
    char quote = 0;
    for (; gt < doc_.size(); ++gt) {
      char c = doc_[gt];
      if (quote) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '>') {
        break;
      }
    }
    if (gt >= doc_.size()) throw FormatError("xlsx: unterminated tag");
    auto body = doc_.substr(pos_ + 1, gt - pos_ - 1);
    pos_ = gt + 1;

    Token t;
    if (!body.empty() && body.front() == '/') {
      t.kind = Token::Kind::end;
      body.remove_prefix(1);
      while (!body.empty() && is_ws(body.back())) body.remove_suffix(1);
      t.name = local(body);
      return t;
    }
    t.kind = Token::Kind::start;
    if (!body.empty() && body.back() == '/') {
      t.self_closing = true;
      body.remove_suffix(1);
    }
    std::size_t i = 0;
    while (i < body.size() && !is_ws(body[i])) ++i;
    t.name = local(body.substr(0, i));
    while (i < body.size()) {
      while (i < body.size() && is_ws(body[i])) ++i;
      if (i >= body.size()) break;
      auto eq = body.find('=', i);
      if (eq == std::string_view::npos) throw FormatError("xlsx: malformed attribute");
      auto name = body.substr(i, eq - i);
      while (!name.empty() && is_ws(name.back())) name.remove_suffix(1);
      i = eq + 1;
      while (i < body.size() && is_ws(body[i])) ++i;
      if (i >= body.size() || (body[i] != '"' && body[i] != '\''))
        throw FormatError("xlsx: unquoted attribute value");
      char q = body[i];
      auto close = body.find(q, i + 1);
      if (close == std::string_view::npos) throw FormatError("xlsx: unterminated attribute value");
      t.attrs[std::string(name)] = decode_entities(body.substr(i + 1, close - i - 1));
      i = close + 1;
    }
    return t;
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
};

std::size_t column_index(std::string_view ref) {
  std::size_t idx = 0;
  std::size_t i = 0;
  for (; i < ref.size() && ref[i] >= 'A' && ref[i] <= 'Z'; ++i) idx = idx * 26 + (ref[i] - 'A' + 1);
  if (i == 0) throw FormatError(fmt::format("xlsx: bad cell reference '{}'", ref));
  return idx - 1;
}

std::size_t row_number(std::string_view ref) {
  std::size_t i = 0;
  while (i < ref.size() && ref[i] >= 'A' && ref[i] <= 'Z') ++i;
  return static_cast<std::size_t>(std::stoul(std::string(ref.substr(i))));
}

std::vector<std::string> read_shared_strings(std::string_view doc) {
  std::vector<std::string> out;
  XmlReader xml(doc);
  bool in_si = false, in_t = false;
  int skip_depth = 0;  // inside <rPh> phonetic runs
  std::string current;
  for (auto tok = xml.next(); tok.kind != Token::Kind::eof; tok = xml.next()) {
    if (tok.kind == Token::Kind::start) {
      if (tok.name == "si") {
        in_si = !tok.self_closing;
        current.clear();
        if (tok.self_closing) out.emplace_back();
      } else if (tok.name == "rPh" && !tok.self_closing) {
        ++skip_depth;
      } else if (tok.name == "t" && in_si && !skip_depth) {
        in_t = !tok.self_closing;
      }
    } else if (tok.kind == Token::Kind::end) {
      if (tok.name == "si") {
        out.push_back(current);
        in_si = false;
      } else if (tok.name == "rPh") {
        --skip_depth;
      } else if (tok.name == "t") {
        in_t = false;
      }
    } else if (tok.kind == Token::Kind::text && in_t) {
      current += tok.text;
    }
  }
  return out;
}

std::string first_sheet_path(const std::map<std::string, std::string>& parts) {
  auto wb = parts.find("xl/workbook.xml");
  auto rels = parts.find("xl/_rels/workbook.xml.rels");
  if (wb == parts.end()) throw FormatError("xlsx: missing xl/workbook.xml");
  std::string rid;
  {
    XmlReader xml(wb->second);
    for (auto tok = xml.next(); tok.kind != Token::Kind::eof; tok = xml.next()) {
      if (tok.kind == Token::Kind::start && tok.name == "sheet") {
        for (const auto& [k, v] : tok.attrs)
          if (k == "r:id" || (k.size() > 3 && k.substr(k.size() - 3) == ":id")) rid = v;
        break;
      }
    }
  }
  if (!rid.empty() && rels != parts.end()) {
    XmlReader xml(rels->second);
    for (auto tok = xml.next(); tok.kind != Token::Kind::eof; tok = xml.next()) {
      if (tok.kind == Token::Kind::start && tok.name == "Relationship" && tok.attrs["Id"] == rid) {
        auto target = tok.attrs["Target"];
        if (!target.empty() && target.front() == '/') return target.substr(1);
        return "xl/" + target;
      }
    }
  }
  return "xl/worksheets/sheet1.xml";
}

}  // namespace

std::string column_letters(std::size_t index) {
  std::string s;
  ++index;
  while (index > 0) {
    auto rem = (index - 1) % 26;
    s.insert(s.begin(), static_cast<char>('A' + rem));
    index = (index - 1) / 26;
  }
  return s;
}

std::string write_workbook(const Sheet& sheet, std::string_view sheet_name) {
  std::string content_types = std::string(kXmlDecl) +
      R"(<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">)"
      R"(<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>)"
      R"(<Default Extension="xml" ContentType="application/xml"/>)"
      R"(<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>)"
      R"(<Override PartName="/xl/worksheets/sheet1.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>)"
      R"(<Override PartName="/xl/styles.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml"/>)"
      R"(</Types>)";

  std::string root_rels = fmt::format(
      R"({}<Relationships xmlns="{}"><Relationship Id="rId1" Type="{}/officeDocument" Target="xl/workbook.xml"/></Relationships>)",
      kXmlDecl, kPkgRelNs, kRelNs);

  std::string workbook = fmt::format(R"({}<workbook xmlns="{}" xmlns:r="{}"><sheets><sheet name=")",
                                     kXmlDecl, kMainNs, kRelNs);
  append_attr(workbook, sheet_name);
  workbook += R"(" sheetId="1" r:id="rId1"/></sheets></workbook>)";

  std::string workbook_rels = fmt::format(
      R"({0}<Relationships xmlns="{1}">)"
      R"(<Relationship Id="rId1" Type="{2}/worksheet" Target="worksheets/sheet1.xml"/>)"
      R"(<Relationship Id="rId2" Type="{2}/styles" Target="styles.xml"/>)"
      R"(</Relationships>)",
      kXmlDecl, kPkgRelNs, kRelNs);

  std::string styles = fmt::format(
      R"({}<styleSheet xmlns="{}">)"
      R"(<fonts count="1"><font><sz val="11"/><name val="Calibri"/></font></fonts>)"
      R"(<fills count="2"><fill><patternFill patternType="none"/></fill><fill><patternFill patternType="gray125"/></fill></fills>)"
      R"(<borders count="1"><border><left/><right/><top/><bottom/><diagonal/></border></borders>)"
      R"(<cellStyleXfs count="1"><xf numFmtId="0" fontId="0" fillId="0" borderId="0"/></cellStyleXfs>)"
      R"(<cellXfs count="1"><xf numFmtId="0" fontId="0" fillId="0" borderId="0" xfId="0"/></cellXfs>)"
      R"(<cellStyles count="1"><cellStyle name="Normal" xfId="0" builtinId="0"/></cellStyles>)"
      R"(</styleSheet>)",
      kXmlDecl, kMainNs);

  std::string ws = fmt::format(R"({}<worksheet xmlns="{}"><sheetData>)", kXmlDecl, kMainNs);
  for (std::size_t r = 0; r < sheet.rows.size(); ++r) {
    ws += fmt::format(R"(<row r="{}">)", r + 1);
    const auto& row = sheet.rows[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c]) continue;
      auto ref = column_letters(c) + std::to_string(r + 1);
      if (row[c]->kind == Cell::Kind::number) {
        ws += fmt::format(R"(<c r="{}"><v>{}</v></c>)", ref, row[c]->value);
      } else {
        ws += fmt::format(R"(<c r="{}" t="inlineStr"><is><t xml:space="preserve">)", ref);
        append_cell_text(ws, row[c]->value);
        ws += "</t></is></c>";
      }
    }
    ws += "</row>";
  }
  ws += "</sheetData></worksheet>";

  return zip::write_archive({{"[Content_Types].xml", content_types},
                             {"_rels/.rels", root_rels},
                             {"xl/workbook.xml", workbook},
                             {"xl/_rels/workbook.xml.rels", workbook_rels},
                             {"xl/styles.xml", styles},
                             {"xl/worksheets/sheet1.xml", ws}});
}

Sheet read_workbook(std::string_view image) {
  const auto parts = zip::read_archive(image);
  std::vector<std::string> shared;
  if (auto it = parts.find("xl/sharedStrings.xml"); it != parts.end())
    shared = read_shared_strings(it->second);

  const auto sheet_path = first_sheet_path(parts);
  auto it = parts.find(sheet_path);
  if (it == parts.end()) throw FormatError(fmt::format("xlsx: missing worksheet {}", sheet_path));

  Sheet sheet;
  XmlReader xml(it->second);
  std::size_t row_idx = 0;
  std::size_t next_col = 0;
  // Current cell state.
  bool in_cell = false, in_value = false, in_text = false;
  std::size_t cell_col = 0;
  std::string cell_type;
  std::string value, text;

  for (auto tok = xml.next(); tok.kind != Token::Kind::eof; tok = xml.next()) {
    if (tok.kind == Token::Kind::start) {
      if (tok.name == "row") {
        auto r = tok.attrs.find("r");
        row_idx = r != tok.attrs.end() ? std::stoul(r->second) : sheet.rows.size() + 1;
        if (row_idx == 0) throw FormatError("xlsx: row number 0");
        if (sheet.rows.size() < row_idx) sheet.rows.resize(row_idx);
        next_col = 0;
      } else if (tok.name == "c") {
        auto r = tok.attrs.find("r");
        cell_col = r != tok.attrs.end() ? column_index(r->second) : next_col;
        if (r != tok.attrs.end() && row_number(r->second) != row_idx)
          throw FormatError(fmt::format("xlsx: cell {} outside row {}", r->second, row_idx));
        next_col = cell_col + 1;
        auto t = tok.attrs.find("t");
        cell_type = t != tok.attrs.end() ? t->second : "n";
        value.clear();
        text.clear();
        in_cell = !tok.self_closing;
      } else if (tok.name == "v" && in_cell) {
        in_value = !tok.self_closing;
      } else if (tok.name == "t" && in_cell) {
        in_text = !tok.self_closing;
      }
    } else if (tok.kind == Token::Kind::text) {
      if (in_value) value += tok.text;
      if (in_text) text += tok.text;
    } else if (tok.kind == Token::Kind::end) {
      if (tok.name == "v") {
        in_value = false;
      } else if (tok.name == "t") {
        in_text = false;
      } else if (tok.name == "c" && in_cell) {
        in_cell = false;
        if (row_idx == 0) throw FormatError("xlsx: cell outside a row");
        auto& row = sheet.rows[row_idx - 1];
        if (row.size() <= cell_col) row.resize(cell_col + 1);
        Cell cell;
        if (cell_type == "inlineStr") {
          cell.value = text;
        } else if (cell_type == "s") {
          auto idx = std::stoul(value);
          if (idx >= shared.size()) throw FormatError("xlsx: shared string index out of range");
          cell.value = shared[idx];
        } else if (cell_type == "str") {
          cell.value = value;
        } else if (cell_type == "b") {
          cell.value = value == "1" ? "True" : "False";
        } else {
          cell.kind = Cell::Kind::number;
          cell.value = value;
        }
        row[cell_col] = std::move(cell);
      }
    }
  }
  return sheet;
}

}  // namespace tgscrape::xlsx
