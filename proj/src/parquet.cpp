#include "tgscrape/parquet.hpp"

#include <fmt/format.h>

#include <cstring>
#include <limits>

#include "tgscrape/error.hpp"

namespace tgscrape::parquet {
namespace {

constexpr std::string_view kMagic = "PAR1";

// parquet.thrift enum values
enum PhysicalType : std::int32_t { kInt64 = 2, kByteArray = 6 };
enum Repetition : std::int32_t { kRequired = 0, kOptional = 1 };
enum Encoding : std::int32_t { kPlain = 0, kRle = 3 };
enum PageType : std::int32_t { kDataPage = 0 };
constexpr std::int32_t kConvertedUtf8 = 0;
constexpr std::int32_t kUncompressed = 0;

// Thrift compact protocol type ids
enum CType : std::uint8_t {
  kStop = 0,
  kTrue = 1,
  kFalse = 2,
  kByte = 3,
  kI16 = 4,
  kI32 = 5,
  kI64 = 6,
  kDouble = 7,
  kBinary = 8,
  kList = 9,
  kSet = 10,
  kMap = 11,
  kStruct = 12,
};

// ---------------------------------------------------------------------------
// Compact protocol writer

class CompactWriter {
 public:
  std::string& buffer() { return out_; }

  void begin_struct() {
    last_.push_back(last_id_);
    last_id_ = 0;
  }
  void end_struct() {
    out_ += static_cast<char>(kStop);
    last_id_ = last_.back();
    last_.pop_back();
  }

  void field_header(std::int16_t id, CType type) {
    auto delta = id - last_id_;
    if (delta > 0 && delta <= 15) {
      out_ += static_cast<char>((delta << 4) | type);
    } else {
      out_ += static_cast<char>(type);
      varint(zigzag(id));
    }
    last_id_ = id;
  }

  void i32(std::int16_t id, std::int32_t v) {
    field_header(id, kI32);
    varint(zigzag(v));
  }
  void i64(std::int16_t id, std::int64_t v) {
    field_header(id, kI64);
    varint(zigzag(v));
  }
  void binary(std::int16_t id, std::string_view v) {
    field_header(id, kBinary);
    raw_binary(v);
  }
  void struct_field(std::int16_t id) {
    field_header(id, kStruct);
    begin_struct();
  }
  void list_field(std::int16_t id, CType elem, std::size_t size) {
    field_header(id, kList);
    list_header(elem, size);
  }

  void list_header(CType elem, std::size_t size) {
    if (size < 15) {
      out_ += static_cast<char>((size << 4) | elem);
    } else {
      out_ += static_cast<char>(0xF0 | elem);
      varint(size);
    }
  }
  void raw_i32(std::int32_t v) { varint(zigzag(v)); }
  void raw_binary(std::string_view v) {
    varint(v.size());
    out_ += v;
  }

 private:
  static std::uint64_t zigzag(std::int64_t v) {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
  }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      out_ += static_cast<char>((v & 0x7F) | 0x80);
      v >>= 7;
    }
    out_ += static_cast<char>(v);
  }

  std::string out_;
  std::int16_t last_id_ = 0;
  std::vector<std::int16_t> last_;
};

// ---------------------------------------------------------------------------
// Compact protocol reader

class CompactReader {
 public:
  CompactReader(std::string_view buf, std::size_t pos = 0) : buf_(buf), pos_(pos) {}

  std::size_t position() const { return pos_; }

  struct FieldHead {
    std::int16_t id = 0;
    std::uint8_t type = kStop;
  };

  void begin_struct() {
    last_.push_back(last_id_);
    last_id_ = 0;
  }
  void end_struct() {
    last_id_ = last_.back();
    last_.pop_back();
  }

  FieldHead field() {
    auto b = byte();
    FieldHead h;
    h.type = b & 0x0F;
    if (h.type == kStop) return h;
    auto delta = b >> 4;
    h.id = delta ? static_cast<std::int16_t>(last_id_ + delta)
                 : static_cast<std::int16_t>(unzigzag(varint()));
    last_id_ = h.id;
    return h;
  }

  std::int64_t integer() { return unzigzag(varint()); }

  std::string_view binary() {
    auto n = varint();
    if (n > buf_.size() - pos_) throw FormatError("parquet: truncated metadata string");
    auto v = buf_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  std::pair<std::uint8_t, std::size_t> list_header() {
    auto b = byte();
    std::size_t size = b >> 4;
    if (size == 15) size = varint();
    return {static_cast<std::uint8_t>(b & 0x0F), size};
  }

  void skip(std::uint8_t type) {
    switch (type) {
      case kTrue:
      case kFalse: return;
      case kByte: byte(); return;
      case kI16:
      case kI32:
      case kI64: varint(); return;
      case kDouble: advance(8); return;
      case kBinary: binary(); return;
      case kList:
      case kSet: {
        auto [elem, n] = list_header();
        for (std::size_t i = 0; i < n; ++i) skip_elem(elem);
        return;
      }
      case kMap: {
        auto n = varint();
        if (n == 0) return;
        auto kv = byte();
        for (std::size_t i = 0; i < n; ++i) {
          skip_elem(kv >> 4);
          skip_elem(kv & 0x0F);
        }
        return;
      }
      case kStruct: {
        begin_struct();
        for (auto h = field(); h.type != kStop; h = field()) skip(h.type);
        end_struct();
        return;
      }
      default: throw FormatError(fmt::format("parquet: unknown thrift type {}", type));
    }
  }

 private:
  // Bools inside containers occupy a byte.
  void skip_elem(std::uint8_t type) {
    if (type == kTrue || type == kFalse)
      byte();
    else
      skip(type);
  }

  std::uint8_t byte() {
    if (pos_ >= buf_.size()) throw FormatError("parquet: truncated metadata");
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  void advance(std::size_t n) {
    if (n > buf_.size() - pos_) throw FormatError("parquet: truncated metadata");
    pos_ += n;
  }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      auto b = byte();
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if (!(b & 0x80)) return v;
    }
    throw FormatError("parquet: varint too long");
  }
  static std::int64_t unzigzag(std::uint64_t v) {
    return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
  }

  std::string_view buf_;
  std::size_t pos_;
  std::int16_t last_id_ = 0;
  std::vector<std::int16_t> last_;
};

// ---------------------------------------------------------------------------
// Page encoding

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(std::string_view s, std::size_t at) {
  if (at + 4 > s.size()) throw FormatError("parquet: truncated page");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = v << 8 | static_cast<unsigned char>(s[at + i]);
  return v;
}

void put_uvarint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out += static_cast<char>((v & 0x7F) | 0x80);
    v >>= 7;
  }
  out += static_cast<char>(v);
}

// Definition levels (bit width 1) as RLE runs of the hybrid encoding,
// prefixed with their byte length.
std::string encode_def_levels(const std::vector<std::optional<std::string>>& values) {
  std::string runs;
  std::size_t i = 0;
  while (i < values.size()) {
    bool present = values[i].has_value();
    std::size_t j = i;
    while (j < values.size() && values[j].has_value() == present) ++j;
    put_uvarint(runs, static_cast<std::uint64_t>(j - i) << 1);
    runs += static_cast<char>(present ? 1 : 0);
    i = j;
  }
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(runs.size()));
  out += runs;
  return out;
}

std::vector<std::uint8_t> decode_def_levels(std::string_view data, std::size_t count) {
  std::vector<std::uint8_t> levels;
  levels.reserve(count);
  std::size_t pos = 0;
  auto uvarint = [&] {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (pos >= data.size()) throw FormatError("parquet: truncated definition levels");
      auto b = static_cast<std::uint8_t>(data[pos++]);
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if (!(b & 0x80)) return v;
    }
    throw FormatError("parquet: bad definition level run");
  };
  while (levels.size() < count) {
    auto header = uvarint();
    if (header & 1) {
      // Bit-packed groups of 8 values, one bit each.
      auto groups = header >> 1;
      for (std::uint64_t g = 0; g < groups; ++g) {
        if (pos >= data.size()) throw FormatError("parquet: truncated bit-packed run");
        auto byte = static_cast<std::uint8_t>(data[pos++]);
        for (int b = 0; b < 8 && levels.size() < count; ++b) levels.push_back((byte >> b) & 1);
      }
    } else {
      auto run = header >> 1;
      if (pos >= data.size()) throw FormatError("parquet: truncated RLE run");
      auto value = static_cast<std::uint8_t>(data[pos++]) & 1;
      for (std::uint64_t k = 0; k < run && levels.size() < count; ++k) levels.push_back(value);
    }
  }
  return levels;
}

struct ColumnLayout {
  std::string name;
  std::int32_t type;
  std::int32_t repetition;
};

ColumnLayout layout_of(const Column& c) {
  if (const auto* s = std::get_if<StringColumn>(&c)) return {s->name, kByteArray, kOptional};
  return {std::get<Int64Column>(c).name, kInt64, kRequired};
}

std::string encode_page_body(const Column& c) {
  std::string body;
  if (const auto* s = std::get_if<StringColumn>(&c)) {
    body = encode_def_levels(s->values);
    for (const auto& v : s->values) {
      if (!v) continue;
      if (v->size() > std::numeric_limits<std::uint32_t>::max())
        throw SinkError("parquet: value too large");
      put_u32(body, static_cast<std::uint32_t>(v->size()));
      body += *v;
    }
  } else {
    for (auto v : std::get<Int64Column>(c).values) {
      auto u = static_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) body += static_cast<char>((u >> (8 * i)) & 0xFF);
    }
  }
  return body;
}

std::size_t column_size(const Column& c) {
  return std::visit([](const auto& col) { return col.values.size(); }, c);
}

struct ChunkInfo {
  std::int64_t page_offset = 0;
  std::int64_t total_size = 0;
};

// ---------------------------------------------------------------------------
// Metadata reading

struct SchemaNode {
  std::string name;
  std::optional<std::int32_t> type;
  std::int32_t repetition = kRequired;
  std::int32_t num_children = 0;
};

struct ChunkMeta {
  std::int32_t type = -1;
  std::int32_t codec = 0;
  std::int64_t num_values = 0;
  std::int64_t data_page_offset = -1;
  std::optional<std::int64_t> dictionary_page_offset;
  std::int64_t total_compressed_size = 0;
};

struct RowGroupMeta {
  std::vector<ChunkMeta> chunks;
  std::int64_t num_rows = 0;
};

struct FileMeta {
  std::vector<SchemaNode> schema;
  std::int64_t num_rows = 0;
  std::vector<RowGroupMeta> row_groups;
};

SchemaNode read_schema_node(CompactReader& r) {
  SchemaNode n;
  r.begin_struct();
  for (auto h = r.field(); h.type != kStop; h = r.field()) {
    switch (h.id) {
      case 1: n.type = static_cast<std::int32_t>(r.integer()); break;
      case 3: n.repetition = static_cast<std::int32_t>(r.integer()); break;
      case 4: n.name = std::string(r.binary()); break;
      case 5: n.num_children = static_cast<std::int32_t>(r.integer()); break;
      default: r.skip(h.type);
    }
  }
  r.end_struct();
  return n;
}

ChunkMeta read_column_meta(CompactReader& r) {
  ChunkMeta m;
  r.begin_struct();
  for (auto h = r.field(); h.type != kStop; h = r.field()) {
    switch (h.id) {
      case 1: m.type = static_cast<std::int32_t>(r.integer()); break;
      case 4: m.codec = static_cast<std::int32_t>(r.integer()); break;
      case 5: m.num_values = r.integer(); break;
      case 7: m.total_compressed_size = r.integer(); break;
      case 9: m.data_page_offset = r.integer(); break;
      case 11: m.dictionary_page_offset = r.integer(); break;
      default: r.skip(h.type);
    }
  }
  r.end_struct();
  return m;
}

ChunkMeta read_column_chunk(CompactReader& r) {
  ChunkMeta m;
  bool have_meta = false;
  r.begin_struct();
  for (auto h = r.field(); h.type != kStop; h = r.field()) {
    if (h.id == 3 && h.type == kStruct) {
      m = read_column_meta(r);
      have_meta = true;
    } else {
      r.skip(h.type);
    }
  }
  r.end_struct();
  if (!have_meta) throw FormatError("parquet: column chunk without inline metadata");
  return m;
}

RowGroupMeta read_row_group(CompactReader& r) {
  RowGroupMeta g;
  r.begin_struct();
  for (auto h = r.field(); h.type != kStop; h = r.field()) {
    if (h.id == 1 && h.type == kList) {
      auto [elem, n] = r.list_header();
      for (std::size_t i = 0; i < n; ++i) g.chunks.push_back(read_column_chunk(r));
    } else if (h.id == 3) {
      g.num_rows = r.integer();
    } else {
      r.skip(h.type);
    }
  }
  r.end_struct();
  return g;
}

FileMeta read_file_meta(std::string_view buf) {
  FileMeta fm;
  CompactReader r(buf);
  r.begin_struct();
  for (auto h = r.field(); h.type != kStop; h = r.field()) {
    if (h.id == 2 && h.type == kList) {
      auto [elem, n] = r.list_header();
      for (std::size_t i = 0; i < n; ++i) fm.schema.push_back(read_schema_node(r));
    } else if (h.id == 3) {
      fm.num_rows = r.integer();
    } else if (h.id == 4 && h.type == kList) {
      auto [elem, n] = r.list_header();
      for (std::size_t i = 0; i < n; ++i) fm.row_groups.push_back(read_row_group(r));
    } else {
      r.skip(h.type);
    }
  }
  r.end_struct();
  return fm;
}

struct PageHead {
  std::int32_t type = -1;
  std::int32_t compressed_size = 0;
  std::int32_t num_values = 0;
  std::int32_t encoding = -1;
  std::int32_t def_encoding = -1;
  std::size_t header_size = 0;
};

PageHead read_page_header(std::string_view file, std::size_t offset) {
  PageHead p;
  CompactReader r(file, offset);
  r.begin_struct();
  for (auto h = r.field(); h.type != kStop; h = r.field()) {
    switch (h.id) {
      case 1: p.type = static_cast<std::int32_t>(r.integer()); break;
      case 3: p.compressed_size = static_cast<std::int32_t>(r.integer()); break;
      case 5:
        if (h.type != kStruct) {
          r.skip(h.type);
          break;
        }
        r.begin_struct();
        for (auto d = r.field(); d.type != kStop; d = r.field()) {
          switch (d.id) {
            case 1: p.num_values = static_cast<std::int32_t>(r.integer()); break;
            case 2: p.encoding = static_cast<std::int32_t>(r.integer()); break;
            case 3: p.def_encoding = static_cast<std::int32_t>(r.integer()); break;
            default: r.skip(d.type);
          }
        }
        r.end_struct();
        break;
      default: r.skip(h.type);
    }
  }
  r.end_struct();
  p.header_size = r.position() - offset;
  return p;
}

}  // namespace

std::size_t Table::num_rows() const { return columns.empty() ? 0 : column_size(columns.front()); }

const std::string& column_name(const Column& c) {
  return std::visit([](const auto& col) -> const std::string& { return col.name; }, c);
}

std::string write_table(const Table& table) {
  const auto rows = table.num_rows();
  for (const auto& c : table.columns)
    if (column_size(c) != rows)
      throw SinkError(fmt::format("parquet: column '{}' has {} values, expected {}", column_name(c),
                                  column_size(c), rows));

  std::string file(kMagic);
  std::vector<ChunkInfo> chunks;
  for (const auto& c : table.columns) {
    const auto body = encode_page_body(c);
    if (body.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
      throw SinkError(fmt::format("parquet: column '{}' exceeds the 2 GiB page limit", column_name(c)));
    CompactWriter h;
    h.begin_struct();
    h.i32(1, kDataPage);
    h.i32(2, static_cast<std::int32_t>(body.size()));
    h.i32(3, static_cast<std::int32_t>(body.size()));
    h.struct_field(5);
    h.i32(1, static_cast<std::int32_t>(rows));
    h.i32(2, kPlain);
    h.i32(3, kRle);
    h.i32(4, kRle);
    h.end_struct();
    h.end_struct();

    ChunkInfo info;
    info.page_offset = static_cast<std::int64_t>(file.size());
    info.total_size = static_cast<std::int64_t>(h.buffer().size() + body.size());
    file += h.buffer();
    file += body;
    chunks.push_back(info);
  }

  CompactWriter m;
  m.begin_struct();
  m.i32(1, 1);
  m.list_field(2, kStruct, table.columns.size() + 1);
  m.begin_struct();
  m.binary(4, "schema");
  m.i32(5, static_cast<std::int32_t>(table.columns.size()));
  m.end_struct();
  for (const auto& c : table.columns) {
    auto lay = layout_of(c);
    m.begin_struct();
    m.i32(1, lay.type);
    m.i32(3, lay.repetition);
    m.binary(4, lay.name);
    if (lay.type == kByteArray) {
      m.i32(6, kConvertedUtf8);
      m.struct_field(10);  // LogicalType
      m.struct_field(1);   // STRING
      m.end_struct();
      m.end_struct();
    }
    m.end_struct();
  }
  m.i64(3, static_cast<std::int64_t>(rows));

  std::int64_t total = 0;
  for (const auto& ch : chunks) total += ch.total_size;
  m.list_field(4, kStruct, 1);
  m.begin_struct();
  m.list_field(1, kStruct, table.columns.size());
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    auto lay = layout_of(table.columns[i]);
    const auto& ch = chunks[i];
    m.begin_struct();
    m.i64(2, ch.page_offset);
    m.struct_field(3);
    m.i32(1, lay.type);
    m.list_field(2, kI32, 2);
    m.raw_i32(kPlain);
    m.raw_i32(kRle);
    m.list_field(3, kBinary, 1);
    m.raw_binary(lay.name);
    m.i32(4, kUncompressed);
    m.i64(5, static_cast<std::int64_t>(rows));
    m.i64(6, ch.total_size);
    m.i64(7, ch.total_size);
    m.i64(9, ch.page_offset);
    m.end_struct();
    m.end_struct();
  }
  m.i64(2, total);
  m.i64(3, static_cast<std::int64_t>(rows));
  m.end_struct();
  m.binary(6, "tgscrape parquet writer");
  m.end_struct();

  file += m.buffer();
  put_u32(file, static_cast<std::uint32_t>(m.buffer().size()));
  file += kMagic;
  return file;
}

Table read_table(std::string_view image) {
  if (image.size() < 12 || image.substr(0, 4) != kMagic || image.substr(image.size() - 4) != kMagic)
    throw FormatError("parquet: missing PAR1 magic");
  const auto meta_len = get_u32(image, image.size() - 8);
  if (meta_len > image.size() - 12) throw FormatError("parquet: bad footer length");
  const auto meta = read_file_meta(image.substr(image.size() - 8 - meta_len, meta_len));

  if (meta.schema.empty()) throw FormatError("parquet: empty schema");
  const auto& root = meta.schema.front();
  if (static_cast<std::size_t>(root.num_children) != meta.schema.size() - 1)
    throw FormatError("parquet: nested schemas are not supported");

  Table table;
  for (std::size_t i = 1; i < meta.schema.size(); ++i) {
    const auto& node = meta.schema[i];
    if (node.type == kByteArray && node.repetition != 2)
      table.columns.emplace_back(StringColumn{node.name, {}});
    else if (node.type == kInt64 && node.repetition == kRequired)
      table.columns.emplace_back(Int64Column{node.name, {}});
    else
      throw FormatError(fmt::format("parquet: unsupported column '{}'", node.name));
  }

  for (const auto& group : meta.row_groups) {
    if (group.chunks.size() != table.columns.size())
      throw FormatError("parquet: row group column count mismatch");
    for (std::size_t c = 0; c < group.chunks.size(); ++c) {
      const auto& chunk = group.chunks[c];
      const auto& node = meta.schema[c + 1];
      if (chunk.codec != kUncompressed)
        throw FormatError(fmt::format("parquet: column '{}' is compressed (codec {})", node.name, chunk.codec));
      if (chunk.dictionary_page_offset)
        throw FormatError(fmt::format("parquet: column '{}' uses dictionary encoding", node.name));

      std::size_t offset = static_cast<std::size_t>(chunk.data_page_offset);
      std::int64_t seen = 0;
      while (seen < chunk.num_values) {
        if (offset >= image.size()) throw FormatError("parquet: page offset beyond file");
        auto page = read_page_header(image, offset);
        if (page.type != kDataPage)
          throw FormatError(fmt::format("parquet: column '{}' has unsupported page type {}", node.name, page.type));
        if (page.encoding != kPlain)
          throw FormatError(fmt::format("parquet: column '{}' has unsupported encoding {}", node.name, page.encoding));
        const auto body_at = offset + page.header_size;
        if (page.compressed_size < 0 || body_at + page.compressed_size > image.size())
          throw FormatError("parquet: truncated page");
        auto body = image.substr(body_at, page.compressed_size);
        const auto n = static_cast<std::size_t>(page.num_values);

        if (auto* s = std::get_if<StringColumn>(&table.columns[c])) {
          std::vector<std::uint8_t> levels(n, 1);
          std::size_t pos = 0;
          if (node.repetition == kOptional) {
            if (page.def_encoding != kRle)
              throw FormatError("parquet: unsupported definition level encoding");
            const auto len = get_u32(body, 0);
            if (4 + static_cast<std::size_t>(len) > body.size()) throw FormatError("parquet: truncated levels");
            levels = decode_def_levels(body.substr(4, len), n);
            pos = 4 + len;
          }
          for (auto level : levels) {
            if (!level) {
              s->values.emplace_back(std::nullopt);
              continue;
            }
            const auto len = get_u32(body, pos);
            if (pos + 4 + static_cast<std::size_t>(len) > body.size())
              throw FormatError("parquet: truncated byte array");
            s->values.emplace_back(std::string(body.substr(pos + 4, len)));
            pos += 4 + len;
          }
        } else {
          auto& ints = std::get<Int64Column>(table.columns[c]).values;
          if (body.size() < n * 8) throw FormatError("parquet: truncated INT64 page");
          for (std::size_t k = 0; k < n; ++k) {
            std::uint64_t u = 0;
            for (int b = 7; b >= 0; --b) u = u << 8 | static_cast<unsigned char>(body[k * 8 + b]);
            ints.push_back(static_cast<std::int64_t>(u));
          }
        }
        seen += page.num_values;
        offset = body_at + page.compressed_size;
      }
    }
  }
  for (const auto& c : table.columns)
    if (column_size(c) != static_cast<std::size_t>(meta.num_rows))
      throw FormatError(fmt::format("parquet: column '{}' row count mismatch", column_name(c)));
  return table;
}

}  // namespace tgscrape::parquet
