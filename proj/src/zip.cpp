#include "tgscrape/zip.hpp"

#include <fmt/format.h>
#include <zlib.h>

#include <limits>

#include "tgscrape/error.hpp"

namespace tgscrape::zip {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kStored = 0;
constexpr std::uint16_t kDeflated = 8;
// 1980-01-01 00:00:00, keeps output byte-identical across runs.
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;
constexpr std::uint16_t kDosTime = 0;

void put16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>(v >> 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint16_t get16(std::string_view s, std::size_t at) {
  if (at + 2 > s.size()) throw FormatError("zip: truncated archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) |
                                    static_cast<unsigned char>(s[at + 1]) << 8);
}

std::uint32_t get32(std::string_view s, std::size_t at) {
  if (at + 4 > s.size()) throw FormatError("zip: truncated archive");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = v << 8 | static_cast<unsigned char>(s[at + i]);
  return v;
}

std::uint32_t crc_of(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < data.size()) {
    auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + off), n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string deflate_raw(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw SinkError("zip: deflateInit2 failed");
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw SinkError("zip: deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::string inflate_raw(std::string_view data, std::size_t expected) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) throw FormatError("zip: inflateInit2 failed");
  std::string out(expected, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) throw FormatError("zip: corrupt deflate stream");
  return out;
}

}  // namespace

std::string write_archive(const std::vector<Entry>& entries) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    auto packed = deflate_raw(e.data);
    if (e.data.size() >= kMax || packed.size() >= kMax || out.size() >= kMax)
      throw SinkError("zip: member exceeds 4 GiB (ZIP64 not supported)");
    const auto crc = crc_of(e.data);
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalSig);
    put16(out, 20);
    put16(out, 0);
    put16(out, kDeflated);
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(e.data.size()));
    put16(out, static_cast<std::uint16_t>(e.name.size()));
    put16(out, 0);
    out += e.name;
    out += packed;

    put32(central, kCentralSig);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, kDeflated);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(e.data.size()));
    put16(central, static_cast<std::uint16_t>(e.name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += e.name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::map<std::string, std::string> read_archive(std::string_view image) {
  if (image.size() < 22) throw FormatError("zip: file too small");
  // The end record sits in the last 22 + 65535 bytes.
  std::size_t end = std::string_view::npos;
  std::size_t lowest = image.size() > 22 + 65535 ? image.size() - 22 - 65535 : 0;
  for (std::size_t i = image.size() - 22 + 1; i-- > lowest;) {
    if (get32(image, i) == kEndSig) {
      end = i;
      break;
    }
  }
  if (end == std::string_view::npos) throw FormatError("zip: end of central directory not found");

  const std::size_t count = get16(image, end + 10);
  std::size_t pos = get32(image, end + 16);
  std::map<std::string, std::string> members;
  for (std::size_t i = 0; i < count; ++i) {
    if (get32(image, pos) != kCentralSig) throw FormatError("zip: bad central directory entry");
    const auto method = get16(image, pos + 10);
    const auto crc = get32(image, pos + 16);
    const std::size_t csize = get32(image, pos + 20);
    const std::size_t usize = get32(image, pos + 24);
    const std::size_t name_len = get16(image, pos + 28);
    const std::size_t extra_len = get16(image, pos + 30);
    const std::size_t comment_len = get16(image, pos + 32);
    const std::size_t local = get32(image, pos + 42);
    if (pos + 46 + name_len > image.size()) throw FormatError("zip: truncated archive");
    std::string name(image.substr(pos + 46, name_len));
    pos += 46 + name_len + extra_len + comment_len;

    if (get32(image, local) != kLocalSig) throw FormatError("zip: bad local header");
    const std::size_t data_at = local + 30 + get16(image, local + 26) + get16(image, local + 28);
    if (data_at + csize > image.size()) throw FormatError("zip: truncated member " + name);
    auto raw = image.substr(data_at, csize);

    std::string data;
    if (method == kStored)
      data = std::string(raw);
    else if (method == kDeflated)
      data = inflate_raw(raw, usize);
    else
      throw FormatError(fmt::format("zip: unsupported compression method {} for {}", method, name));
    if (crc_of(data) != crc) throw FormatError("zip: checksum mismatch in " + name);
    members.emplace(std::move(name), std::move(data));
  }
  return members;
}

}  // namespace tgscrape::zip
