#include "cfweave/classfile/jar.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "cfweave/error.hpp"

namespace cfweave::classfile {

struct JarEntry::Origin {
  Bytes local_record;    // local header, data and any descriptor, verbatim
  Bytes central_record;  // central directory header, verbatim
  Bytes data;            // uncompressed content as read
  std::uint16_t version_made_by, version_needed, flags, method, time, date;
  std::uint16_t internal_attr;
  std::uint32_t external_attr;
  Bytes local_extra, central_extra, entry_comment;
};

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::size_t kCentralOffsetField = 42;

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 2 > b.size()) throw ArchiveError("truncated archive");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return le16(b, at) | (std::uint32_t{le16(b, at + 2)} << 16);
}

struct LeWriter {
  Bytes out;
  void u16(std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(v & 0xFFFF);
    u16(v >> 16);
  }
  void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }
  void bytes(std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }
};

Bytes slice(std::span<const std::uint8_t> b, std::size_t at, std::size_t n) {
  if (at > b.size() || n > b.size() - at) throw ArchiveError("truncated archive");
  return Bytes(b.begin() + static_cast<std::ptrdiff_t>(at), b.begin() + static_cast<std::ptrdiff_t>(at + n));
}

Bytes inflate_raw(std::span<const std::uint8_t> in, std::size_t expected, const std::string& name) {
  Bytes out(expected + 1);  // one spare byte so an empty entry still has a buffer
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ArchiveError("inflateInit failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) throw ArchiveError("corrupt deflate data in " + name);
  out.resize(expected);
  return out;
}

Bytes deflate_raw(std::span<const std::uint8_t> in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw ArchiveError("deflateInit failed");
  Bytes out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw ArchiveError("deflate failed");
  return out;
}

std::uint32_t crc_of(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(crc32(crc32(0, nullptr, 0), b.data(), static_cast<uInt>(b.size())));
}

}  // namespace

Archive Archive::parse(std::span<const std::uint8_t> b) {
  if (b.size() < 22) throw ArchiveError("not a zip archive (too short)");
  std::size_t end = std::string::npos;
  const std::size_t lowest = b.size() >= 22 + 65535 ? b.size() - 22 - 65535 : 0;
  for (std::size_t p = b.size() - 22 + 1; p-- > lowest;) {
    if (le32(b, p) == kEndSig && p + 22 + le16(b, p + 20) == b.size()) {
      end = p;
      break;
    }
  }
  if (end == std::string::npos) throw ArchiveError("end of central directory not found");
  const std::uint16_t count = le16(b, end + 10);
  const std::uint32_t cd_size = le32(b, end + 12);
  const std::uint32_t cd_offset = le32(b, end + 16);
  if (count == 0xFFFF || cd_offset == 0xFFFFFFFF) throw ArchiveError("zip64 archives are not supported");
  if (le16(b, end + 4) != 0 || le16(b, end + 6) != 0) throw ArchiveError("multi-disk archives are not supported");
  if (std::size_t{cd_offset} + cd_size > end) throw ArchiveError("central directory out of bounds");

  Archive a;
  a.comment = slice(b, end + 22, le16(b, end + 20));

  struct Pending {
    std::shared_ptr<JarEntry::Origin> origin;
    std::string name;
    std::uint32_t offset, csize, usize, crc;
  };
  std::vector<Pending> pending;
  std::size_t p = cd_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (le32(b, p) != kCentralSig) throw ArchiveError("bad central directory header");
    auto o = std::make_shared<JarEntry::Origin>();
    o->version_made_by = le16(b, p + 4);
    o->version_needed = le16(b, p + 6);
    o->flags = le16(b, p + 8);
    o->method = le16(b, p + 10);
    o->time = le16(b, p + 12);
    o->date = le16(b, p + 14);
    const std::uint32_t crc = le32(b, p + 16);
    const std::uint32_t csize = le32(b, p + 20);
    const std::uint32_t usize = le32(b, p + 24);
    const std::uint16_t nlen = le16(b, p + 28), xlen = le16(b, p + 30), clen = le16(b, p + 32);
    o->internal_attr = le16(b, p + 36);
    o->external_attr = le32(b, p + 38);
    const std::uint32_t offset = le32(b, p + 42);
    const Bytes name = slice(b, p + 46, nlen);
    o->central_extra = slice(b, p + 46 + nlen, xlen);
    o->entry_comment = slice(b, p + 46 + nlen + xlen, clen);
    const std::size_t rec = 46u + nlen + xlen + clen;
    o->central_record = slice(b, p, rec);
    p += rec;
    if (csize == 0xFFFFFFFF || usize == 0xFFFFFFFF || offset == 0xFFFFFFFF)
      throw ArchiveError("zip64 entries are not supported");
    pending.push_back({o, std::string(name.begin(), name.end()), offset, csize, usize, crc});
  }
  if (p != std::size_t{cd_offset} + cd_size) throw ArchiveError("central directory size mismatch");

  // Each local record runs up to the next record (by offset) or the
  // central directory, so data descriptors and gaps travel with it.
  std::vector<std::uint32_t> starts;
  for (const auto& e : pending) starts.push_back(e.offset);
  std::sort(starts.begin(), starts.end());
  if (std::adjacent_find(starts.begin(), starts.end()) != starts.end())
    throw ArchiveError("two entries share one local header");
  const std::uint32_t first = starts.empty() ? cd_offset : starts.front();
  a.preamble = slice(b, 0, first);

  for (auto& e : pending) {
    auto next = std::upper_bound(starts.begin(), starts.end(), e.offset);
    const std::uint32_t stop = next == starts.end() ? cd_offset : *next;
    if (stop < e.offset || stop > cd_offset) throw ArchiveError("local header out of bounds in " + e.name);
    auto& o = *e.origin;
    o.local_record = slice(b, e.offset, stop - e.offset);
    if (le32(b, e.offset) != kLocalSig) throw ArchiveError("bad local header for " + e.name);
    const std::uint16_t nlen = le16(b, e.offset + 26), xlen = le16(b, e.offset + 28);
    o.local_extra = slice(b, e.offset + 30 + nlen, xlen);
    const std::size_t data_at = std::size_t{e.offset} + 30 + nlen + xlen;
    if (data_at + e.csize > stop) throw ArchiveError("entry data out of bounds in " + e.name);
    const auto raw = b.subspan(data_at, e.csize);
    if (o.method == 0) {
      if (e.csize != e.usize) throw ArchiveError("stored entry size mismatch in " + e.name);
      o.data.assign(raw.begin(), raw.end());
    } else if (o.method == 8) {
      o.data = inflate_raw(raw, e.usize, e.name);
    } else {
      throw ArchiveError("unsupported compression method " + std::to_string(o.method) + " in " + e.name);
    }
    if (crc_of(o.data) != e.crc) throw ArchiveError("CRC mismatch in " + e.name);
    a.entries.push_back(JarEntry{e.name, o.data, e.origin});
  }
  return a;
}

Bytes Archive::serialize() const {
  LeWriter w;
  w.bytes(preamble);
  LeWriter central;
  for (const auto& e : entries) {
    const auto offset = static_cast<std::uint32_t>(w.out.size());
    const auto* o = e.origin.get();
    if (o != nullptr && o->data == e.data) {
      w.bytes(o->local_record);
      Bytes rec = o->central_record;
      for (std::size_t k = 0; k < 4; ++k) rec[kCentralOffsetField + k] = static_cast<std::uint8_t>(offset >> (8 * k));
      central.bytes(rec);
      continue;
    }
    // Rewritten entry: keep the original metadata, drop the data descriptor.
    const std::uint16_t method = (o != nullptr && o->method == 0) || e.is_directory() ? 0 : 8;
    const Bytes payload = method == 8 ? deflate_raw(e.data) : e.data;
    const std::uint32_t crc = crc_of(e.data);
    const std::uint16_t flags = o != nullptr ? (o->flags & 0x0800) : 0x0800;
    const std::uint16_t needed = method == 8 ? 20 : 10;
    const std::uint16_t time = o != nullptr ? o->time : 0;
    const std::uint16_t date = o != nullptr ? o->date : (1 << 5) | 1;  // 1980-01-01
    const Bytes empty;
    const Bytes& lextra = o != nullptr ? o->local_extra : empty;
    const Bytes& cextra = o != nullptr ? o->central_extra : empty;
    const Bytes& ccomment = o != nullptr ? o->entry_comment : empty;

    w.u32(kLocalSig);
    w.u16(needed);
    w.u16(flags);
    w.u16(method);
    w.u16(time);
    w.u16(date);
    w.u32(crc);
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.u32(static_cast<std::uint32_t>(e.data.size()));
    w.u16(static_cast<std::uint32_t>(e.name.size()));
    w.u16(static_cast<std::uint32_t>(lextra.size()));
    w.bytes(e.name);
    w.bytes(lextra);
    w.bytes(payload);

    central.u32(kCentralSig);
    central.u16(o != nullptr ? o->version_made_by : 20);
    central.u16(needed);
    central.u16(flags);
    central.u16(method);
    central.u16(time);
    central.u16(date);
    central.u32(crc);
    central.u32(static_cast<std::uint32_t>(payload.size()));
    central.u32(static_cast<std::uint32_t>(e.data.size()));
    central.u16(static_cast<std::uint32_t>(e.name.size()));
    central.u16(static_cast<std::uint32_t>(cextra.size()));
    central.u16(static_cast<std::uint32_t>(ccomment.size()));
    central.u16(0);
    central.u16(o != nullptr ? o->internal_attr : 0);
    central.u32(o != nullptr ? o->external_attr : 0);
    central.u32(offset);
    central.bytes(e.name);
    central.bytes(cextra);
    central.bytes(ccomment);
  }
  if (w.out.size() > 0xFFFFFFFFu || entries.size() >= 0xFFFF) throw ArchiveError("archive too large for zip32");
  const auto cd_offset = static_cast<std::uint32_t>(w.out.size());
  w.bytes(central.out);
  w.u32(kEndSig);
  w.u16(0);
  w.u16(0);
  w.u16(static_cast<std::uint32_t>(entries.size()));
  w.u16(static_cast<std::uint32_t>(entries.size()));
  w.u32(static_cast<std::uint32_t>(central.out.size()));
  w.u32(cd_offset);
  w.u16(static_cast<std::uint32_t>(comment.size()));
  w.bytes(comment);
  return std::move(w.out);
}

Archive read_jar(const std::filesystem::path& path) { return Archive::parse(read_file(path)); }

void write_jar(const Archive& archive, const std::filesystem::path& path) { write_file(path, archive.serialize()); }

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cfweave::classfile
