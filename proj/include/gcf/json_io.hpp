#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gcf {

// 17-significant-digit decimal form; round-trips IEEE doubles exactly.
// Non-finite values map to "null" so documents stay valid JSON.
std::string num17(double x);

std::string json_escape(std::string_view s);

// Flat JSON document builder with insertion-ordered keys and numbers emitted
// through num17, so identical inputs produce byte-identical documents.
class JsonDoc {
  public:
    JsonDoc& put(std::string_view key, double v);
    JsonDoc& put(std::string_view key, int v);
    JsonDoc& put(std::string_view key, long v);
    JsonDoc& put(std::string_view key, std::size_t v);
    JsonDoc& put(std::string_view key, bool v);
    JsonDoc& put(std::string_view key, std::string_view v);
    JsonDoc& put(std::string_view key, const char* v) { return put(key, std::string_view(v)); }
    JsonDoc& put(std::string_view key, const std::vector<double>& v);
    JsonDoc& put_strings(std::string_view key, const std::vector<std::string>& v);
    JsonDoc& put_pairs(std::string_view key, const std::vector<std::array<double, 2>>& v);
    // nested document or array, inserted verbatim
    JsonDoc& put_raw(std::string_view key, std::string_view raw);

    std::string dump() const;         // pretty, one key per line, trailing newline
    std::string dump_inline() const;  // single line, for nesting via put_raw

  private:
    std::vector<std::pair<std::string, std::string>> items_;
};

std::uint64_t fnv1a64(std::string_view s);
std::string hash_hex(std::uint64_t h);

void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);
std::string iso8601_utc_now();

}  // namespace gcf
