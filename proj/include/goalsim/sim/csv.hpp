#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace goalsim::sim {

// Deterministic double formatting: shortest representation that round
// trips, so reruns are byte-identical across platforms.
inline std::string format_double(double x) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == x) break;
    }
    return buf;
}

// CSV writer with a comment header carrying config hash and seed, the
// reproducibility stamp every output file embeds.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::string& header_row,
              std::uint64_t config_hash, std::uint64_t seed)
        : out_(path, std::ios::binary) {
        if (!out_) {
            throw std::runtime_error("cannot open output file: " + path.string());
        }
        out_ << "# config_hash=" << config_hash << " seed=" << seed << "\n";
        out_ << header_row << "\n";
    }

    void raw(const std::string& line) { out_ << line << "\n"; }

    CsvWriter& field(const std::string& s) {
        sep();
        out_ << s;
        return *this;
    }
    CsvWriter& field(double x) { return field(format_double(x)); }
    CsvWriter& field(std::uint64_t x) {
        sep();
        out_ << x;
        return *this;
    }
    CsvWriter& field(std::int64_t x) {
        sep();
        out_ << x;
        return *this;
    }
    CsvWriter& field(int x) { return field(static_cast<std::int64_t>(x)); }

    void endrow() {
        out_ << "\n";
        first_ = true;
    }

  private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
    }

    std::ofstream out_;
    bool first_ = true;
};

}  // namespace goalsim::sim
