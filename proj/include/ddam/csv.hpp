#ifndef DDAM_CSV_HPP
#define DDAM_CSV_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ddam/common.hpp"

namespace ddam {

// Minimal CSV writer with byte-stable float formatting.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns, bool force) {
        if (!force && std::filesystem::exists(path))
            throw IoError("refusing to overwrite " + path + " (use --force)");
        out_.open(path, std::ios::binary);
        if (!out_) throw IoError("cannot open for writing: " + path);
        for (size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
        width_ = columns.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw IoError("csv row width mismatch");
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (out_.fail()) throw IoError("csv write failed");
    }

  private:
    std::ofstream out_;
    size_t width_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace ddam

#endif
