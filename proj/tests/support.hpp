#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hybridcrowd/crowdsim.hpp"
#include "hybridcrowd/dataset.hpp"

namespace support {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("hybridcrowd-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(HYBRIDCROWD_TEST_DATA) / relative;
}

// A single row of likelihoods as a one-responder matrix.
inline hybridcrowd::ResponseMatrix single_row(const hybridcrowd::Corpus& corpus,
                                              const std::vector<double>& row,
                                              const std::string& id = "r",
                                              hybridcrowd::LikelihoodScale scale =
                                                  hybridcrowd::LikelihoodScale::likert) {
  hybridcrowd::ResponseMatrixBuilder b(corpus, scale);
  const auto r = b.add_responder(id);
  for (std::size_t h = 0; h < row.size(); ++h) {
    if (!hybridcrowd::is_missing(row[h])) b.set(r, h, row[h]);
  }
  return std::move(b).build();
}

// Rows of likelihoods, one per responder.
inline hybridcrowd::ResponseMatrix matrix(const hybridcrowd::Corpus& corpus,
                                          const std::vector<std::string>& ids,
                                          const std::vector<std::vector<double>>& rows,
                                          hybridcrowd::LikelihoodScale scale =
                                              hybridcrowd::LikelihoodScale::likert) {
  hybridcrowd::ResponseMatrixBuilder b(corpus, scale);
  for (std::size_t m = 0; m < ids.size(); ++m) {
    const auto r = b.add_responder(ids[m]);
    for (std::size_t h = 0; h < rows[m].size(); ++h) {
      if (!hybridcrowd::is_missing(rows[m][h])) b.set(r, h, rows[m][h]);
    }
  }
  return std::move(b).build();
}

// Likelihood a perfect responder gives every headline.
inline std::vector<double> truth_row(const hybridcrowd::Corpus& corpus) {
  std::vector<double> row;
  for (const auto& h : corpus.headlines()) row.push_back(h.status == hybridcrowd::Status::genuine ? 1.0 : 0.0);
  return row;
}

}  // namespace support
