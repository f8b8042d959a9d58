#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bubble/corpus.hpp"
#include "bubble/subfield.hpp"

namespace bubble::test {

inline PaperRecord paper(PaperId id, int year, std::vector<std::string> topics = {},
                         std::vector<std::uint64_t> authors = {}) {
  PaperRecord p;
  p.paper_id = id;
  p.year = year;
  for (auto& t : topics) p.topic_entries.push_back({std::move(t), std::nullopt, false});
  p.author_ids = std::move(authors);
  return p;
}

inline SubfieldDefinition subfield(SubfieldId id, std::vector<PaperId> members, std::int64_t strata = 1) {
  SubfieldDefinition s;
  s.subfield_id = id;
  s.seed_id = members.front();
  s.member_ids = std::move(members);
  s.spec.seed_id = id;
  s.spec.strata_id = strata;
  s.spec.target_size = static_cast<int>(s.member_ids.size());
  return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("bubble_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace bubble::test
