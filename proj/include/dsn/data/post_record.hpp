#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsn::data {

inline constexpr std::size_t kCategoryLevels = 3;
inline constexpr std::size_t kNumericFieldCount = 11;

// Numeric user/post metadata in file order.
inline constexpr std::array<std::string_view, kNumericFieldCount> kNumericFieldNames = {
    "ispublic", "ispro",     "latitude", "longitude", "geoaccuracy", "followers",
    "following", "views",    "tags",     "faves",     "ingroups"};

using CategoryPath = std::array<std::int32_t, kCategoryLevels>;

struct PostRecord {
  std::string post_id;
  std::string uid;
  std::int64_t postdate = 0;  // unix seconds
  CategoryPath category{};
  // Missing values are kept as nullopt and imputed at encoding time.
  std::array<std::optional<double>, kNumericFieldCount> numeric{};
  std::uint64_t views = 0;  // r
  double days = 1.0;        // d, days since the post was published
  std::int64_t img_row = 0;
  std::int64_t txt_row = 0;
};

// Chronological total order: postdate, then post_id.
bool chronologically_before(const PostRecord& a, const PostRecord& b);
void sort_chronologically(std::vector<PostRecord>& posts);

// One JSON object per line with the field names listed in kNumericFieldNames
// plus post_id, uid, postdate, cat1..cat3, r, d, img_row, txt_row.
std::string post_to_line(const PostRecord& post);
PostRecord post_from_line(std::string_view line);

void write_posts(const std::filesystem::path& path, const std::vector<PostRecord>& posts);
std::vector<PostRecord> read_posts(const std::filesystem::path& path);

// Three-level category hierarchy with parent pointers level3 -> level2 -> level1.
struct CategoryTree {
  std::array<std::size_t, kCategoryLevels> cardinalities{11, 77, 668};
  std::vector<std::int32_t> parent_of_level2;  // size cardinalities[1]
  std::vector<std::int32_t> parent_of_level3;  // size cardinalities[2]

  // Throws DataError if any parent is missing or out of range.
  void validate() const;
  // True when the path follows parent pointers and every id is in range.
  bool consistent(const CategoryPath& path) const;
  CategoryPath path_of_leaf(std::int32_t leaf) const;
};

void write_tree(const std::filesystem::path& path, const CategoryTree& tree);
CategoryTree read_tree(const std::filesystem::path& path);

}  // namespace dsn::data
