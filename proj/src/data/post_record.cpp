#include "dsn/data/post_record.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "dsn/errors.hpp"

namespace dsn::data {
namespace {

using ordered_json = nlohmann::ordered_json;

template <typename T>
T required(const ordered_json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw DataError(std::string("post record is missing field '") + key + "'");
  }
  return it->get<T>();
}

}  // namespace

bool chronologically_before(const PostRecord& a, const PostRecord& b) {
  if (a.postdate != b.postdate) return a.postdate < b.postdate;
  return a.post_id < b.post_id;
}

void sort_chronologically(std::vector<PostRecord>& posts) {
  std::sort(posts.begin(), posts.end(), chronologically_before);
}

std::string post_to_line(const PostRecord& post) {
  ordered_json obj;
  obj["post_id"] = post.post_id;
  obj["uid"] = post.uid;
  obj["postdate"] = post.postdate;
  obj["cat1"] = post.category[0];
  obj["cat2"] = post.category[1];
  obj["cat3"] = post.category[2];
  for (std::size_t i = 0; i < kNumericFieldCount; ++i) {
    const std::string key(kNumericFieldNames[i]);
    if (post.numeric[i]) {
      obj[key] = *post.numeric[i];
    } else {
      obj[key] = nullptr;
    }
  }
  obj["r"] = post.views;
  obj["d"] = post.days;
  obj["img_row"] = post.img_row;
  obj["txt_row"] = post.txt_row;
  return obj.dump();
}

PostRecord post_from_line(std::string_view line) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("malformed post record: ") + e.what(), e.byte);
  }
  if (!obj.is_object()) throw FormatError("post record is not an object", 0);
  PostRecord post;
  try {
    post.post_id = required<std::string>(obj, "post_id");
    post.uid = required<std::string>(obj, "uid");
    post.postdate = required<std::int64_t>(obj, "postdate");
    post.category = {required<std::int32_t>(obj, "cat1"), required<std::int32_t>(obj, "cat2"),
                     required<std::int32_t>(obj, "cat3")};
    for (std::size_t i = 0; i < kNumericFieldCount; ++i) {
      const auto it = obj.find(std::string(kNumericFieldNames[i]));
      if (it != obj.end() && !it->is_null()) post.numeric[i] = it->get<double>();
    }
    post.views = required<std::uint64_t>(obj, "r");
    post.days = required<double>(obj, "d");
    post.img_row = required<std::int64_t>(obj, "img_row");
    post.txt_row = required<std::int64_t>(obj, "txt_row");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("post record has a field of the wrong type: ") + e.what());
  }
  if (!(post.days > 0.0)) {
    throw DataError("post " + post.post_id + " has non-positive days since post");
  }
  return post;
}

void write_posts(const std::filesystem::path& path, const std::vector<PostRecord>& posts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& p : posts) out << post_to_line(p) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<PostRecord> read_posts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<PostRecord> posts;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const auto line_start = offset;
    offset += line.size() + 1;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      posts.push_back(post_from_line(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.detail(), line_start + e.offset());
    }
  }
  return posts;
}

void CategoryTree::validate() const {
  if (parent_of_level2.size() != cardinalities[1] || parent_of_level3.size() != cardinalities[2]) {
    throw DataError("category tree parent tables do not match cardinalities");
  }
  for (std::size_t level = 0; level < kCategoryLevels; ++level) {
    if (cardinalities[level] == 0) throw DataError("category tree has an empty level");
  }
  auto check = [](const std::vector<std::int32_t>& parents, std::size_t parent_card, int level) {
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (parents[i] < 0 || static_cast<std::size_t>(parents[i]) >= parent_card) {
        throw DataError("level-" + std::to_string(level) + " category " + std::to_string(i) +
                        " has invalid parent " + std::to_string(parents[i]));
      }
    }
  };
  check(parent_of_level2, cardinalities[0], 2);
  check(parent_of_level3, cardinalities[1], 3);
}

bool CategoryTree::consistent(const CategoryPath& path) const {
  for (std::size_t level = 0; level < kCategoryLevels; ++level) {
    if (path[level] < 0 || static_cast<std::size_t>(path[level]) >= cardinalities[level]) {
      return false;
    }
  }
  return parent_of_level3[static_cast<std::size_t>(path[2])] == path[1] &&
         parent_of_level2[static_cast<std::size_t>(path[1])] == path[0];
}

CategoryPath CategoryTree::path_of_leaf(std::int32_t leaf) const {
  const auto mid = parent_of_level3.at(static_cast<std::size_t>(leaf));
  const auto top = parent_of_level2.at(static_cast<std::size_t>(mid));
  return {top, mid, leaf};
}

void write_tree(const std::filesystem::path& path, const CategoryTree& tree) {
  ordered_json obj;
  obj["cardinalities"] = tree.cardinalities;
  obj["parent_of_level2"] = tree.parent_of_level2;
  obj["parent_of_level3"] = tree.parent_of_level3;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << obj.dump() << '\n';
}

CategoryTree read_tree(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  ordered_json obj;
  try {
    obj = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": malformed category tree", e.byte);
  }
  CategoryTree tree;
  try {
    tree.cardinalities = obj.at("cardinalities").get<std::array<std::size_t, kCategoryLevels>>();
    tree.parent_of_level2 = obj.at("parent_of_level2").get<std::vector<std::int32_t>>();
    tree.parent_of_level3 = obj.at("parent_of_level3").get<std::vector<std::int32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  tree.validate();
  return tree;
}

}  // namespace dsn::data
