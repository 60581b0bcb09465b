#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "dsn/data/post_record.hpp"
#include "dsn/data/stats.hpp"
#include "dsn/model/config.hpp"

namespace dsn::model {

// Target-post user information without the learned uid embedding, which
// the model looks up from `uid_index`.
struct EncodedUser {
  std::int32_t uid_index = data::kOovUid;
  // one-hot month | one-hot day | one-hot hour (UTC) | z-scored fields
  std::array<double, kUserNumericWidth> features{};
  std::size_t imputed = 0;  // missing numeric fields replaced by 0
};

EncodedUser encode_user(const data::PostRecord& post, const data::NormStats& stats);

}  // namespace dsn::model
