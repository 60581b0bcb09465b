#include "dsn/model/user_encoder.hpp"

#include <ctime>

#include "dsn/errors.hpp"

namespace dsn::model {

EncodedUser encode_user(const data::PostRecord& post, const data::NormStats& stats) {
  EncodedUser out;
  out.uid_index = stats.lookup_uid(post.uid);

  const std::time_t t = static_cast<std::time_t>(post.postdate);
  std::tm utc{};
  if (gmtime_r(&t, &utc) == nullptr) {
    throw DataError("post " + post.post_id + ": postdate " + std::to_string(post.postdate) +
                    " is not a representable time");
  }
  out.features[static_cast<std::size_t>(utc.tm_mon)] = 1.0;
  out.features[12 + static_cast<std::size_t>(utc.tm_mday - 1)] = 1.0;
  out.features[12 + 31 + static_cast<std::size_t>(utc.tm_hour)] = 1.0;

  for (std::size_t f = 0; f < data::kNumericFieldCount; ++f) {
    double& slot = out.features[kDateOneHotWidth + f];
    if (post.numeric[f]) {
      slot = stats.zscore(f, *post.numeric[f]);
    } else {
      slot = 0.0;
      ++out.imputed;
    }
  }
  return out;
}

}  // namespace dsn::model
