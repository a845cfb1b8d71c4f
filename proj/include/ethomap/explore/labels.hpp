#pragma once

#include "ethomap/explore/region.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ethomap::explore {

struct ClusterLabel {
    std::int64_t id = 0;
    Region region;
    std::string text;
    std::string author;
    std::string created_at;  // ISO 8601, UTC

    friend bool operator==(const ClusterLabel&, const ClusterLabel&) = default;
};

nlohmann::ordered_json label_to_json(const ClusterLabel& label);
ClusterLabel label_from_json(const nlohmann::json& value);

/// Current UTC time as 2024-01-02T03:04:05Z.
std::string utc_timestamp();

/// labels.json with atomic replace on every change. Writers are serialized; ids are
/// never reused, even after the highest id is deleted.
class LabelStore {
public:
    using Clock = std::function<std::string()>;

    explicit LabelStore(std::filesystem::path path, Clock clock = utc_timestamp);

    std::int64_t add(const Region& region, std::string text, std::string author = {});
    /// True if a label was removed; false (store untouched) for an unknown id.
    bool remove(std::int64_t id);
    std::vector<ClusterLabel> list() const;
    std::optional<ClusterLabel> get(std::int64_t id) const;
    const std::filesystem::path& path() const { return path_; }

private:
    void persist() const;

    std::filesystem::path path_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::vector<ClusterLabel> labels_;
    std::int64_t next_id_ = 1;
};

} // namespace ethomap::explore
