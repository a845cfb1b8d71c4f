#include "ethomap/explore/labels.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

namespace ethomap::explore {

nlohmann::ordered_json label_to_json(const ClusterLabel& label) {
    nlohmann::ordered_json out;
    out["id"] = label.id;
    out["region"] = region_to_json(label.region);
    out["text"] = label.text;
    out["author"] = label.author;
    out["created_at"] = label.created_at;
    return out;
}

ClusterLabel label_from_json(const nlohmann::json& value) {
    try {
        ClusterLabel label;
        label.id = value.at("id").get<std::int64_t>();
        label.region = region_from_json(value.at("region"));
        label.text = value.at("text").get<std::string>();
        label.author = value.value("author", std::string());
        label.created_at = value.value("created_at", std::string());
        return label;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed label: ") + e.what());
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

LabelStore::LabelStore(std::filesystem::path path, Clock clock) : path_(std::move(path)), clock_(std::move(clock)) {
    if (!std::filesystem::exists(path_)) {
        return;
    }
    try {
        const auto doc = nlohmann::json::parse(util::read_file(path_));
        for (const auto& item : doc.at("labels")) {
            labels_.push_back(label_from_json(item));
            next_id_ = std::max(next_id_, labels_.back().id + 1);
        }
        next_id_ = std::max(next_id_, doc.value("next_id", std::int64_t{1}));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path_.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw Error(path_.string() + ": " + e.what());
    }
}

void LabelStore::persist() const {
    nlohmann::ordered_json doc;
    doc["next_id"] = next_id_;
    doc["labels"] = nlohmann::ordered_json::array();
    for (const auto& label : labels_) {
        doc["labels"].push_back(label_to_json(label));
    }
    if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    util::write_file_atomic(path_, doc.dump(2) + "\n");
}

std::int64_t LabelStore::add(const Region& region, std::string text, std::string author) {
    region.validate();
    std::lock_guard lock(mutex_);
    ClusterLabel label{next_id_, region, std::move(text), std::move(author), clock_()};
    labels_.push_back(label);
    ++next_id_;
    try {
        persist();
    } catch (...) {
        labels_.pop_back();
        --next_id_;
        throw;
    }
    return label.id;
}

bool LabelStore::remove(std::int64_t id) {
    std::lock_guard lock(mutex_);
    const auto it = std::find_if(labels_.begin(), labels_.end(), [&](const ClusterLabel& l) { return l.id == id; });
    if (it == labels_.end()) {
        return false;
    }
    const ClusterLabel removed = *it;
    const auto position = labels_.erase(it);
    try {
        persist();
    } catch (...) {
        labels_.insert(position, removed);
        throw;
    }
    return true;
}

std::vector<ClusterLabel> LabelStore::list() const {
    std::lock_guard lock(mutex_);
    return labels_;
}

std::optional<ClusterLabel> LabelStore::get(std::int64_t id) const {
    std::lock_guard lock(mutex_);
    for (const auto& label : labels_) {
        if (label.id == id) {
            return label;
        }
    }
    return std::nullopt;
}

} // namespace ethomap::explore
