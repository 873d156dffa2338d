#pragma once

// JSON config-file support for CLI11: a flat object of flag name -> value,
// or a run manifest (whose "flags" object is used), so any manifest written
// next to an output re-runs the command that produced it.

#include <CLI11.hpp>
#include <json.hpp>

#include <string>
#include <vector>

namespace lista_cli {

class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        nlohmann::json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (!opt->get_configurable()) continue;
            const std::string name = opt->get_single_name();
            if (name.empty()) continue;
            if (opt->count() > 0)
                j[name] = opt->results().size() == 1 ? nlohmann::json(opt->results().front())
                                                     : nlohmann::json(opt->results());
            else if (default_also)
                j[name] = opt->get_default_str();
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::FileError(std::string("config is not valid json: ") + e.what());
        }
        if (j.contains("flags") && j["flags"].is_object()) j = j["flags"];
        if (!j.is_object()) throw CLI::FileError("config must be a json object");
        std::vector<CLI::ConfigItem> items;
        for (auto it = j.begin(); it != j.end(); ++it) {
            CLI::ConfigItem item;
            item.name = it.key();
            const auto& v = it.value();
            if (v.is_boolean()) {
                item.inputs = {v.get<bool>() ? "true" : "false"};
            } else if (v.is_string()) {
                item.inputs = {v.get<std::string>()};
            } else if (v.is_array()) {
                for (const auto& e : v)
                    item.inputs.push_back(e.is_string() ? e.get<std::string>() : e.dump());
            } else {
                item.inputs = {v.dump()};
            }
            items.push_back(std::move(item));
        }
        return items;
    }
};

}  // namespace lista_cli
