// SPDX-License-Identifier: Apache-2.0
//
// mimo-sounder: software twin of a frequency-multiplexed Massive MIMO channel sounder
// Copyright (C) 2026 The mimo-sounder authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "sounder/scenario_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sounder
{
    namespace
    {
        using nlohmann::json;

        Vec3 vec3(const json &j)
        {
            if (!j.is_array() || j.size() != 3)
                throw std::invalid_argument("scenario: expected a 3-element array");
            return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
        }

        Eigen::Vector2d vec2(const json &j)
        {
            if (!j.is_array() || j.size() != 2)
                throw std::invalid_argument("scenario: expected a 2-element array");
            return {j[0].get<double>(), j[1].get<double>()};
        }

        json to_json3(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }
        json to_json2(const Eigen::Vector2d &v) { return json::array({v.x(), v.y()}); }

        template <typename T>
        void read_opt(const json &j, const char *key, T &dst)
        {
            if (j.contains(key))
                dst = j.at(key).get<T>();
        }
    } // namespace

    Scenario parse_scenario(const std::string &json_text)
    {
        json j;
        try
        {
            j = json::parse(json_text);
        }
        catch (const json::parse_error &e)
        {
            throw std::invalid_argument(std::string("scenario: ") + e.what());
        }

        Scenario sc;
        sc.walls.clear();
        sc.paths.clear();
        try
        {
            read_opt(j, "name", sc.name);
            if (j.contains("room"))
            {
                const auto &r = j.at("room");
                if (r.contains("min"))
                    sc.room.min = vec3(r.at("min"));
                if (r.contains("max"))
                    sc.room.max = vec3(r.at("max"));
                read_opt(r, "reflection", sc.room.reflection);
            }
            if (j.contains("walls"))
                for (const auto &w : j.at("walls"))
                    sc.walls.push_back({vec2(w.at("from")), vec2(w.at("to"))});
            if (j.contains("array"))
            {
                const auto &a = j.at("array");
                if (a.contains("center"))
                    sc.array.center = vec3(a.at("center"));
                read_opt(a, "rows", sc.array.rows);
                read_opt(a, "cols", sc.array.cols);
                read_opt(a, "spacing_m", sc.array.spacing_m);
                if (a.contains("row_axis"))
                    sc.array.row_axis = vec3(a.at("row_axis"));
                if (a.contains("col_axis"))
                    sc.array.col_axis = vec3(a.at("col_axis"));
                read_opt(a, "polarization", sc.array.polarization);
            }
            if (j.contains("paths"))
                for (const auto &p : j.at("paths"))
                {
                    PathSpec path;
                    read_opt(p, "name", path.name);
                    path.tag = link_tag_from_string(p.value("tag", std::string("LoS")));
                    for (const auto &v : p.at("vertices"))
                        path.vertices.push_back(vec2(v));
                    sc.paths.push_back(std::move(path));
                }
            read_opt(j, "heights_m", sc.heights_m);
            read_opt(j, "grid_spacing_m", sc.grid_spacing_m);
            read_opt(j, "samples_per_height", sc.samples_per_height);
            read_opt(j, "point_spacing_m", sc.point_spacing_m);
            read_opt(j, "jitter_sigma_m", sc.jitter_sigma_m);
            read_opt(j, "jitter_limit_m", sc.jitter_limit_m);
            read_opt(j, "max_reflection_order", sc.max_reflection_order);
            read_opt(j, "sample_interval_s", sc.sample_interval_s);
            read_opt(j, "snr_db", sc.snr_db);
            read_opt(j, "reference_distance_m", sc.reference_distance_m);
        }
        catch (const json::exception &e)
        {
            throw std::invalid_argument(std::string("scenario: ") + e.what());
        }
        return sc;
    }

    std::string scenario_to_json(const Scenario &sc)
    {
        json j;
        j["name"] = sc.name;
        j["room"] = {{"min", to_json3(sc.room.min)}, {"max", to_json3(sc.room.max)}, {"reflection", sc.room.reflection}};
        j["walls"] = json::array();
        for (const auto &w : sc.walls)
            j["walls"].push_back({{"from", to_json2(w.from)}, {"to", to_json2(w.to)}});
        j["array"] = {{"center", to_json3(sc.array.center)},     {"rows", sc.array.rows},
                      {"cols", sc.array.cols},                   {"spacing_m", sc.array.spacing_m},
                      {"row_axis", to_json3(sc.array.row_axis)}, {"col_axis", to_json3(sc.array.col_axis)},
                      {"polarization", sc.array.polarization}};
        j["paths"] = json::array();
        for (const auto &p : sc.paths)
        {
            json verts = json::array();
            for (const auto &v : p.vertices)
                verts.push_back(to_json2(v));
            j["paths"].push_back({{"name", p.name}, {"tag", to_string(p.tag)}, {"vertices", verts}});
        }
        j["heights_m"] = sc.heights_m;
        j["grid_spacing_m"] = sc.grid_spacing_m;
        j["samples_per_height"] = sc.samples_per_height;
        j["point_spacing_m"] = sc.point_spacing_m;
        j["jitter_sigma_m"] = sc.jitter_sigma_m;
        j["jitter_limit_m"] = sc.jitter_limit_m;
        j["max_reflection_order"] = sc.max_reflection_order;
        j["sample_interval_s"] = sc.sample_interval_s;
        j["snr_db"] = sc.snr_db;
        j["reference_distance_m"] = sc.reference_distance_m;
        return j.dump(2);
    }

    Scenario load_scenario(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::invalid_argument("scenario: cannot open " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_scenario(ss.str());
    }

    std::string array_descriptor(const ArraySpec &array, double carrier_hz)
    {
        const double sp = array.spacing_m > 0.0 ? array.spacing_m : 0.5 * kSpeedOfLight / carrier_hz;
        json j = {{"type", "rectangular"},
                  {"rows", array.rows},
                  {"cols", array.cols},
                  {"spacing_m", sp},
                  {"center", to_json3(array.center)},
                  {"row_axis", to_json3(array.row_axis)},
                  {"col_axis", to_json3(array.col_axis)},
                  {"polarization", array.polarization},
                  {"antenna_order", "row-major"}};
        return j.dump();
    }
} // namespace sounder
