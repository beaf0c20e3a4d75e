/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/reenactment/hybrid.hpp
 *
 * Copyright 2026 The morphtrack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MORPHTRACK_REENACTMENT_HYBRID_HPP
#define MORPHTRACK_REENACTMENT_HYBRID_HPP

#include "morphtrack/core/errors.hpp"
#include "morphtrack/fitting/types.hpp"

#include "Eigen/Core"
#include "json.hpp"

#include <string>

namespace morphtrack {
namespace reenactment {

struct Provenance
{
    std::string source; ///< fit the expressions and head motion come from
    std::string target; ///< fit the identity and framing come from
    bool recenter_translation = true;

    nlohmann::json to_json() const
    {
        return {{"source", source}, {"target", target}, {"recenterTranslation", recenter_translation}};
    }
};

struct HybridTrajectory
{
    fitting::ShapeTrajectory trajectory;
    Provenance provenance;
};

struct ComposeOptions
{
    bool recenter_translation = true;
};

/**
 * Source performance driven onto the target subject: identity from the
 * target, per-frame expressions and rotations from the source. The scale of
 * every frame is the target's mean scale. With recentering on, the source
 * translations are shifted by (mean target - mean source) translation so the
 * head lands where the target's head is; otherwise they are kept as is.
 */
inline HybridTrajectory compose_hybrid(const fitting::ShapeTrajectory& source, const fitting::ShapeTrajectory& target,
                                       const ComposeOptions& options = {}, Provenance provenance = {})
{
    if (target.num_frames() == 0 || target.cameras.empty())
    {
        throw ValidationError("target", "target fit has no frames");
    }
    if (source.num_frames() == 0 || source.cameras.empty())
    {
        throw ValidationError("source", "source fit has no frames");
    }
    if (source.identity.size() != target.identity.size() || source.expression.cols() != target.expression.cols())
    {
        throw DimensionError("source and target fits use different model dimensions");
    }
    if (static_cast<int>(source.cameras.size()) != source.num_frames() ||
        static_cast<int>(target.cameras.size()) != target.num_frames())
    {
        throw DimensionError("fit camera count does not match its frame count");
    }

    double target_scale = 0.0;
    Eigen::Vector2d target_translation = Eigen::Vector2d::Zero();
    for (const auto& cam : target.cameras)
    {
        target_scale += cam.scale;
        target_translation += cam.translation;
    }
    target_scale /= static_cast<double>(target.cameras.size());
    target_translation /= static_cast<double>(target.cameras.size());

    Eigen::Vector2d source_translation = Eigen::Vector2d::Zero();
    for (const auto& cam : source.cameras)
    {
        source_translation += cam.translation;
    }
    source_translation /= static_cast<double>(source.cameras.size());
    const Eigen::Vector2d shift =
        options.recenter_translation ? Eigen::Vector2d(target_translation - source_translation) : Eigen::Vector2d::Zero();

    HybridTrajectory hybrid;
    hybrid.provenance = std::move(provenance);
    hybrid.provenance.recenter_translation = options.recenter_translation;
    auto& out = hybrid.trajectory;
    out.identity = target.identity;
    out.expression = source.expression;
    out.cameras = source.cameras;
    for (auto& cam : out.cameras)
    {
        cam.scale = target_scale;
        cam.translation += shift;
    }
    return hybrid;
}

} /* namespace reenactment */
} /* namespace morphtrack */

#endif /* MORPHTRACK_REENACTMENT_HYBRID_HPP */
