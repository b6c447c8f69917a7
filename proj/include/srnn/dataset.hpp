#pragma once

#include <span>
#include <string>
#include <vector>

#include "srnn/error.hpp"
#include "srnn/loss.hpp"
#include "srnn/matrix.hpp"

namespace srnn {

enum class TaskKind { sequence_classification, streaming };

inline std::string to_string(TaskKind k) {
    return k == TaskKind::streaming ? "streaming" : "sequence-classification";
}

struct Sample {
    Matrix input;  // T x N, spike rasters as 0/1
    Target target;

    friend bool operator==(const Sample& a, const Sample& b) {
        return a.input == b.input && a.target.label == b.target.label && a.target.step_labels == b.target.step_labels;
    }
};

struct Dataset {
    TaskKind kind = TaskKind::sequence_classification;
    std::size_t steps = 0;
    std::size_t channels = 0;
    std::size_t classes = 0;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    Dataset subset(std::span<const std::size_t> indices) const {
        Dataset out{kind, steps, channels, classes, {}};
        out.samples.reserve(indices.size());
        for (std::size_t i : indices) out.samples.push_back(samples.at(i));
        return out;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline void validate(const Dataset& d) {
    if (d.classes == 0) throw ShapeError("dataset: zero classes");
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const Sample& s = d.samples[i];
        const std::string where = "dataset sample " + std::to_string(i) + ": ";
        require_shape(s.input.rows() == d.steps && s.input.cols() == d.channels,
                      where + "input is " + std::to_string(s.input.rows()) + "x" + std::to_string(s.input.cols()) +
                          ", expected " + std::to_string(d.steps) + "x" + std::to_string(d.channels));
        auto check = [&](int y) {
            if (y < 0 || static_cast<std::size_t>(y) >= d.classes)
                throw ShapeError(where + "label " + std::to_string(y) + " outside [0, " + std::to_string(d.classes) + ")");
        };
        if (d.kind == TaskKind::streaming) {
            require_shape(s.target.step_labels.size() == d.steps, where + "needs one label per step");
            for (int y : s.target.step_labels) check(y);
        } else {
            require_shape(!s.target.streaming(), where + "classification sample carries step labels");
            check(s.target.label);
        }
    }
}

}  // namespace srnn
