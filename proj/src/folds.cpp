#include "texbench/folds.hpp"

#include <algorithm>
#include <map>

#include "texbench/error.hpp"
#include "texbench/random.hpp"

namespace texbench {

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed,
                          std::span<const std::string> class_names) {
    if (k < 2) throw Error("k-fold split needs k >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    for (const auto& [label, members] : by_class) {
        if (members.size() < static_cast<std::size_t>(k)) {
            const std::string name = label >= 0 && static_cast<std::size_t>(label) < class_names.size()
                                         ? "'" + class_names[label] + "'"
                                         : std::to_string(label);
            throw Error("class " + name + " has " + std::to_string(members.size()) +
                        " samples, fewer than the " + std::to_string(k) + " folds requested");
        }
    }

    FoldPlan plan{k, std::vector<int>(labels.size(), -1), seed};
    SplitMix64 rng(seed);
    int next = 0;
    for (auto& [label, members] : by_class) {
        shuffle(members, rng);
        for (std::size_t i : members) {
            plan.assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    return plan;
}

} // namespace texbench
