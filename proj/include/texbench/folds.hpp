#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace texbench {

/// Assignment of every sample to one of k folds.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;
    std::uint64_t seed = 0;

    std::vector<std::size_t> test_indices(int fold) const;
    std::vector<std::size_t> train_indices(int fold) const;
};

/// Stratified k-fold split. Each class is shuffled with a seeded permutation
/// and dealt round-robin over the folds; the dealing position carries over
/// from one class to the next so total fold sizes stay balanced as well.
/// Throws when a class has fewer than k samples.
FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed,
                          std::span<const std::string> class_names = {});

} // namespace texbench
