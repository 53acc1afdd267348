#pragma once

#include <span>
#include <vector>

namespace storyboard {

/// Fixed-length real vector produced by an embedding provider.
class EmbeddingVector {
public:
    /// Throws InvalidArgument on an empty or non-finite vector.
    explicit EmbeddingVector(std::vector<double> values);

    /// Unit-norm copy; throws InvalidArgument for a zero vector.
    EmbeddingVector normalized() const;
    /// Canonical basis vector e_index of the given dimension.
    static EmbeddingVector basis(std::size_t dim, std::size_t index = 0);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return values_.size(); }
    double norm() const noexcept;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<double> values_;
};

}  // namespace storyboard
