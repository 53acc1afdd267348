#include "storyboard/embedding.hpp"

#include "storyboard/error.hpp"

#include <cmath>

namespace storyboard {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgument("embedding vector is empty");
    for (double v : values_)
        if (!std::isfinite(v)) throw InvalidArgument("embedding vector has a non-finite entry");
}

double EmbeddingVector::norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw InvalidArgument("cannot normalize a zero vector");
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] / n;
    return EmbeddingVector(std::move(out));
}

EmbeddingVector EmbeddingVector::basis(std::size_t dim, std::size_t index) {
    if (index >= dim) throw InvalidArgument("basis index out of range");
    std::vector<double> v(dim, 0.0);
    v[index] = 1.0;
    return EmbeddingVector(std::move(v));
}

}  // namespace storyboard
