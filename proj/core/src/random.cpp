#include "lbvae/random.hpp"

namespace lbvae {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t p : parts) { h = mix64(h ^ mix64(p)); }
    return h;
}

Matrix Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev) {
    Matrix out(rows, cols);
    // Row-major fill so the draw order is independent of Eigen's storage order.
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) { out(i, j) = stddev * normal(); }
    }
    return out;
}

}  // namespace lbvae
