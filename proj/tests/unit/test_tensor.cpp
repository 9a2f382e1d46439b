#include <catch2/catch_amalgamated.hpp>

#include "gencs/tensor.hpp"

using namespace gencs;

TEST_CASE("tensor shape/data invariants") {
    Tensor t({2, 3});
    REQUIRE(t.numel() == 6);
    REQUIRE(t.rank() == 2);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), DimensionError);
    CHECK_THROWS_AS(Tensor({0, 3}), ParameterError);
}

TEST_CASE("matvec zero input") {
    Tensor A({3, 4});
    for (std::size_t i = 0; i < A.numel(); ++i) A[i] = static_cast<double>(i) - 5.0;
    const Tensor y = matvec(A, Tensor::zeros(4));
    for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("matvec identity") {
    const Tensor y = matvec(Tensor::identity(3), Tensor::vector({1, 2, 3}));
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 3.0);
}

TEST_CASE("matvec hand-evaluated") {
    const Tensor A = Tensor::matrix(2, 3, {1, 2, 0, 0, 1, -1});
    const Tensor y = matvec(A, Tensor::vector({1, 1, 2}));
    // dot products evaluated by hand: (1*1 + 2*1 + 0*2, 0*1 + 1*1 - 1*2)
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -1.0);
}

TEST_CASE("matvec shape mismatch names both shapes") {
    const Tensor A = Tensor::matrix(2, 3, {1, 2, 0, 0, 1, -1});
    try {
        matvec(A, Tensor::vector({1, 1}));
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("(2)") != std::string::npos);
    }
}

TEST_CASE("matvec_t agrees with explicit transpose") {
    const Tensor A = Tensor::matrix(2, 3, {1, 2, 0, 0, 1, -1});
    const Tensor r = matvec_t(A, Tensor::vector({2, 3}));
    CHECK(r[0] == 2.0);
    CHECK(r[1] == 7.0);
    CHECK(r[2] == -3.0);
}

TEST_CASE("matmul small") {
    const Tensor A = Tensor::matrix(2, 2, {1, 2, 3, 4});
    const Tensor B = Tensor::matrix(2, 2, {0, 1, 1, 0});
    const Tensor C = matmul(A, B);
    CHECK(C(0, 0) == 2.0);
    CHECK(C(0, 1) == 1.0);
    CHECK(C(1, 0) == 4.0);
    CHECK(C(1, 1) == 3.0);
}

TEST_CASE("non-finite values are rejected") {
    Tensor A = Tensor::matrix(1, 1, {1e308});
    CHECK_THROWS_AS(matvec(scale(A, 1e10), Tensor::vector({1.0})), NumericError);
}
