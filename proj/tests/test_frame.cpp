#include <doctest.h>

#include <random>

#include "cathrod/frame.hpp"
#include "oracles.hpp"

using namespace cathrod;

TEST_CASE("directors of the identity quaternion") {
    const DirectorFrame f = directors_from_quaternion(Quaternion(0, 0, 0, 1));
    CHECK(f.d1.isApprox(Vec3(1, 0, 0), 1e-15));
    CHECK(f.d2.isApprox(Vec3(0, 1, 0), 1e-15));
    CHECK(f.d3.isApprox(Vec3(0, 0, 1), 1e-15));
}

TEST_CASE("directors match the rotation-matrix reference") {
    const double s = std::sin(M_PI / 4), c = std::cos(M_PI / 4);
    const Quaternion q(0, 0, s, c);  // 90 degrees about z
    const DirectorFrame f = directors_from_quaternion(q);
    CHECK(f.d1.isApprox(Vec3(0, 1, 0), 1e-12));
    CHECK(f.d2.isApprox(Vec3(-1, 0, 0), 1e-12));
    CHECK(f.d3.isApprox(Vec3(0, 0, 1), 1e-12));

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Quaternion r = Quaternion(u(rng), u(rng), u(rng), u(rng)).normalized();
        const Mat3 ref = testing::rotation_matrix_reference(r);
        const DirectorFrame g = directors_from_quaternion(r);
        CHECK((g.d1 - ref.col(0)).norm() < 1e-13);
        CHECK((g.d2 - ref.col(1)).norm() < 1e-13);
        CHECK((g.d3 - ref.col(2)).norm() < 1e-13);
    }
}

TEST_CASE("random unit quaternions give right-handed orthonormal triads") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Quaternion q = Quaternion(u(rng), u(rng), u(rng), u(rng)).normalized();
        const DirectorFrame f = directors_from_quaternion(q);
        Mat3 d;
        d << f.d1, f.d2, f.d3;
        CHECK(((d.transpose() * d) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(d.determinant() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK((f.d1.cross(f.d2) - f.d3).norm() < 1e-9);
    }
}

TEST_CASE("directors tolerate norm drift") {
    const Quaternion q(0.1, -0.2, 0.3, 0.9);
    const Quaternion scaled(0.13, -0.26, 0.39, 1.17);  // 1.3x
    const DirectorFrame a = directors_from_quaternion(q);
    const DirectorFrame b = directors_from_quaternion(scaled);
    CHECK((a.d1 - b.d1).norm() < 1e-14);
    CHECK((a.d3 - b.d3).norm() < 1e-14);
}

TEST_CASE("zero-norm quaternion is a domain error") {
    CHECK_THROWS_AS(directors_from_quaternion(Quaternion(0, 0, 0, 0)), std::domain_error);
    CHECK_THROWS_AS(material_rates(Quaternion(0, 0, 0, 0), Vec4::Zero(), Vec4::Zero()),
                    std::domain_error);
}

TEST_CASE("skew matrices") {
    const auto& b = b_matrices();
    for (const auto& m : b) CHECK((m + m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b[2].row(0) == Eigen::RowVector4d(0, 1, 0, 0));  // B3 first row

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec4 q(u(rng), u(rng), u(rng), u(rng));
        for (int k = 0; k < 6; ++k) CHECK(std::abs((b[k] * q).dot(q)) < 1e-14);
        // permutation shortcuts agree with the matrices
        for (int k = 0; k < 3; ++k) {
            CHECK((bk_times(k, q) - b[k] * q).norm() == 0.0);
            CHECK((bk0_times(k, q) - b[k + 3] * q).norm() == 0.0);
        }
    }
}

TEST_CASE("material rates vanish for constant fields") {
    const MaterialRates r = material_rates(Quaternion(0.2, 0.1, -0.3, 0.92), Vec4::Zero(), Vec4::Zero());
    CHECK(r.u.norm() == 0.0);
    CHECK(r.omega.norm() == 0.0);
    CHECK(r.omega0.norm() == 0.0);
}

TEST_CASE("material rates are scale-invariant and linear in derivatives") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Quaternion q = Quaternion(u(rng), u(rng), u(rng), u(rng)).normalized();
    const Vec4 dq(u(rng), u(rng), u(rng), u(rng));
    const Vec4 qdot(u(rng), u(rng), u(rng), u(rng));

    const MaterialRates a = material_rates(q, dq, qdot);
    const MaterialRates b = material_rates(Quaternion(2.0 * q.vec()), 2.0 * dq, 2.0 * qdot);
    CHECK((a.u - b.u).norm() < 1e-12);

    const MaterialRates c = material_rates(q, 3.0 * dq, qdot);
    CHECK((c.u - 3.0 * a.u).norm() < 1e-12);
    const MaterialRates d = material_rates(q, dq, -2.0 * qdot);
    CHECK((d.omega + 2.0 * a.omega).norm() < 1e-12);
    CHECK((d.omega0 + 2.0 * a.omega0).norm() < 1e-12);
}

TEST_CASE("bending rate of an exact circular arc equals its curvature") {
    const double kappa = 1.0 / 0.37;  // arbitrary radius
    const double s = 0.123;
    const double fd = 1e-7;
    const Quaternion q = testing::arc_quaternion(kappa, s);
    const Vec4 dq = (testing::arc_quaternion(kappa, s + fd).vec() -
                     testing::arc_quaternion(kappa, s - fd).vec()) /
                    (2.0 * fd);
    const MaterialRates r = material_rates(q, dq, Vec4::Zero());
    CHECK(r.u[1] == doctest::Approx(kappa).epsilon(1e-6));
    CHECK(std::abs(r.u[0]) < 1e-6);
    CHECK(std::abs(r.u[2]) < 1e-6);
}

TEST_CASE("angular velocity about a body axis lands in the matching component") {
    // spin about d1 at rate w: qdot = (w/2, 0, 0, 0) at identity
    const double w = 2.7;
    const MaterialRates r =
        material_rates(Quaternion(0, 0, 0, 1), Vec4::Zero(), Vec4(0.5 * w, 0, 0, 0));
    CHECK(r.omega[0] == doctest::Approx(w).epsilon(1e-12));
    CHECK(std::abs(r.omega[1]) < 1e-12);
    CHECK(std::abs(r.omega[2]) < 1e-12);
}
