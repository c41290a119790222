#include "platelift/kinematics.hpp"

#include <doctest.h>

#include <random>

using namespace platelift;

namespace {

Joints random_joints(std::mt19937_64& rng, double span = kPi) {
  std::uniform_real_distribution<double> u(-span, span);
  Joints q;
  for (int i = 0; i < 6; ++i) q[i] = u(rng);
  return q;
}

double brute_segment_box(const Vec3& a, const Vec3& b, const Box& box, int n = 20000) {
  double best = 1e300;
  for (int i = 0; i <= n; ++i) best = std::min(best, point_box_distance(a + (b - a) * (double(i) / n), box));
  return best;
}

double brute_segment_segment(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1, int n = 600) {
  double best = 1e300;
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= n; ++k)
      best = std::min(best, ((p0 + (p1 - p0) * (double(i) / n)) - (q0 + (q1 - q0) * (double(k) / n))).norm());
  return best;
}

DualArm test_arms() {
  DualArm arms;
  arms.left.chain = reference_arm(Pose::from_rpy(Vec3(-0.3, 0.35, 0.0), 0, 0, -kPi / 2));
  arms.left.hand = HandKind::Push;
  arms.right.chain = reference_arm(Pose::from_rpy(Vec3(0.3, 0.35, 0.0), 0, 0, -kPi / 2));
  arms.right.hand = HandKind::Grip;
  return arms;
}

}  // namespace

TEST_CASE("fk at zero joints") {
  const auto arm = reference_arm(Pose::identity(), 0.15);
  const auto frames = chain_frames(arm, Joints::Zero());
  // stretched-out DH zero pose: links along -x, wrist offsets along -y
  const Vec3 flange = frames[6].translation;
  CHECK(flange.x() == doctest::Approx(-0.24365 - 0.21325));
  CHECK(flange.y() == doctest::Approx(-0.11235 - 0.0819));
  CHECK(flange.z() == doctest::Approx(0.1519 - 0.08535));
  const Vec3 approach = frames[6].rotation.col(2);
  CHECK((approach - Vec3(0, -1, 0)).norm() < 1e-12);
  CHECK((fk(arm, Joints::Zero()).translation - (flange + 0.15 * approach)).norm() < 1e-12);
}

TEST_CASE("joint one rotates the end effector about the base axis") {
  const auto arm = reference_arm(Pose::from_translation(Vec3(0.1, 0.2, 0.0)));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Joints q = random_joints(rng);
    const double theta = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    Joints q2 = q;
    q2[0] += theta;
    const Pose r = Pose::from_translation(Vec3(0.1, 0.2, 0.0)) * Pose::from_axis_angle(Vec3::UnitZ(), theta) *
                   Pose::from_translation(Vec3(-0.1, -0.2, 0.0));
    const Pose a = fk(arm, q), b = fk(arm, q2);
    CHECK(((r * a.translation) - b.translation).norm() < 1e-12);
    CHECK((r.rotation * a.rotation - b.rotation).norm() < 1e-12);
  }
}

TEST_CASE("fk is periodic in every joint") {
  const auto arm = reference_arm(Pose::identity());
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Joints q = random_joints(rng, 2.0);
    for (int i = 0; i < 6; ++i) {
      Joints q2 = q;
      q2[i] += 2.0 * kPi;
      CHECK((fk(arm, q).translation - fk(arm, q2).translation).norm() < 1e-12);
      CHECK((fk(arm, q).rotation - fk(arm, q2).rotation).norm() < 1e-12);
    }
  }
}

TEST_CASE("jacobian matches central differences") {
  const auto arm = reference_arm(Pose::from_rpy(Vec3(0.3, 0.35, 0.0), 0, 0, -kPi / 2));
  std::mt19937_64 rng(4);
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const Joints q = random_joints(rng);
    const Mat6 J = jacobian(arm, q);
    Mat6 fd;
    for (int i = 0; i < 6; ++i) {
      Joints qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      const Pose a = fk(arm, qp), b = fk(arm, qm);
      fd.block<3, 1>(0, i) = (a.translation - b.translation) / (2 * h);
      fd.block<3, 1>(3, i) = rotation_error(b.rotation, a.rotation) / (2 * h);
    }
    CHECK((J - fd).norm() <= 1e-5 * std::max(1.0, J.norm()));

    const auto frames = chain_frames(arm, q);
    for (int i = 0; i < 6; ++i)
      CHECK((J.block<3, 1>(3, i) - frames[i].rotation * arm.joints[i].axis).norm() < 1e-12);
    CHECK((J.transpose() * Vec6::Zero()).norm() == 0.0);
  }
}

TEST_CASE("ik fixed point") {
  const auto arm = reference_arm(Pose::identity());
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Joints q = random_joints(rng);
    const auto sol = ik(arm, fk(arm, q), q);
    REQUIRE(sol);
    CHECK((*sol - q).norm() < 1e-9);
  }
}

TEST_CASE("ik out of reach") {
  const auto arm = reference_arm(Pose::from_translation(Vec3(0.2, 0.0, 0.0)));
  const double r = arm.reach();
  CHECK(r > 0.4);
  CHECK(r < 1.2);
  for (const Vec3& dir : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 1).normalized()}) {
    const Pose target = Pose::from_translation(Vec3(0.2, 0.0, 0.0) + dir * (r + 0.05));
    CHECK_FALSE(ik(arm, target, arm.home));
    CHECK(ik_solutions(arm, target).empty());
  }
}

TEST_CASE("ik round trip on random reachable poses") {
  const auto arm = reference_arm(Pose::identity());
  std::mt19937_64 rng(6);
  std::normal_distribution<double> jitter(0.0, 0.3);
  int solved = 0;
  for (int t = 0; t < 50; ++t) {
    const Joints q = random_joints(rng);
    const Pose target = fk(arm, q);
    Joints seed = q;
    for (int i = 0; i < 6; ++i) seed[i] += jitter(rng);
    const auto sol = ik(arm, target, seed);
    if (!sol) continue;
    ++solved;
    const Pose got = fk(arm, *sol);
    CHECK((got.translation - target.translation).norm() < 1e-4);
    CHECK(rotation_error(got.rotation, target.rotation).norm() < 1e-3);
    CHECK(within_limits(arm, *sol));
  }
  CHECK(solved >= 45);

  for (int t = 0; t < 10; ++t) {
    const Pose target = fk(arm, random_joints(rng));
    for (const auto& s : ik_solutions(arm, target)) {
      CHECK((fk(arm, s).translation - target.translation).norm() < 1e-4);
    }
  }
}

TEST_CASE("free roll ik ignores rotation about the tool axis") {
  const auto arm = reference_arm(Pose::identity());
  const Joints q = arm.home;
  const Pose target = fk(arm, q) * Pose::from_axis_angle(Vec3::UnitZ(), 0.7);
  IkOptions opt;
  opt.free_roll = true;
  const auto sol = ik(arm, target, q, opt);
  REQUIRE(sol);
  const Pose got = fk(arm, *sol);
  CHECK((got.translation - target.translation).norm() < 1e-4);
  CHECK((got.rotation.col(2) - target.rotation.col(2)).norm() < 1e-3);
}

TEST_CASE("capsules touching at the summed radii do not collide") {
  const Capsule a{Vec3(0, 0, 0), Vec3(1, 0, 0), 0.25};
  const Capsule b{Vec3(0, 0.75, 0), Vec3(1, 0.75, 0), 0.5};
  CHECK(capsule_distance(a, b) == 0.0);
  CHECK_FALSE(capsule_distance(a, b) < 0.0);
  const Capsule c{Vec3(0, 0.5, 0), Vec3(1, 0.5, 0), 0.5};
  CHECK(capsule_distance(a, c) < 0.0);
}

TEST_CASE("segment distances agree with dense sampling") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rv = [&] { return Vec3(u(rng), u(rng), u(rng)); };
  for (int t = 0; t < 30; ++t) {
    const Box box{Pose::from_rpy(rv() * 0.3, u(rng), u(rng), u(rng)), Vec3(0.2, 0.1, 0.05) + 0.1 * rv().cwiseAbs()};
    const Vec3 a = rv(), b = rv();
    const double d = segment_box_distance(a, b, box);
    const double brute = brute_segment_box(a, b, box);
    CHECK(d <= brute + 1e-9);
    CHECK(d >= brute - 2e-4);
  }
  for (int t = 0; t < 10; ++t) {
    const Vec3 p0 = rv(), p1 = rv(), q0 = rv(), q1 = rv();
    const double d = segment_segment_distance(p0, p1, q0, q1);
    const double brute = brute_segment_segment(p0, p1, q0, q1);
    CHECK(d <= brute + 1e-9);
    CHECK(d >= brute - 1e-2);
  }
  // parallel and degenerate segments
  CHECK(segment_segment_distance(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 1, 0), Vec3(2, 1, 0)) ==
        doctest::Approx(1.0));
  CHECK(segment_segment_distance(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(3, 4, 0), Vec3(3, 4, 0)) == doctest::Approx(5.0));
  const Box unit{Pose::identity(), Vec3(1, 1, 1)};
  CHECK(point_box_distance(Vec3(0.5, 0, 0), unit) == 0.0);
  CHECK(point_box_distance(Vec3(2, 2, 1), unit) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("collision examples") {
  const auto arms = test_arms();
  const PlateModel plate{0.3, 0.3, 0.04, 4.0, Vec3::Zero()};
  const Pose far = Pose::from_translation(Vec3(5.0, 5.0, 0.02));
  CollisionWorld world;
  DualArmState home{arms.left.chain.home, arms.right.chain.home};
  CHECK_FALSE(collides(arms, home, plate, far, {}, world));

  // drive the gripping arm's tool below the table plane
  Pose below = fk(arms.right.chain, arms.right.chain.home);
  below.translation.z() = -0.05;
  DualArmState dip = home;
  const auto q = ik(arms.right.chain, below, arms.right.chain.home);
  REQUIRE(q);
  dip.right = *q;
  CHECK(collides(arms, dip, plate, far, {}, world));

  // a plate sitting where the home tool is
  const Pose on_tool = Pose::from_translation(fk(arms.left.chain, arms.left.chain.home).translation);
  CHECK(collides(arms, home, plate, on_tool, {}, world));

  // an obstacle box around the home tool
  CollisionWorld boxed;
  boxed.obstacles.push_back({on_tool, Vec3(0.05, 0.05, 0.05)});
  CHECK(collides(arms, home, plate, far, {}, boxed));
}

TEST_CASE("arm json round trip") {
  const auto arms = test_arms();
  const auto back = arm_from_json(arm_to_json(arms.left));
  CHECK(back.hand == arms.left.hand);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 5; ++t) {
    const Joints q = random_joints(rng);
    CHECK((fk(back.chain, q).translation - fk(arms.left.chain, q).translation).norm() < 1e-9);
  }
  CHECK_THROWS(arm_from_json(nlohmann::json{{"model", "nonsense"}}));
}
