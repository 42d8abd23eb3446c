#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sigpred/hsfm.hpp"
#include "support/oracles.hpp"

using namespace sigpred;
using sigpred::test::single_agent_scene;

namespace {

HsfmParams default_params() {
  HsfmParams p;
  return p;
}

SceneSnapshot random_scene(std::mt19937_64& rng, int n_agents) {
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> vel(-1.5, 1.5);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  SceneSnapshot scene;
  for (int i = 0; i < n_agents; ++i) {
    const AgentState s(Vec2(pos(rng), pos(rng)), Vec2(vel(rng), vel(rng)),
                       ang(rng), 0.3 * vel(rng));
    scene.agents.emplace_back(i + 1, s);
    scene.goals[i + 1] = Goal{Vec2(pos(rng) * 2.0, pos(rng) * 2.0), 0.0};
  }
  return scene;
}

SceneSnapshot mirror_y(const SceneSnapshot& scene) {
  SceneSnapshot out;
  out.timestamp = scene.timestamp;
  for (const auto& [id, s] : scene.agents) {
    out.agents.emplace_back(
        id, AgentState(Vec2(-s.position.x(), s.position.y()),
                       Vec2(-s.velocity.x(), s.velocity.y()),
                       normalize_angle(M_PI - s.heading), -s.angular_rate));
  }
  for (const auto& [id, g] : scene.goals) {
    out.goals[id] = Goal{Vec2(-g.target.x(), g.target.y()), g.speed};
  }
  return out;
}

}  // namespace

TEST_CASE("goal_force zero cases") {
  const HsfmParams p = default_params();

  // At the goal, at rest.
  const AgentState at_goal(Vec2(1, 1), Vec2(0, 0), 0, 0);
  CHECK(goal_force(at_goal, Goal{Vec2(1, 1), 0.0}, p).net.norm() ==
        doctest::Approx(0.0));

  // Already moving at the desired velocity.
  const AgentState cruising(Vec2(0, 0), Vec2(p.desired_speed, 0), 0, 0);
  CHECK(goal_force(cruising, Goal{Vec2(10, 0), 0.0}, p).net.norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("goal_force from rest") {
  HsfmParams p = default_params();
  p.relaxation_time = 0.5;
  const AgentState rest(Vec2(0, 0), Vec2(0, 0), 0, 0);
  const Vec2 f = goal_force(rest, Goal{Vec2(10, 0), 1.3}, p).net;
  CHECK(f.x() == doctest::Approx(2.6));  // 1.3 / 0.5
  CHECK(f.y() == doctest::Approx(0.0));
}

TEST_CASE("repulsion decays exponentially") {
  const HsfmParams p = default_params();
  const AgentState self(Vec2(0, 0), Vec2(1, 0), 0, 0);
  const AgentState far(Vec2(100, 0), Vec2(0, 0), 0, 0);
  CHECK(repulsion_force(self, far, p).net.norm() < 1e-40);
}

TEST_CASE("repulsion magnitude at touching distance, head-on, isotropic") {
  HsfmParams p = default_params();
  p.anisotropy = 1.0;  // w == 1 regardless of angle
  const AgentState self(Vec2(0, 0), Vec2(1, 0), 0, 0);
  const AgentState other(Vec2(0.6, 0), Vec2(-1, 0), M_PI, 0);
  CHECK(repulsion_force(self, other, p).net.norm() ==
        doctest::Approx(p.repulsion_strength));
}

TEST_CASE("repulsion mirror symmetry") {
  const HsfmParams p = default_params();
  const AgentState a(Vec2(1, 0.4), Vec2(-1, 0.1), normalize_angle(M_PI - 0.1), 0);
  const AgentState b(Vec2(-1, 0.4), Vec2(1, 0.1), 0.1, 0);
  const Vec2 fa = repulsion_force(a, b, p).net;
  // Mirror both agents across the y axis and swap roles.
  const AgentState am(Vec2(-1, 0.4), Vec2(1, 0.1), 0.1, 0);
  const AgentState bm(Vec2(1, 0.4), Vec2(-1, 0.1), normalize_angle(M_PI - 0.1), 0);
  const Vec2 fm = repulsion_force(am, bm, p).net;
  CHECK(fa.x() == doctest::Approx(-fm.x()));
  CHECK(fa.y() == doctest::Approx(fm.y()));
}

TEST_CASE("repulsion coincident positions never NaN") {
  const HsfmParams p = default_params();
  const AgentState a(Vec2(0, 0), Vec2(1, 0), 0, 0);
  const AgentState b(Vec2(0, 0), Vec2(-1, 0), 0, 0);
  const Vec2 f = repulsion_force(a, b, p).net;
  CHECK(f.allFinite());
  CHECK(f.x() > 0.0);  // fallback direction +x
}

TEST_CASE("hsfm_step fixed point at goal") {
  const HsfmParams p = default_params();
  const AgentState s(Vec2(2, 3), Vec2(0, 0), 0.7, 0.0);
  const SceneSnapshot scene = single_agent_scene(s, Vec2(2, 3));
  const SceneSnapshot next = hsfm_step(scene, p);
  const AgentState& out = next.agents[0].second;
  CHECK((out.position - s.position).norm() == doctest::Approx(0.0));
  CHECK((out.velocity - s.velocity).norm() == doctest::Approx(0.0));
  CHECK(out.heading == doctest::Approx(s.heading));
  CHECK(next.timestamp == doctest::Approx(scene.timestamp + p.dt));
}

TEST_CASE("hsfm_step equilibrium motion") {
  const HsfmParams p = default_params();
  const AgentState s(Vec2(0, 0), Vec2(p.desired_speed, 0), 0.0, 0.0);
  const SceneSnapshot scene = single_agent_scene(s, Vec2(100, 0));
  const AgentState& out = hsfm_step(scene, p).agents[0].second;
  CHECK(out.position.x() == doctest::Approx(p.desired_speed * p.dt).epsilon(1e-10));
  CHECK(out.position.y() == doctest::Approx(0.0));
  CHECK(out.heading == doctest::Approx(0.0));
}

TEST_CASE("hsfm_step empty scene") {
  SceneSnapshot scene;
  scene.timestamp = 1.0;
  const SceneSnapshot next = hsfm_step(scene, default_params());
  CHECK(next.agents.empty());
  CHECK(next.timestamp == doctest::Approx(1.2));
}

TEST_CASE("head-on encounter stays mirror symmetric") {
  const HsfmParams p = default_params();
  SceneSnapshot scene;
  scene.agents.emplace_back(1, AgentState(Vec2(-3, 0.2), Vec2(1.2, 0), 0.0, 0.0));
  scene.agents.emplace_back(2, AgentState(Vec2(3, 0.2), Vec2(-1.2, 0), M_PI, 0.0));
  scene.goals[1] = Goal{Vec2(5, 0.2), 1.2};
  scene.goals[2] = Goal{Vec2(-5, 0.2), 1.2};

  SceneSnapshot s = scene;
  for (int k = 0; k < 30; ++k) s = hsfm_step(s, p);

  // Agent 2 should be agent 1 reflected across x = 0 throughout.
  const AgentState& a = s.agents[0].second;
  const AgentState& b = s.agents[1].second;
  CHECK(a.position.x() == doctest::Approx(-b.position.x()).epsilon(1e-9));
  CHECK(a.position.y() == doctest::Approx(b.position.y()).epsilon(1e-9));
  CHECK(a.velocity.x() == doctest::Approx(-b.velocity.x()).epsilon(1e-9));
}

TEST_CASE("determinism: identical inputs, bit-identical outputs") {
  std::mt19937_64 rng(11);
  const SceneSnapshot scene = random_scene(rng, 4);
  const HsfmParams p = default_params();
  const auto a = rollout(scene, p, 20);
  const auto b = rollout(scene, p, 20);
  for (size_t k = 0; k < a.size(); ++k) {
    for (size_t i = 0; i < a[k].agents.size(); ++i) {
      CHECK(flatten_state(a[k].agents[i].second) ==
            flatten_state(b[k].agents[i].second));
    }
  }
}

TEST_CASE("rollout length, timestamps and composition") {
  std::mt19937_64 rng(13);
  const SceneSnapshot scene = random_scene(rng, 3);
  const HsfmParams p = default_params();

  CHECK(rollout(scene, p, 0).size() == 1);

  const auto r = rollout(scene, p, 24);
  CHECK(r.size() == 25);
  CHECK(r.back().timestamp == doctest::Approx(scene.timestamp + 4.8));

  const auto whole = rollout(scene, p, 10);
  const auto part1 = rollout(scene, p, 4);
  const auto part2 = rollout(part1.back(), p, 6);
  for (size_t i = 0; i < scene.agents.size(); ++i) {
    CHECK((flatten_state(whole.back().agents[i].second) -
           flatten_state(part2.back().agents[i].second))
              .cwiseAbs()
              .maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("mirror equivariance of hsfm_step") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const SceneSnapshot scene = random_scene(rng, 3);
    const HsfmParams p = default_params();
    const SceneSnapshot stepped_then_mirrored = mirror_y(hsfm_step(scene, p));
    const SceneSnapshot mirrored_then_stepped = hsfm_step(mirror_y(scene), p);
    for (size_t i = 0; i < scene.agents.size(); ++i) {
      const AgentState& a = stepped_then_mirrored.agents[i].second;
      const AgentState& b = mirrored_then_stepped.agents[i].second;
      CHECK((a.position - b.position).norm() < 1e-9);
      CHECK((a.velocity - b.velocity).norm() < 1e-9);
      CHECK(std::abs(normalize_angle(a.heading - b.heading)) < 1e-9);
      CHECK(std::abs(a.angular_rate - b.angular_rate) < 1e-9);
    }
  }
}

TEST_CASE("translation equivariance of hsfm_step") {
  std::mt19937_64 rng(19);
  const Vec2 c(12.5, -7.25);
  for (int trial = 0; trial < 20; ++trial) {
    const SceneSnapshot scene = random_scene(rng, 3);
    SceneSnapshot shifted = scene;
    for (auto& [id, s] : shifted.agents) s.position += c;
    for (auto& [id, g] : shifted.goals) g.target += c;

    const HsfmParams p = default_params();
    const SceneSnapshot a = hsfm_step(scene, p);
    const SceneSnapshot b = hsfm_step(shifted, p);
    for (size_t i = 0; i < scene.agents.size(); ++i) {
      CHECK((a.agents[i].second.position + c - b.agents[i].second.position)
                .cwiseAbs()
                .maxCoeff() == doctest::Approx(0.0));
      CHECK((a.agents[i].second.velocity - b.agents[i].second.velocity)
                .cwiseAbs()
                .maxCoeff() == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("speed converges monotonically to v_des with no neighbors") {
  const HsfmParams p = default_params();
  SceneSnapshot scene =
      single_agent_scene(AgentState(Vec2(0, 0), Vec2(0, 0), 0.0, 0.0), Vec2(1000, 0));
  double prev_speed = 0.0;
  for (int k = 0; k < 100; ++k) {
    scene = hsfm_step(scene, p);
    const double speed = scene.agents[0].second.velocity.norm();
    CHECK(speed >= prev_speed - 1e-12);
    CHECK(speed <= p.desired_speed + 1e-9);
    prev_speed = speed;
  }
  CHECK(prev_speed == doctest::Approx(p.desired_speed).epsilon(1e-6));
}

TEST_CASE("flatten/unflatten round trip") {
  const AgentState s(Vec2(1.5, -2.25), Vec2(0.3, 0.4), M_PI, -0.2);
  const AgentState r = unflatten_state(flatten_state(s));
  CHECK((r.position - s.position).norm() == doctest::Approx(0.0));
  CHECK((r.velocity - s.velocity).norm() == doctest::Approx(0.0));
  CHECK(r.heading == doctest::Approx(M_PI));
  CHECK(r.angular_rate == doctest::Approx(-0.2));

  CHECK(flatten_state(AgentState{}).norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(unflatten_state(Eigen::VectorXd::Zero(5)), std::invalid_argument);
}
