#include <doctest.h>

#include <numbers>

#include "gateforge/functionals.hpp"
#include "gateforge/optimizer.hpp"
#include "gateforge/propagation.hpp"
#include "support.hpp"

using namespace gateforge;
using testsupport::random_instance;
using testsupport::random_unitary;

TEST_SUITE("functionals") {

TEST_CASE("gate overlap of the target with itself is the subspace dimension") {
  const TargetGate target = instances::hadamard_like();
  const auto overlap = gate_overlap(target, target.padded_columns(4));
  CHECK(std::abs(overlap.value - complexd(2.0, 0.0)) <= 1e-14);
  CHECK(gate_fidelity(overlap) == doctest::Approx(1.0).epsilon(1e-12));

  const complexd phase = std::polar(1.0, -0.813);
  const auto rotated =
      gate_overlap(target, phase * target.padded_columns(4));
  CHECK(std::abs(rotated.value - 2.0 * phase) <= 1e-14);
}

TEST_CASE("gate overlap sums the relevant diagonal directly") {
  const TargetGate identity = instances::identity_gate(2);
  Eigen::MatrixXcd forward = Eigen::MatrixXcd::Zero(2, 2);
  forward(0, 0) = 1.0;
  forward(1, 1) = std::exp(complexd(0.0, std::numbers::pi / 2.0));
  const auto overlap = gate_overlap(identity, forward);
  CHECK(std::abs(overlap.value - complexd(1.0, 1.0)) <= 1e-15);
  CHECK(gate_fidelity(overlap) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("fidelity endpoints") {
  CHECK(gate_fidelity(GateOverlap{complexd(2.0, 0.0), 2}) == doctest::Approx(1.0));
  CHECK(gate_fidelity(GateOverlap{complexd(0.0, 0.0), 2}) == doctest::Approx(0.0));
}

TEST_CASE("gate overlap modulus never exceeds the subspace dimension") {
  for (unsigned seed : {3u, 4u, 5u, 6u}) {
    const auto instance = random_instance(seed);
    const auto fwd = propagate_rows_forward(
        instance.model, instance.field, instance.grid,
        identity_rows(instance.model.levels, instance.model.relevant_dim));
    const auto overlap = gate_overlap(instance.target, fwd.final());
    CHECK(std::abs(overlap.value) <= instance.model.relevant_dim + 1e-9);
  }
}

TEST_CASE("transfer objective endpoints") {
  const TargetGate target = instances::not_gate();
  const InitialBasis basis = build_initial_basis(BasisMode::orthonormal, 2, 3);
  const Eigen::MatrixXcd targets = final_targets(target, basis, 3);
  CHECK(transfer_objective(targets, targets) ==
        doctest::Approx(2.0).epsilon(1e-14));

  Eigen::MatrixXcd orthogonal = Eigen::MatrixXcd::Zero(3, 2);
  orthogonal(2, 0) = 1.0;
  orthogonal(2, 1) = 1.0;
  CHECK(transfer_objective(orthogonal, targets) <= 1e-15);
}

TEST_CASE("transfer objective ignores diagonal phase shifts of the targets") {
  std::mt19937_64 rng(17);
  const TargetGate target{random_unitary(3, rng)};
  const InitialBasis basis = build_initial_basis(BasisMode::orthonormal, 3, 5);
  Eigen::MatrixXcd evolved(5, 3);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXcd v(5);
    for (int r = 0; r < 5; ++r) v(r) = testsupport::gauss_pair(rng);
    evolved.col(c) = v.normalized();
  }
  DiagonalUnitary d{Eigen::Vector3d(0.4, -2.2, 1.1)};
  const TargetGate shifted{target.block * d.matrix()};
  const double direct =
      transfer_objective(evolved, final_targets(target, basis, 5));
  const double with_shift =
      transfer_objective(evolved, final_targets(shifted, basis, 5));
  CHECK(std::abs(direct - with_shift) <= 1e-12);
}

TEST_CASE("the corrected basis makes the transfer objective phase-sensitive") {
  // On the orthonormal basis a diagonal shift of the target is invisible;
  // on the corrected basis it moves the objective.
  const SystemModel model = instances::two_level();
  const TimeGrid grid(6.0, 120);
  const ControlField field = seeded_probe_field(grid, 0.35, 71);
  const TargetGate target = instances::hadamard_like();
  DiagonalUnitary d{Eigen::Vector2d(0.0, 2.1)};
  const TargetGate shifted{target.block * d.matrix()};

  const InitialBasis corrected =
      build_initial_basis(BasisMode::phase_corrected, 2, 2);
  const auto fwd = propagate_rows_forward(model, field, grid, corrected.states);
  const double direct =
      transfer_objective(fwd.final(), final_targets(target, corrected, 2));
  const double with_shift =
      transfer_objective(fwd.final(), final_targets(shifted, corrected, 2));
  CHECK(std::abs(direct - with_shift) >= 1e-3);

  const InitialBasis ortho = build_initial_basis(BasisMode::orthonormal, 2, 2);
  const auto fwd_ortho = propagate_rows_forward(model, field, grid, ortho.states);
  const double ortho_direct =
      transfer_objective(fwd_ortho.final(), final_targets(target, ortho, 2));
  const double ortho_shift =
      transfer_objective(fwd_ortho.final(), final_targets(shifted, ortho, 2));
  CHECK(std::abs(ortho_direct - ortho_shift) <= 1e-12);
}

TEST_CASE("overlap factors are bounded by one for unit vectors") {
  std::mt19937_64 rng(23);
  Eigen::MatrixXcd a(4, 3), b(4, 3);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXcd va(4), vb(4);
    for (int r = 0; r < 4; ++r) {
      va(r) = testsupport::gauss_pair(rng);
      vb(r) = testsupport::gauss_pair(rng);
    }
    a.col(c) = va.normalized();
    b.col(c) = vb.normalized();
  }
  const Eigen::VectorXcd factors = overlap_factors(a, b);
  for (int l = 0; l < 3; ++l) CHECK(std::abs(factors[l]) <= 1.0 + 1e-9);
}

TEST_CASE("evolution correction vanishes for a diagonal target at zero field") {
  const SystemModel model = instances::two_level();
  const TimeGrid grid(5.0, 100);
  const ControlField zero = ControlField::zero(grid);
  const auto fwd = propagate_rows_forward(model, zero, grid, identity_rows(2, 2));
  const auto bwd = propagate_rows_backward(
      model, zero, grid, instances::diagonal_flip().padded_columns(2));
  for (int j = 0; j <= grid.steps; ++j) {
    CHECK(std::abs(field_correction_evolution(model.dipole, fwd.at_node(j),
                                              bwd.at_node(j), 1.0)) <= 1e-14);
  }
}

TEST_CASE("evolution correction vanishes on a field that already implements its target") {
  const SystemModel model = instances::two_level();
  const TimeGrid grid(6.0, 150);
  const ControlField field = seeded_probe_field(grid, 0.5, 9);
  const Eigen::MatrixXcd u = propagate_full_unitary(model, field, grid);
  const TargetGate realized{u};   // fidelity is exactly one by construction
  const auto fwd = propagate_rows_forward(model, field, grid, identity_rows(2, 2));
  const auto bwd =
      propagate_rows_backward(model, field, grid, realized.padded_columns(2));
  for (int j = 0; j <= grid.steps; ++j) {
    CHECK(std::abs(field_correction_evolution(model.dipole, fwd.at_node(j),
                                              bwd.at_node(j), 1.0)) <= 1e-12);
  }
}

TEST_CASE("evolution correction matches a full-matrix assembly of the integrand") {
  const SystemModel model = instances::two_level();
  const TimeGrid grid(4.0, 80);
  const ControlField field = seeded_probe_field(grid, 0.45, 33);
  const TargetGate target = instances::hadamard_like();
  const double lambda = 1.7;

  const auto fwd = propagate_rows_forward(model, field, grid, identity_rows(2, 2));
  const auto bwd =
      propagate_rows_backward(model, field, grid, target.padded_columns(2));

  // oracle: assemble U(t,0) step by step and use U(t,T) = U(t,0) U(T,0)^dag
  const Eigen::MatrixXcd u_horizon = propagate_full_unitary(model, field, grid);
  const StepPropagator prop(model, grid.dt());
  Eigen::MatrixXcd u_t = Eigen::MatrixXcd::Identity(2, 2);
  for (int j = 0; j <= grid.steps; ++j) {
    if (j > 0) u_t = prop.at(field.samples[j - 1]) * u_t;
    const Eigen::MatrixXcd u_t_horizon = u_t * u_horizon.adjoint();
    const complexd trace =
        (target.block.adjoint() * u_t_horizon.adjoint() * model.dipole * u_t)
            .trace();
    const double oracle = -trace.imag() / (2.0 * lambda);
    const double library = field_correction_evolution(
        model.dipole, fwd.at_node(j), bwd.at_node(j), lambda);
    CHECK(std::abs(library - oracle) <= 1e-12);
  }
}

TEST_CASE("state-to-state correction with unit factors doubles the evolution one") {
  const auto instance = random_instance(49);
  const int m = instance.model.levels;
  const int n = instance.model.relevant_dim;
  const auto fwd = propagate_rows_forward(instance.model, instance.field,
                                          instance.grid, identity_rows(m, n));
  const auto bwd =
      propagate_rows_backward(instance.model, instance.field, instance.grid,
                              instance.target.padded_columns(m));
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(n);
  for (int j : {0, instance.grid.steps / 2, instance.grid.steps}) {
    const double ev = field_correction_evolution(
        instance.model.dipole, fwd.at_node(j), bwd.at_node(j), 1.0);
    const double ss = field_correction_s2s(instance.model.dipole, fwd.at_node(j),
                                           bwd.at_node(j), ones, 1.0);
    CHECK(ss == doctest::Approx(2.0 * ev).epsilon(1e-13));
  }
}

TEST_CASE("state-to-state correction vanishes when the overlaps vanish") {
  const SystemModel model = instances::two_level();
  const TimeGrid grid(3.0, 30);
  const ControlField field = seeded_probe_field(grid, 0.3, 8);
  const auto fwd = propagate_rows_forward(model, field, grid, identity_rows(2, 2));
  const auto bwd = propagate_rows_backward(
      model, field, grid, instances::not_gate().padded_columns(2));
  const Eigen::VectorXcd zero_factors = Eigen::VectorXcd::Zero(2);
  for (int j = 0; j <= grid.steps; ++j) {
    CHECK(field_correction_s2s(model.dipole, fwd.at_node(j), bwd.at_node(j),
                               zero_factors, 1.0) == 0.0);
  }
}

TEST_CASE("corrections reject a nonpositive penalty weight") {
  const Eigen::MatrixXcd any = Eigen::MatrixXcd::Zero(2, 2);
  CHECK_THROWS_AS(field_correction_evolution(any, any, any, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      field_correction_s2s(any, any, any, Eigen::VectorXcd::Zero(2), -1.0),
      std::invalid_argument);
}

TEST_CASE("state-to-state residual ignores the global phase of an exact field") {
  // Build a target the probe field implements exactly up to a chosen phase.
  const SystemModel model = instances::two_level();
  const TimeGrid grid(5.0, 100);
  const ControlField field = seeded_probe_field(grid, 0.4, 19);
  const Eigen::MatrixXcd u = propagate_full_unitary(model, field, grid);
  for (double phase : {0.0, 0.9, -2.4}) {
    const TargetGate target{std::polar(1.0, phase) * u};
    const InitialBasis basis =
        build_initial_basis(BasisMode::phase_corrected, 2, 2);
    CHECK(residual_s2s(model, field, grid, target, basis) <= 1e-9);
  }
}

TEST_CASE("residuals vanish at zero field for diagonal targets") {
  const SystemModel model = instances::two_level();
  const TimeGrid grid(13.0, 260);
  const ControlField zero = ControlField::zero(grid);
  const TargetGate diag = instances::diagonal_flip();
  CHECK(residual_evolution(model, zero, grid, diag) <= 1e-12);
  for (BasisMode mode : {BasisMode::orthonormal, BasisMode::phase_corrected}) {
    CHECK(residual_s2s(model, zero, grid, diag,
                       build_initial_basis(mode, 2, 2)) <= 1e-12);
  }
}

TEST_CASE("free evolution at a commensurate horizon scores zero against the flip target") {
  // diag(1,-1) against U(2*pi) = diag(1,1): the overlap terms cancel
  // exactly while the zero field still satisfies both stationarity
  // conditions.
  const SystemModel model = instances::two_level();
  const TimeGrid grid(2.0 * std::numbers::pi, 200);
  const ControlField zero = ControlField::zero(grid);
  const TargetGate diag = instances::diagonal_flip();
  const auto fwd = propagate_rows_forward(model, zero, grid, identity_rows(2, 2));
  const auto overlap = gate_overlap(diag, fwd.final());
  CHECK(std::abs(overlap.value) <= 1e-12);
  CHECK(gate_fidelity(overlap) <= 1e-12);
  CHECK(residual_evolution(model, zero, grid, diag) <= 1e-12);
  CHECK(residual_s2s(model, zero, grid, diag,
                     build_initial_basis(BasisMode::phase_corrected, 2, 2)) <=
        1e-12);
}

TEST_CASE("residuals are strictly positive away from stationary points") {
  const SystemModel model = instances::two_level();
  const TimeGrid grid(6.0, 120);
  const ControlField field = seeded_probe_field(grid, 0.35, 27);
  const TargetGate target = instances::not_gate();
  CHECK(residual_evolution(model, field, grid, target) > 1e-4);
  CHECK(residual_s2s(model, field, grid, target,
                     build_initial_basis(BasisMode::phase_corrected, 2, 2)) >
        1e-4);
}

TEST_CASE("a hard-converged gate field passes both residual checks") {
  const SystemModel model = instances::two_level();
  const TargetGate target = instances::not_gate();
  const TimeGrid grid(20.0, 400);
  OptimizerConfig config;
  config.lambda = 1.0;
  config.max_iters = 3000;
  config.stop_fidelity = 1.0;
  config.stop_update_norm = 1e-14;
  config.rng_seed = 11;
  const auto result = optimize(model, target, grid, config);
  REQUIRE(gate_fidelity(result.overlap) >= 1.0 - 1e-6);
  CHECK(residual_evolution(model, result.field, grid, target) <= 1e-5);
  CHECK(residual_s2s(model, result.field, grid, target,
                     build_initial_basis(BasisMode::phase_corrected, 2, 2)) <=
        1e-5);
}

TEST_CASE("phase-corrected residual distinguishes diagonally shifted targets") {
  const SystemModel model = instances::two_level();
  const TimeGrid grid(6.0, 120);
  const ControlField field = seeded_probe_field(grid, 0.35, 61);
  const TargetGate target = instances::hadamard_like();
  DiagonalUnitary d{Eigen::Vector2d(0.0, 1.9)};
  const TargetGate shifted{target.block * d.matrix()};
  const InitialBasis corrected =
      build_initial_basis(BasisMode::phase_corrected, 2, 2);
  const double direct = residual_s2s(model, field, grid, target, corrected);
  const double with_shift = residual_s2s(model, field, grid, shifted, corrected);
  CHECK(std::abs(direct - with_shift) >= 1e-3);
}

TEST_CASE("analytic gradients match finite differences of both objectives") {
  const SystemModel model = instances::two_level();
  const TargetGate target = instances::not_gate();
  const TimeGrid grid(0.8, 100);
  const ControlField base = seeded_probe_field(grid, 0.3, 3);
  const double h = 1e-6;

  const auto grad_overlap = gradient_re_overlap(model, base, grid, target);
  auto re_overlap_of = [&](const ControlField& f) {
    const auto fwd = propagate_rows_forward(model, f, grid, identity_rows(2, 2));
    return gate_overlap(target, fwd.final()).value.real();
  };
  const InitialBasis corrected =
      build_initial_basis(BasisMode::phase_corrected, 2, 2);
  const Eigen::MatrixXcd targets = final_targets(target, corrected, 2);
  const auto grad_transfer =
      gradient_transfer(model, base, grid, target, corrected);
  auto transfer_of = [&](const ControlField& f) {
    const auto fwd = propagate_rows_forward(model, f, grid, corrected.states);
    return transfer_objective(fwd.final(), targets);
  };

  for (int j : {4, 19, 40, 66, 93}) {
    ControlField plus = base, minus = base;
    plus.samples[j] += h;
    minus.samples[j] -= h;
    const double fd_overlap =
        (re_overlap_of(plus) - re_overlap_of(minus)) / (2.0 * h);
    CHECK(std::abs(fd_overlap - grad_overlap[j]) <=
          1e-4 * std::max(std::abs(fd_overlap), 1e-8));
    const double fd_transfer =
        (transfer_of(plus) - transfer_of(minus)) / (2.0 * h);
    CHECK(std::abs(fd_transfer - grad_transfer[j]) <=
          1e-4 * std::max(std::abs(fd_transfer), 1e-8));
  }
}

}  // TEST_SUITE
