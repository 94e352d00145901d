import random
from fractions import Fraction

import pytest

from weiljets.jets import (
    cartan_generation_oracle,
    classical_jet,
    contact_and_cartan,
    derived_jet,
    hat_ideal,
    jet_fields,
    jet_from_ideal,
    power_jet,
    pushforward,
    tangent_map,
    tangent_module,
    taylor_map,
)
from weiljets.monomials import window_size
from weiljets.poly import TruncatedPolynomial, truncated_product
from weiljets.subspace import canonical_basis, mat_vec

from conftest import P


def sample_jets():
    return [
        jet_from_ideal(2, [0, 0], [P("y", 2)], 1),
        jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2),
        jet_from_ideal(2, [0, 0], [P("y - x^3", 2)], 3),
        jet_from_ideal(2, [0, 0], [P("x^2", 2), P("y^2", 2)], 2),
        jet_from_ideal(3, [0, 0, 0], [P("z", 3), P("x^2", 3)], 2),
        power_jet(1, 3),
        power_jet(2, 3),
        classical_jet(3, [0, 0, 0], {2: P("x^2 + x y", 3)}, 2),
    ]


class TestDerivedJet:
    def test_order_one_derives_to_maximal_ideal(self):
        p = jet_from_ideal(2, [0, 0], [P("y", 2)], 1)
        m = jet_from_ideal(2, [0, 0], [P("x", 2), P("y", 2)], 0)
        assert derived_jet(p) == m

    def test_power_jet_drops_one_degree(self):
        assert derived_jet(power_jet(1, 3)) == power_jet(1, 2)
        assert derived_jet(power_jet(2, 4)) == power_jet(2, 3)

    def test_non_classical_example(self):
        p = jet_from_ideal(3, [0, 0, 0], [P("z", 3), P("x^2", 3)], 2)
        expected = jet_from_ideal(3, [0, 0, 0], [P("z", 3), P("x", 3)], 1)
        got = derived_jet(p)
        assert got == expected
        assert (got.order, got.width) == (1, 1)

    def test_order_zero_is_fixed(self):
        m = jet_from_ideal(2, [0, 0], [P("x", 2), P("y", 2)], 0)
        assert derived_jet(m) == m

    def test_parabola(self):
        p = jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2)
        assert derived_jet(p) == jet_from_ideal(2, [0, 0], [P("y", 2)], 1)


class TestGenerationOracle:
    @pytest.mark.parametrize("index", range(8))
    def test_oracle_matches_normal_form_route(self, index):
        jet = sample_jets()[index]
        assert cartan_generation_oracle(jet) == derived_jet(jet)

    def test_classical_second_order(self):
        p = classical_jet(2, [0, 0], {1: P("0", 2)}, 2)  # (y) + m^3
        oracle = cartan_generation_oracle(p)
        assert oracle == jet_from_ideal(2, [0, 0], [P("y", 2)], 1)

    def test_single_variable(self):
        assert cartan_generation_oracle(power_jet(1, 2)) == power_jet(1, 1)


class TestContactSystem:
    def test_order_one_jet(self):
        c = contact_and_cartan(jet_from_ideal(2, [0, 0], [P("y", 2)], 1))
        assert c.omega_rank == 1
        assert c.tangent_dimension == 3
        assert c.cartan_tangent_dimension == 2

    def test_power_jet_contact_vanishes(self):
        c = contact_and_cartan(power_jet(2, 3))
        assert c.omega_rank == 0
        assert c.cartan_tangent_dimension == c.tangent_dimension

    def test_full_width_jet(self):
        c = contact_and_cartan(jet_from_ideal(2, [0, 0], [P("x^2", 2), P("y^2", 2)], 2))
        assert c.omega_rank == 0
        assert c.cartan_tangent_dimension == c.tangent_dimension

    @pytest.mark.parametrize("index", range(8))
    def test_annihilator_equals_generated(self, index):
        c = contact_and_cartan(sample_jets()[index])
        assert c.cartan == c.cartan_generated

    @pytest.mark.parametrize("index", range(8))
    def test_kernel_of_projection_inside_cartan(self, index):
        assert contact_and_cartan(sample_jets()[index]).kernel_inside_cartan


class TestFieldsProject:
    @pytest.mark.parametrize("index", range(8))
    def test_tangent_fields_stay_tangent_to_derived(self, index):
        # taylor_map runs the D(p) <= D(p') assertion internally.
        taylor_map(sample_jets()[index])


class TestTaylorMap:
    def test_parabola_image(self):
        p = jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2)
        ty = taylor_map(p)
        assert ty.taylor_condition
        assert ty.derived == jet_from_ideal(2, [0, 0], [P("y", 2)], 1)
        # pi_* C_p is the tangent line of the parabola inside T_{p'}:
        # one genuine direction on top of the derivation relations.
        rel = tangent_module(ty.derived).relations
        assert ty.pi_star_cartan.dimension - rel.dimension == 1

    def test_opposite_parabolas_separate(self):
        plus = taylor_map(jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2))
        minus = taylor_map(jet_from_ideal(2, [0, 0], [P("y + x^2", 2)], 2))
        assert plus.derived == minus.derived
        assert plus.pi_star_cartan != minus.pi_star_cartan

    def test_order_zero(self):
        m = jet_from_ideal(2, [0, 0], [P("x", 2), P("y", 2)], 0)
        ty = taylor_map(m)
        assert ty.taylor_condition
        assert ty.derived == m
        assert ty.pi_star_cartan.dimension == 0

    def test_graph_tangent_space_is_projected_cartan(self):
        # Every graph of the jet's width through it projects onto the same
        # tangent space, namely pi_* C_p (as submodules: closed under the
        # algebra action).
        p = jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2)
        ty = taylor_map(p)
        derived = ty.derived
        a_prime = derived.quotient
        d = a_prime.dimension
        rel = tangent_module(derived).relations
        for tail in [P("0", 2, 3), P("x^3", 2, 3)]:
            fx = P("1", 2, 2)
            fy = P("2 x", 2, 2) + tail.derivative(0).truncate(2)
            value = []
            for f in (fx, fy):
                value.extend(a_prime.project_polynomial(f).coordinates)
            # Module closure of the single tangent value under the action
            # of the coordinate classes.
            rows = list(rel.basis) + [value]
            for gen_index in range(2):
                cls = a_prime.generator(gen_index).coordinates
                shifted = []
                for i in range(2):
                    block = value[i * d : (i + 1) * d]
                    shifted.extend(a_prime.mult_coords(cls, block))
                rows.append(shifted)
            assert canonical_basis(rows, 2 * d) == ty.pi_star_cartan

    def test_cartan_projection_width_gate(self):
        # Parabola: width(p') = width(p) = 1, so the check applies and holds.
        ty = taylor_map(jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2))
        assert ty.cartan_projects is True
        # Full-width jet derives to the maximal ideal of width 0: gate closed.
        sq = jet_from_ideal(2, [0, 0], [P("x^2", 2), P("y^2", 2)], 2)
        assert taylor_map(sq).cartan_projects is None


class TestPushforward:
    def test_curve_image(self):
        phi = [P("x", 1, 3), P("x^2", 1, 3)]
        image = pushforward(power_jet(1, 3), phi)
        assert image == jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2)

    def test_identity(self):
        p = jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2)
        assert pushforward(p, [P("x", 2), P("y", 2)]) == p

    def test_projection(self):
        p = jet_from_ideal(2, [0, 0], [P("y", 2)], 1)
        assert pushforward(p, [P("x", 2)]) == power_jet(1, 2)

    def test_base_point_maps_through(self):
        p = power_jet(1, 3, ["2"])
        phi = [P("x", 1, 3), P("x^2", 1, 3)]
        image = pushforward(p, phi)
        assert image.base_point == (Fraction(2), Fraction(4))

    def test_functoriality_on_random_maps(self):
        rng = random.Random(11)
        p = power_jet(1, 3)
        for _ in range(5):
            a, b, c = (Fraction(rng.randint(-2, 2)) for _ in range(3))
            phi = [P("x", 1, 3), (P("x^2", 1, 3)).scale(a) + P("x", 1, 3).scale(b)]
            psi = [
                P("x + y", 2, 3),
                P("y", 2, 3).scale(c) + P("x y", 2, 3),
                P("x", 2, 3),
            ]
            # psi o phi by exact substitution.
            from weiljets.poly import truncated_substitute

            composed = [truncated_substitute(f, phi, 3) for f in psi]
            left = pushforward(pushforward(p, phi), psi)
            right = pushforward(p, composed)
            assert left == right


class TestRandomizedInvariants:
    def test_contact_pipeline_on_random_jets(self):
        from weiljets.monomials import window

        rng = random.Random(31337)
        checked = 0
        while checked < 25:
            n = rng.randint(1, 3)
            hint = rng.randint(1, 3)
            gens = []
            for _ in range(rng.randint(1, n)):
                coeffs = {}
                for exp in window(n, hint):
                    if sum(exp) >= 1 and rng.random() < 0.4:
                        coeffs[exp] = Fraction(rng.randint(-2, 2))
                if coeffs:
                    gens.append(TruncatedPolynomial(n, hint, coeffs))
            p = jet_from_ideal(n, [0] * n, gens, hint)
            derived = derived_jet(p)
            assert derived == cartan_generation_oracle(p)
            assert derived.contains_jet(p)
            c = contact_and_cartan(p)
            assert c.cartan == c.cartan_generated
            assert c.kernel_inside_cartan
            assert p.contains_jet(hat_ideal(p))
            checked += 1


class TestTangentMap:
    def test_embedding_is_regular(self):
        tm = tangent_map(power_jet(1, 3), [P("x", 1, 3), P("x^2", 1, 3)])
        assert tm.exists and tm.is_regular_for_subalgebra
        assert tm.matrix is not None

    def test_squaring_map_fails(self):
        tm = tangent_map(power_jet(1, 3), [P("x^2", 1, 3)])
        assert not tm.exists
        assert tm.matrix is None

    def test_identity_map_is_identity_on_classes(self):
        p = jet_from_ideal(2, [0, 0], [P("y - x^2", 2)], 2)
        tm = tangent_map(p, [P("x", 2), P("y", 2)])
        assert tm.exists and tm.is_regular_for_subalgebra
        t = tangent_module(p)
        d = p.quotient.dimension
        for i in range(2 * d):
            vec = [Fraction(0)] * (2 * d)
            vec[i] = Fraction(1)
            image = mat_vec(tm.matrix, vec)
            assert t.same_class(tuple(image), tuple(vec))

    def test_embedding_matrix_respects_classes(self):
        p = power_jet(1, 3)
        tm = tangent_map(p, [P("x", 1, 3), P("x^2", 1, 3)])
        source = tangent_module(p)
        target = tangent_module(tm.image_jet)
        for rel in source.relations.basis:
            assert target.relations.contains_vector(mat_vec(tm.matrix, rel))
