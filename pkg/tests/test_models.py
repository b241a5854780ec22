import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from turingwaves.models import (
    FIXTURES,
    ConfigError,
    Nonlinearity,
    SystemSpec,
    evaluate_A,
    evaluate_flux,
    evaluate_flux_jacobian,
    load_fixture,
    load_system,
)

A22 = 2.605173614560316
D_REF = [[1, 0, 2], [0, 1, 1], [1, -2, 1]]

small_u = arrays(np.float64, 3, elements=st.floats(-1.0, 1.0))


class TestLoadSystem:
    def test_reference_system(self):
        spec = load_system({"A": [[1, 0, 0], [0, A22, 0], [0, 0, 3]], "D": D_REF,
                            "nonlinearity": {"kind": "quadratic"}, "beta": -10})
        assert spec.n == 3
        assert spec.A_base[1, 1] == A22
        assert spec.beta == -10.0
        assert spec.eps_slot == (1, 1)

    def test_fixture_matches_inline(self):
        spec = load_fixture("quadratic")
        np.testing.assert_array_equal(spec.A_base, np.diag([1.0, A22, 3.0]))
        np.testing.assert_array_equal(spec.D, D_REF)
        assert spec.nonlinearity.kind == "quadratic" and spec.beta == -10.0

    @pytest.mark.parametrize("name", FIXTURES)
    def test_all_fixtures_load(self, name):
        spec = load_fixture(name)
        assert spec.A_base.shape == spec.D.shape

    def test_scalar_heat(self):
        spec = load_system('{"n": 1, "A": [[0]], "D": [[1]], "nonlinearity": {"kind": "none"}}')
        assert spec.n == 1 and spec.eps_slot == (0, 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="mismatch"):
            load_system({"A": np.eye(3).tolist(), "D": np.eye(2).tolist()})

    def test_declared_n_checked(self):
        with pytest.raises(ConfigError):
            load_system({"n": 2, "A": np.eye(3).tolist(), "D": np.eye(3).tolist()})

    def test_non_finite(self):
        with pytest.raises(ConfigError, match="non-finite"):
            load_system({"A": [[float("nan")]], "D": [[1.0]]})

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="unknown nonlinearity"):
            load_system({"A": [[1.0]], "D": [[1.0]], "nonlinearity": {"kind": "quartic"}})

    def test_homotopy_needs_h(self):
        with pytest.raises(ConfigError):
            Nonlinearity("homotopy")
        with pytest.raises(ConfigError):
            Nonlinearity("homotopy", 1.5)

    def test_bad_slot(self):
        with pytest.raises(ConfigError):
            SystemSpec(np.eye(2), np.eye(2), eps_slot=(2, 0))

    def test_missing_key(self):
        with pytest.raises(ConfigError, match="missing"):
            load_system({"A": [[1.0]]})

    def test_invalid_json(self):
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_system("{not json")

    def test_unknown_fixture(self):
        with pytest.raises(ConfigError):
            load_fixture("nope")

    def test_roundtrip_file(self, tmp_path):
        spec = load_fixture("cubic_super")
        p = tmp_path / "s.json"
        p.write_text(json.dumps(spec.to_dict()))
        back = load_system(p)
        np.testing.assert_array_equal(back.A_base, spec.A_base)
        assert back.nonlinearity == spec.nonlinearity and back.beta == spec.beta

    def test_immutable(self):
        spec = load_fixture("quadratic")
        with pytest.raises(ValueError):
            spec.A_base[0, 0] = 5.0


class TestEvaluate:
    def test_A_at_zero_and_shift(self):
        spec = load_fixture("quadratic")
        np.testing.assert_array_equal(evaluate_A(spec, 0.0), np.diag([1.0, A22, 3.0]))
        np.testing.assert_allclose(evaluate_A(spec, 0.2), np.diag([1.0, A22 + 0.2, 3.0]), rtol=0, atol=1e-15)

    def test_singeg_A(self):
        np.testing.assert_array_equal(evaluate_A(load_fixture("singeg"), 0.0), np.diag([1.0, 0.0, 1.0]))

    def test_flux_examples(self):
        quad = load_fixture("quadratic")
        np.testing.assert_allclose(evaluate_flux(quad, [1, 0, 0], 0.0), [-9.0, 0.0, 0.0])
        cub = load_fixture("cubic_super")
        np.testing.assert_allclose(evaluate_flux(cub, [0, 1, 1], 0.0), [0.0, A22, 3.0])
        np.testing.assert_array_equal(evaluate_flux(quad, np.zeros(3), 0.3), np.zeros(3))

    def test_jacobian_examples(self):
        quad = load_fixture("quadratic")
        np.testing.assert_array_equal(evaluate_flux_jacobian(quad, np.zeros(3), 0.1), evaluate_A(quad, 0.1))
        J = evaluate_flux_jacobian(quad, [1, 0, 0], 0.0)
        assert J[0, 0] == -19.0
        J = evaluate_flux_jacobian(load_fixture("cubic_super"), [2, 0, 0], 0.0)
        assert J[0, 0] == 121.0

    def test_batched(self):
        spec = load_fixture("cubic_sub")
        u = np.random.default_rng(0).normal(size=(5, 4, 3))
        F = evaluate_flux(spec, u, 0.1)
        J = evaluate_flux_jacobian(spec, u, 0.1)
        assert F.shape == u.shape and J.shape == (5, 4, 3, 3)
        np.testing.assert_allclose(F[2, 1], evaluate_flux(spec, u[2, 1], 0.1))

    @settings(max_examples=60, deadline=None)
    @given(u=small_u, eps=st.floats(-0.5, 0.5), kind=st.sampled_from(["quadratic", "cubic", "none"]),
           beta=st.floats(-10, 10))
    def test_jacobian_matches_finite_differences(self, u, eps, kind, beta):
        spec = load_fixture("quadratic").replace(nonlinearity=Nonlinearity(kind), beta=beta)
        J = evaluate_flux_jacobian(spec, u, eps)
        h = 1e-6
        fd = np.stack([(evaluate_flux(spec, u + h * e, eps) - evaluate_flux(spec, u - h * e, eps)) / (2 * h)
                       for e in np.eye(3)], axis=1)
        assert np.max(np.abs(J - fd)) <= 1e-6 * max(1.0, np.max(np.abs(J)))

    @settings(max_examples=40, deadline=None)
    @given(u=small_u, beta=st.floats(-10, 10))
    def test_quadratic_sign_symmetry(self, u, beta):
        spec = load_fixture("quadratic")
        n_minus = evaluate_flux(spec.replace(beta=beta), -u, 0.0) - evaluate_A(spec, 0.0) @ (-u)
        n_flip = evaluate_flux(spec.replace(beta=-beta), u, 0.0) - evaluate_A(spec, 0.0) @ u
        np.testing.assert_allclose(n_minus, -n_flip, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(u=small_u, beta=st.floats(-10, 10))
    def test_homotopy_endpoints(self, u, beta):
        base = load_fixture("quadratic").replace(beta=beta)
        for h, kind in ((0.0, "quadratic"), (1.0, "cubic")):
            a = evaluate_flux(base.with_homotopy(h), u, 0.0)
            b = evaluate_flux(base.replace(nonlinearity=Nonlinearity(kind)), u, 0.0)
            np.testing.assert_array_equal(a, b)
