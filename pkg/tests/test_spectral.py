import math

import numpy as np
import pytest

from helpers import P0, draw_validated, p0_with_a, square_grid, xi_grid
from memwave.spectral import (
    AsymptoticConstants,
    SpectrumBranch,
    StabilityViolationError,
    asymptotic_eigenvalues,
    asymptotic_eigenvalues_at,
    cardano_cubic_roots_at,
    cubic_coeffs_at,
    eigvec_at,
    modal_generator,
    quintic_coeffs,
    quintic_coeffs_at,
    quintic_roots,
    sharpness_limit,
    sharpness_product,
    shifted_cubic_coeffs_at,
    spectrum_rows,
    strip_check,
)

DELTA = 1.0


def branch_at(xi, params=P0, delta=DELTA):
    return quintic_roots(quintic_coeffs_at(xi, params, delta), params)


def test_quintic_coefficients_reference():
    poly = quintic_coeffs(1, P0, DELTA, square_grid(3))
    assert poly.coeffs == pytest.approx([1.0, 1.0, 3.0, 2.0, 1.75, 0.75], abs=1e-14)


def test_quintic_lambda4_coefficient_is_delta():
    rng = np.random.default_rng(5)
    for _ in range(5):
        params, kernel = draw_validated(rng)
        poly = quintic_coeffs_at(float(rng.uniform(1, 1e6)), params, kernel.delta)
        assert poly.coeffs[0] == 1.0
        assert poly.coeffs[1] == kernel.delta


def test_quintic_lambda2_coefficient_at_zero_order():
    params = p0_with_a(0.0)
    xi = 37.0
    poly = quintic_coeffs_at(xi, params, DELTA)
    s_sum = params.beta / params.mu + params.alpha / params.rho
    assert poly.coeffs[3] == pytest.approx(s_sum * DELTA * xi - 1.0)


def test_determinant_is_quintic_over_pole():
    poly = quintic_coeffs_at(10.0, P0, DELTA)
    lam = 0.3 + 2.0j
    assert poly.determinant(lam) == pytest.approx(poly(lam) / (lam + DELTA))


def test_asymptotic_constants_identities():
    rng = np.random.default_rng(9)
    for _ in range(20):
        params, _ = draw_validated(rng)
        c = AsymptoticConstants.from_params(params)
        s_sum = params.beta / params.mu + params.alpha / params.rho
        p_prod = params.alpha1 * params.beta / (params.rho * params.mu)
        assert 0.0 < c.m1 < c.m2
        assert c.m1 + c.m2 == pytest.approx(s_sum, rel=1e-12)
        assert c.m1 * c.m2 == pytest.approx(p_prod, rel=1e-12)
        assert c.mhat1 + c.mhat2 == pytest.approx(1.0, rel=1e-12)
        assert 0.0 < c.mhat1 < 1.0 and 0.0 < c.mhat2 < 1.0


def test_roots_reference_values_at_xi_1e4():
    # frozen from an independent high-precision solve (mpmath, 40 digits)
    br = branch_at(1e4)
    assert br.root_sum().real == pytest.approx(-DELTA, abs=1e-10)
    assert br.lambda0.real == pytest.approx(-0.9942861177, abs=1e-9)
    lam1 = br.lam(1, +1)
    assert lam1.real == pytest.approx(-9.233805286e-4, rel=1e-8)
    assert lam1.imag == pytest.approx(89.0445414109, rel=1e-10)
    lam2 = br.lam(2, +1)
    assert lam2.real == pytest.approx(-1.933560591e-3, rel=1e-8)
    assert lam2.imag == pytest.approx(148.5633331290, rel=1e-10)


def test_roots_match_high_precision_oracle():
    import mpmath

    mpmath.mp.dps = 40
    for xi in (1.0, 1e2, 1e6):
        poly = quintic_coeffs_at(xi, P0, DELTA)
        exact = mpmath.polyroots([mpmath.mpf(c) for c in poly.coeffs], maxsteps=200)
        got = sorted(branch_at(xi).all_roots(), key=lambda z: (round(z.imag, 6), z.real))
        want = sorted(
            (complex(z) for z in exact), key=lambda z: (round(z.imag, 6), z.real)
        )
        for g, w in zip(got, want):
            assert abs(g - w) <= 1e-11 * max(1.0, abs(w))


def test_roots_conjugate_closed():
    br = branch_at(1e4)
    for j in (1, 2):
        assert br.lam(j, -1) == br.lam(j, +1).conjugate()


def test_root_sum_across_scales():
    for xi in (1.0, 1e2, 1e4, 1e6, 1e8):
        br = branch_at(xi)
        assert abs(br.root_sum() + DELTA) <= 1e-10


def test_cardano_matches_companion_roots():
    for xi in np.geomspace(1.0, 1e8, 17):
        for j in (1, 2):
            cardano, inter = cardano_cubic_roots_at(float(xi), j, P0, DELTA)
            companion = np.roots(cubic_coeffs_at(float(xi), j, P0, DELTA))
            key = lambda z: (round(z.imag, 8), z.real)
            for c_root, n_root in zip(sorted(cardano, key=key), sorted(companion, key=key)):
                assert abs(c_root - n_root) <= 1e-9 * max(1.0, abs(n_root))
            assert not inter.trigonometric


def test_cardano_reference_values():
    roots, inter = cardano_cubic_roots_at(1e4, 1, P0, DELTA)
    real = [z for z in roots if abs(z.imag) < 1e-9][0]
    pair = [z for z in roots if z.imag > 0][0]
    assert real.real == pytest.approx(-0.99815330, abs=1e-7)
    assert pair.real == pytest.approx(-9.2335e-4, rel=1e-4)
    assert pair.imag == pytest.approx(89.0445, rel=1e-5)
    assert inter.Lambda == pytest.approx((inter.q_hat / 2) ** 2 + (inter.p_hat / 3) ** 3)
    assert inter.Phi_plus == pytest.approx(-inter.q_hat / 2 + math.sqrt(inter.Lambda))


def test_cardano_root_sum_is_minus_delta():
    for xi in (1.0, 1e3, 1e7):
        for j in (1, 2):
            roots, _ = cardano_cubic_roots_at(float(xi), j, P0, DELTA)
            assert complex(np.sum(roots)).real == pytest.approx(-DELTA, abs=1e-9)
            assert abs(complex(np.sum(roots)).imag) <= 1e-9


def test_shifted_cubic_satisfied_by_translated_roots():
    for xi in (1e2, 1e4, 1e6):
        for j in (1, 2):
            roots, _ = cardano_cubic_roots_at(float(xi), j, P0, DELTA)
            coeffs = shifted_cubic_coeffs_at(float(xi), j, P0, DELTA)
            for lam in roots:
                y = -DELTA - lam
                value = ((y + coeffs[1]) * y + coeffs[2]) * y + coeffs[3]
                scale = abs(y) ** 3 + coeffs[1] * abs(y) ** 2 + coeffs[2] * abs(y) + abs(coeffs[3])
                assert abs(value) <= 1e-9 * scale


def test_cardano_trigonometric_fallback():
    # small xi pushes the discriminant combination negative: three real roots
    roots, inter = cardano_cubic_roots_at(0.01, 1, P0, DELTA)
    assert inter.trigonometric
    assert np.all(np.abs(roots.imag) < 1e-12)
    companion = np.sort(np.roots(cubic_coeffs_at(0.01, 1, P0, DELTA)).real)
    assert np.sort(roots.real) == pytest.approx(companion, rel=1e-9)


def test_asymptotic_reference_values():
    vals = asymptotic_eigenvalues(1, P0, DELTA, xi_grid(1e4))
    assert vals[0].real == pytest.approx(-0.99428571428, abs=1e-10)
    c = AsymptoticConstants.from_params(P0)
    # direct evaluation: real part -mhat/(2*rho*m) * xi^(a-1), imag sqrt(m*xi)
    assert vals[1].real == pytest.approx(-c.mhat1 / (2 * c.m1) * 1e-2, rel=1e-12)
    assert vals[3].real == pytest.approx(-c.mhat2 / (2 * c.m2) * 1e-2, rel=1e-12)
    assert vals[3].imag == pytest.approx(math.sqrt(c.m2 * 1e4), rel=1e-12)
    assert vals[3].imag == pytest.approx(148.56334, rel=1e-6)


def test_asymptotic_real_parts_sum_matches_real_branch_drift():
    # the five roots sum to -delta, so the pair real parts must absorb the
    # real branch drift xi^(a-1)/alpha1: mhat1/m1 + mhat2/m2 = rho/alpha1
    rng = np.random.default_rng(17)
    for _ in range(10):
        params, _ = draw_validated(rng)
        c = AsymptoticConstants.from_params(params)
        assert c.mhat1 / c.m1 + c.mhat2 / c.m2 == pytest.approx(
            params.rho / params.alpha1, rel=1e-12
        )


def test_branch_error_decay_orders_reference():
    xis = np.geomspace(1e3, 1e7, 9)
    errs = {0: [], 1: [], 2: []}
    for xi in xis:
        br = branch_at(float(xi))
        asym = asymptotic_eigenvalues_at(float(xi), P0, DELTA)
        errs[0].append(abs(br.lambda0 - asym[0]))
        errs[1].append(abs(br.lam(1, +1) - asym[1]))
        errs[2].append(abs(br.lam(2, +1) - asym[3]))
    lx = np.log(xis)
    slope0 = np.polyfit(lx, np.log(errs[0]), 1)[0]
    assert slope0 == pytest.approx(-(2.0 - P0.a), abs=0.15)
    for j in (1, 2):
        slope = np.polyfit(lx, np.log(errs[j]), 1)[0]
        assert slope == pytest.approx(-(1.5 - P0.a), abs=0.15)


def test_sharpness_product_converges_to_limit():
    br = branch_at(1e8)
    for j in (1, 2):
        assert sharpness_product(br, j, P0.a) == pytest.approx(
            sharpness_limit(P0, j), rel=2e-3
        )


def test_sharpness_limit_zero_order_is_half_weight():
    params = p0_with_a(0.0)
    c = AsymptoticConstants.from_params(params)
    assert sharpness_limit(params, 1) == pytest.approx(c.mhat1 / 2.0)
    assert sharpness_limit(params, 2) == pytest.approx(c.mhat2 / 2.0)


def test_strip_classification():
    br = branch_at(1e4)
    report = strip_check(br, DELTA)
    excluded = dict(report.excluded)
    admissible = dict(report.admissible)
    assert "0" in excluded and excluded["0"].real < -DELTA / 2
    assert set(admissible) == {"1+", "1-", "2+", "2-"}
    for root in admissible.values():
        assert -DELTA / 2 < root.real < 0.0


def test_strip_rejects_unstable_root():
    br = branch_at(1e2)
    fake = SpectrumBranch(
        k=br.k,
        xi=br.xi,
        delta=br.delta,
        lambda0=complex(0.1),
        pairs=br.pairs,
        residuals=br.residuals,
    )
    with pytest.raises(StabilityViolationError):
        strip_check(fake, DELTA)


def test_modal_generator_charpoly_matches_quintic_exactly():
    import sympy

    # rational parameter draws with a in {0, 1/2} and square xi keep xi^a exact
    cases = [
        (dict(rho="1", mu="1", alpha="2", beta="1", gamma="1/2", a=0.5), "4", "1"),
        (dict(rho="2", mu="1/2", alpha="3", beta="5/4", gamma="3/4", a=0.5), "9/4", "3/2"),
        (dict(rho="3/2", mu="2", alpha="7/2", beta="1", gamma="1/2", a=0.0), "7/3", "5/4"),
    ]
    for raw, xi_str, delta_str in cases:
        xi_q = sympy.Rational(xi_str)
        delta_q = sympy.Rational(delta_str)
        vals = {key: sympy.Rational(val) for key, val in raw.items() if key != "a"}
        a_val = raw["a"]
        xia = sympy.sqrt(xi_q) if a_val == 0.5 else sympy.Integer(1)
        gen = sympy.Matrix(
            [
                [0, 1, 0, 0, 0],
                [-vals["alpha"] * xi_q / vals["rho"], 0, vals["gamma"] * vals["beta"] * xi_q / vals["rho"], 0, xia / vals["rho"]],
                [0, 0, 0, 1, 0],
                [vals["gamma"] * vals["beta"] * xi_q / vals["mu"], 0, -vals["beta"] * xi_q / vals["mu"], 0, 0],
                [1, 0, 0, 0, -delta_q],
            ]
        )
        lam = sympy.symbols("lam")
        exact = sympy.Poly(gen.charpoly(lam).as_expr(), lam).all_coeffs()
        from memwave.model import ModelParams

        params = ModelParams(
            rho=float(vals["rho"]),
            mu=float(vals["mu"]),
            alpha=float(vals["alpha"]),
            beta=float(vals["beta"]),
            gamma=float(vals["gamma"]),
            a=a_val,
        )
        poly = quintic_coeffs_at(float(xi_q), params, float(delta_q))
        for got, want in zip(poly.coeffs, exact):
            want_f = float(want)
            assert abs(got - want_f) <= 1e-10 * max(1.0, abs(want_f))


def test_modal_generator_numeric_charpoly_and_trace():
    grid = square_grid(5)
    gen = modal_generator(3, P0, DELTA, grid)
    assert np.trace(gen) == pytest.approx(-DELTA)
    got = np.poly(gen)
    want = quintic_coeffs(3, P0, DELTA, grid).coeffs
    assert got == pytest.approx(want, rel=1e-10)


def test_modal_generator_memory_entry_at_zero_order():
    gen = modal_generator(2, p0_with_a(0.0), DELTA, square_grid(3))
    assert gen[1, 4] == pytest.approx(1.0 / P0.rho)


def test_eigvec_satisfies_generator():
    grid = square_grid(3)
    gen = modal_generator(2, P0, DELTA, grid)
    br = quintic_roots(quintic_coeffs(2, P0, DELTA, grid), P0)
    for lam in br.all_roots():
        vec = eigvec_at(lam, grid.xi_of(2), P0, DELTA)
        assert np.linalg.norm(gen @ vec - lam * vec) <= 1e-9 * np.linalg.norm(vec)


def test_spectrum_rows_shape_and_vieta_column():
    rows = spectrum_rows(P0, DELTA, square_grid(12))
    assert len(rows) == 12
    for row in rows:
        assert row["root_sum"] == pytest.approx(-DELTA, abs=1e-10)
        assert row["sharpness1"] > 0.0
