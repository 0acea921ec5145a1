import numpy as np
import pytest
from scipy.linalg import expm

from liewave.harmonics import wigner_d


def rotation_generator(ell):
    """Tridiagonal generator with d(theta) = expm(theta * A); independent oracle."""
    dim = int(round(2 * ell)) + 1
    A = np.zeros((dim, dim))
    ms = -ell + np.arange(dim - 1)
    c = 0.5 * np.sqrt((ell - ms) * (ell + ms + 1.0))
    for i, ci in enumerate(c):
        A[i + 1, i] = ci
        A[i, i + 1] = -ci
    return A


def test_spin_zero():
    assert wigner_d(0.0, 1.3).tolist() == [[1.0]]


def test_spin_half_closed_form():
    th = 0.7
    expected = np.array([[np.cos(th / 2), -np.sin(th / 2)], [np.sin(th / 2), np.cos(th / 2)]])
    assert np.abs(wigner_d(0.5, th) - expected).max() < 1e-14


@pytest.mark.parametrize("ell", [1.0, 1.5])
def test_identity_at_zero(ell):
    d = wigner_d(ell, 0.0)
    assert np.abs(d - np.eye(int(2 * ell) + 1)).max() < 1e-14


@pytest.mark.parametrize("ell", [0.5, 1.0, 1.5, 2.0, 3.5, 7.0, 10.5])
@pytest.mark.parametrize("theta", [0.1, 1.2, 2.9])
def test_matches_matrix_exponential(ell, theta):
    assert np.abs(wigner_d(ell, theta) - expm(theta * rotation_generator(ell))).max() < 1e-10


@pytest.mark.parametrize("ell", [8.0, 32.0, 64.0])
def test_orthogonal_at_large_spin(ell):
    d = wigner_d(ell, 1.234)
    assert np.abs(d @ d.T - np.eye(int(2 * ell) + 1)).max() < 1e-10


def test_matches_symbolic_oracle():
    # our d^l(theta) = exp(+i theta Jy) is the transpose of sympy's Rotation.d
    sympy = pytest.importorskip("sympy")
    from sympy.physics.quantum.spin import Rotation

    theta = 0.8
    for two_l in (1, 2, 3, 4):
        j = sympy.Rational(two_l, 2)
        dim = two_l + 1
        ms = [sympy.Rational(-two_l + 2 * i, 2) for i in range(dim)]
        sym = np.array(
            [[complex(sympy.N(Rotation.d(j, mp, m, theta).doit())).real for m in ms] for mp in ms]
        )
        assert np.abs(wigner_d(two_l / 2.0, theta) - sym.T).max() < 1e-12


def test_semigroup_in_theta():
    d1 = wigner_d(2.0, 0.4)
    d2 = wigner_d(2.0, 1.1)
    d12 = wigner_d(2.0, 1.5)
    assert np.abs(d2 @ d1 - d12).max() < 1e-12


def test_rejects_bad_spin():
    with pytest.raises(ValueError):
        wigner_d(0.3, 1.0)
    with pytest.raises(ValueError):
        wigner_d(-1.0, 1.0)
    with pytest.raises(ValueError):
        wigner_d(200.0, 1.0)
