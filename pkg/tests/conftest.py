import numpy as np
import pytest

from whitenoise_transport import GaussianCorrelation, ModelParams, Space


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def params_lattice():
    return ModelParams(space=Space.LATTICE)


@pytest.fixture
def gaussian_corr():
    return GaussianCorrelation([[1.0]])


@pytest.fixture
def sharp_corr():
    # g(1) ~ 4e-18, so the unit-lattice dephasing rate is 1 to machine precision
    return GaussianCorrelation([[40.0]])


def ols_line(x, y):
    """Plain least-squares line fit returning (slope, intercept, r_squared)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / sst if sst > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2
