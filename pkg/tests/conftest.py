import math

import numpy as np
import pytest

import fwdvol as fv

T1_D2 = 150.0 / 365.0
T2_D2 = 181.0 / 365.0


@pytest.fixture(scope="session")
def d2_grid():
    return fv.MaturityGrid(maturities=(T1_D2, T2_D2), horizon=T1_D2, n_obs=100)


@pytest.fixture(scope="session")
def const_curves():
    return fv.VolCurves.constant(0.37, 0.15)


def make_panel(grid, values):
    return fv.PricePanel(grid=grid, values=np.asarray(values, dtype=float))


def factor_panel(grid, theta, g, h, x0=math.log(30.0)):
    """Panel built from the exact factor structure: dX^j = e^{-theta T_j} g + h.

    g plays the integrated short factor (already carrying e^{theta t} weights)
    and h the common factor; both are per-increment arrays.
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    rows = []
    for Tj in grid.maturities:
        inc = math.exp(-theta * Tj) * g + h
        rows.append(np.concatenate(([x0], x0 + np.cumsum(inc))))
    return fv.PricePanel(grid=grid, values=np.vstack(rows))
