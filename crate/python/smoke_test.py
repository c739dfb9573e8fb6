"""Smoke test for the semiclassical_py extension.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml --release`.
"""

import math

import numpy as np

import semiclassical_py as sc


def gaussian(grid, x0=-1.0, xi0=0.0, a=1.0, b=1.0):
    x = grid.x.nodes()[:, None]
    xi = grid.xi.nodes()[None, :]
    g = np.exp(-((x - x0) ** 2) / a - (xi - xi0) ** 2 / b) / (math.pi * math.sqrt(a * b))
    return g.astype(np.complex128)


def main():
    h = 0.2
    x = sc.SpaceGrid(8.0, 128)
    grid = sc.PhaseGrid.dual(x, h)
    g = gaussian(grid)

    op = sc.quantize_weyl(grid, g, h)
    assert op.hermiticity_defect() < 1e-10
    back_grid, back = sc.symbol_weyl(op)
    assert back_grid.shape == grid.shape
    assert np.abs(back - g).max() < 1e-8

    # trace formula: Tr Op(F) = (2 pi h)^{-1} \int F
    integral = g.sum().real * grid.cell_area
    assert abs(op.trace().real - integral / (2 * math.pi * h)) < 1e-6

    overlap = sc.coherent_overlap((0.0, 0.0), (4 * math.sqrt(h), 0.0), h, x)
    assert abs(abs(overlap) - math.exp(-4.0)) < 1e-8

    aw = sc.quantize_antiwick(grid, g, h)
    assert aw.eigenvalues().min() > -1e-8
    _, aw_symbol = sc.symbol_weyl(aw)
    assert np.abs(aw_symbol - sc.heat_smooth(grid, g, h)).max() < 1e-6

    assert np.abs(sc.moyal_term(grid, g, gaussian(grid, x0=0.5), 2)).max() < 1e-12

    rho0 = sc.coherent_projector(-1.0, 0.0, h, x)
    times, symbols = sc.propagate(rho0, sc.Potential.gaussian_bumps(0.5, 0.5, 2.0), 0.2, 0.01, 0.1)
    assert len(times) == 3 and len(symbols) == 3
    # snapshots are u_h = (2 pi h)^{-1} sigma(rho), a unit-mass density
    mass = [s.sum().real * grid.cell_area for s in symbols]
    assert max(abs(m - 1.0) for m in mass) < 1e-8

    times, dens = sc.vlasov(grid, g, sc.Potential.gaussian_bumps(0.5, 0.5, 2.0), 0.2, 0.01, 0.1)
    masses = [d.sum().real * grid.cell_area for d in dens]
    assert max(abs(m - masses[0]) for m in masses) < 1e-5

    results = sc.run_suite("coherent")
    assert results and all(passed for _, passed, _ in results), results
    assert "[grid]" in sc.config_template()

    try:
        sc.SpaceGrid(8.0, 7)
    except ValueError:
        pass
    else:
        raise AssertionError("odd point count accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
