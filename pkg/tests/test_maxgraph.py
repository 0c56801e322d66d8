"""Maximal graphs: residuals, area, Plateau solver, conjugates, detection."""

import numpy as np
import pytest
from scipy import integrate
from scipy.spatial import ConvexHull

from maxsurf import catalog, maxgraph
from maxsurf.errors import (AdmissibilityError, DomainError, ExactnessError,
                            OverlapError, SingularError)
from maxsurf.maxgraph import (GridGraph, SolverConfig, acausality_check, area,
                              annulus_mask, conjugate_graph, detect_singular,
                              disc_mask, disjoint_support_count,
                              li_wang_bound, load_gridgraph, residual_maximal,
                              residual_minimal, save_gridgraph, solve_plateau,
                              trace_boundary)


def shifted_catenoid(X, Y):
    return np.arcsinh(np.hypot(X - 3.0, Y))


def disc_graph(h, fn, radius=1.0, origin=(-1.0, -1.0), extent=2.0):
    n = int(round(extent / h)) + 1
    return GridGraph.from_function(origin, h, n, n, fn, disc_mask(radius))


class TestResidual:
    def test_linear_plane_zero_exactly(self):
        # dyadic spacing keeps the node differences exact, so the constant
        # flux cancels to the last bit
        g = GridGraph.from_function((0, 0), 0.125, 12, 12, lambda X, Y: 0.5 * X)
        res, clamped = residual_maximal(g)
        assert np.nanmax(np.abs(res)) == 0.0
        assert not clamped.any()

    def test_shifted_catenoid_second_order(self):
        errs = []
        for h in (0.1, 0.05, 0.025):
            g = disc_graph(h, shifted_catenoid)
            res, clamped = residual_maximal(g)
            assert not clamped.any()
            errs.append(np.nanmax(np.abs(res)))
        assert errs[0] / errs[1] > 3.2
        assert errs[1] / errs[2] > 3.2

    def test_light_cone_clamped_on_annulus(self):
        # discrete cone gradients sit within O(h^2/r^2) of 1; a clamp at
        # 1 - 0.02 flags every interior stencil
        g = GridGraph.from_function((-2, -2), 0.1, 41, 41, catalog.lightcone_graph,
                                    annulus_mask(0.8, 1.8))
        res, clamped = residual_maximal(g, eps_reg=0.02)
        interior = g.interior_mask()
        assert clamped[interior].all()


class TestArea:
    def test_flat_disc(self):
        h = 0.02
        g = disc_graph(h, lambda X, Y: 0.0 * X, radius=1.0)
        assert area(g, 1.0) == pytest.approx(np.pi, abs=10 * h)

    def test_light_cone_area_vanishes(self):
        h = 0.02
        g = disc_graph(h, catalog.lightcone_graph)
        assert area(g, 1.0) < 10 * h

    def test_catenoid_graph_matches_radial_quadrature(self):
        h = 0.01
        g = GridGraph.from_function((-2, -2), h, 401, 401, catalog.catenoid_graph)
        val = area(g, 2.0)
        oracle, _ = integrate.quad(lambda r: 2 * np.pi * r * r / np.sqrt(1 + r * r), 0, 2)
        assert val == pytest.approx(oracle, abs=20 * h)

    def test_area_bound_all_catalog_graphs(self):
        h = 0.04
        for name in ("catenoid", "enneper2", "plane", "lightcone", "zero-plane"):
            fn = catalog.GRAPH_SAMPLERS[name]
            g = GridGraph.from_function((-4.2, -4.2), h, 211, 211, fn)
            for R in (0.5, 1.0, 2.0, 4.0):
                assert area(g, R) <= np.pi * R * R + 10 * h

    def test_radius_validation(self):
        g = disc_graph(0.1, lambda X, Y: 0.0 * X)
        with pytest.raises(DomainError):
            area(g, -1.0)


class TestPlateau:
    def test_shifted_catenoid_dirichlet(self):
        h = 1 / 32
        mg = disc_graph(h, lambda X, Y: 0.0 * X)
        sol, stats = solve_plateau(mg, shifted_catenoid)
        X, Y = sol.meshgrid()
        interior = sol.interior_mask()
        err = np.nanmax(np.abs(np.where(interior, sol.u - shifted_catenoid(X, Y), np.nan)))
        assert err < 5e-6
        assert stats.residual < 1e-10
        # maximum principle: interior range within boundary range
        bvals = sol.u[sol.boundary_mask()]
        assert np.nanmin(sol.u[interior]) >= bvals.min() - 1e-12
        assert np.nanmax(sol.u[interior]) <= bvals.max() + 1e-12

    def test_convergence_order(self):
        errs = []
        for h in (1 / 16, 1 / 32, 1 / 64):
            mg = disc_graph(h, lambda X, Y: 0.0 * X)
            sol, _ = solve_plateau(mg, shifted_catenoid)
            X, Y = sol.meshgrid()
            interior = sol.interior_mask()
            errs.append(np.nanmax(np.abs(
                np.where(interior, sol.u - shifted_catenoid(X, Y), np.nan))))
        assert errs[0] / errs[1] > 3.5
        assert errs[1] / errs[2] > 3.5

    def test_convex_hull_property(self):
        h = 1 / 32
        mg = disc_graph(h, lambda X, Y: 0.0 * X)
        sol, _ = solve_plateau(mg, shifted_catenoid)
        X, Y = sol.meshgrid()
        bm = sol.boundary_mask()
        lifts_b = np.stack([X[bm], Y[bm], sol.u[bm]], axis=1)
        hull = ConvexHull(lifts_b)
        am = sol.mask
        lifts = np.stack([X[am], Y[am], sol.u[am]], axis=1)
        viol = (lifts @ hull.equations[:, :3].T + hull.equations[:, 3]).max()
        assert viol <= 1e-9

    def test_zero_boundary_gives_zero(self):
        mg = disc_graph(1 / 16, lambda X, Y: 0.0 * X)
        sol, _ = solve_plateau(mg, lambda x, y: 0.0 * x)
        assert np.nanmax(np.abs(sol.u)) < 1e-12

    def test_lightlike_boundary_returns_ps_interpolant(self):
        mg = disc_graph(1 / 16, lambda X, Y: 0.0 * X)
        sol, stats = solve_plateau(mg, lambda x, y: x)
        assert stats.degenerate
        X, _ = sol.meshgrid()
        assert np.nanmax(np.abs(np.where(sol.mask, sol.u - X, np.nan))) < 1e-12
        assert area(sol, 1.0) < 10 / 16
        rep = detect_singular(sol, tol=1e-6)
        assert len(rep.nodes) > 0

    def test_inadmissible_boundary_names_pair(self):
        mg = disc_graph(1 / 16, lambda X, Y: 0.0 * X)
        with pytest.raises(AdmissibilityError) as exc:
            solve_plateau(mg, lambda x, y: 2.0 * x)
        assert exc.value.pair is not None
        assert exc.value.excess > 0

    def test_monotone_stability_under_refinement(self):
        # discrete C^1 convergence: gradients on common nodes approach
        sols = {}
        for h in (1 / 16, 1 / 32, 1 / 64):
            mg = disc_graph(h, lambda X, Y: 0.0 * X)
            sol, _ = solve_plateau(mg, shifted_catenoid)
            sols[h] = sol

        def grad_diff(ga, gb, stride):
            uxa, uya = ga.gradient()
            uxb, uyb = gb.gradient()
            sel = ga.interior_mask()
            d = np.hypot(uxa - uxb[::stride, ::stride], uya - uyb[::stride, ::stride])
            return np.nanmax(np.where(sel, d, np.nan))

        d1 = grad_diff(sols[1 / 16], sols[1 / 32], 2)
        d2 = grad_diff(sols[1 / 32], sols[1 / 64], 2)
        assert d2 < d1

    def test_solver_config_validation(self):
        with pytest.raises(DomainError):
            SolverConfig(eps_reg=0.0)
        with pytest.raises(DomainError):
            SolverConfig(tol=-1.0)


class TestConjugate:
    def test_zero_graph(self):
        g = GridGraph.from_function((0, 0), 0.05, 11, 11, lambda X, Y: 0.0 * X)
        conj, loop = conjugate_graph(g, anchor=(0, 0))
        assert np.nanmax(np.abs(conj.u)) == 0.0
        assert loop == 0.0

    def test_tilted_plane_constant_slope(self):
        g = GridGraph.from_function((0, 0), 0.05, 21, 21, lambda X, Y: 0.5 * X)
        conj, loop = conjugate_graph(g, anchor=(0, 0))
        expected = -0.5 / np.sqrt(0.75)
        slopes = np.diff(conj.u, axis=1) / 0.05
        assert np.nanmax(np.abs(slopes - expected)) < 1e-12
        assert np.nanmax(np.abs(np.diff(conj.u, axis=0))) < 1e-12
        assert loop < 1e-14

    def test_catenoid_piece_minimal_equation(self):
        # off-center patch away from the vertex; u* = -theta exactly
        residuals = []
        for h in (0.05, 0.025):
            n = int(round(1.0 / h)) + 1
            g = GridGraph.from_function((2.0, -0.5), h, n, n, catalog.catenoid_graph)
            conj, loop = conjugate_graph(g)
            res = residual_minimal(conj)
            residuals.append(np.nanmax(np.abs(res)))
            assert loop < 50 * h ** 2
            ctr = (n // 2, n // 2)
            X, Y = g.meshgrid()
            th = np.arctan2(Y, X)
            exact = -(th - th[ctr])
            assert np.abs((conj.u - conj.u[ctr]) - exact).max() < 5 * h ** 2
        assert residuals[0] < 0.05 * 0.05 ** 2 * 4  # O(h^2) scale
        assert residuals[1] < residuals[0]

    def test_round_trip_recovers_input(self):
        for h in (0.05, 0.025):
            n = int(round(1.0 / h)) + 1
            g = GridGraph.from_function((2.0, -0.5), h, n, n, catalog.catenoid_graph)
            conj, _ = conjugate_graph(g)
            back, _ = conjugate_graph(conj, direction=-1)
            ctr = (n // 2, n // 2)
            diff = (back.u - g.u) - (back.u[ctr] - g.u[ctr])
            assert np.nanmax(np.abs(diff)) < 10 * h ** 2

    def test_singular_graph_rejected(self):
        g = GridGraph.from_function((-2, -2), 0.1, 41, 41, catalog.lightcone_graph,
                                    annulus_mask(0.8, 1.8))
        with pytest.raises(SingularError):
            conjugate_graph(g)

    def test_nonintegrable_field_rejected(self):
        rng = np.random.default_rng(0)
        noise = rng.uniform(-0.5, 0.5, (21, 21))
        g = GridGraph(origin=(0, 0), h=0.05, u=noise * 0.04)
        with pytest.raises(ExactnessError):
            conjugate_graph(g, loop_tol=1e-6)


class TestDetectSingular:
    def test_e2_graph_singular_ray(self):
        h = 4 / 128
        g = GridGraph.from_function((-2.0, -2.0), h, 129, 129, catalog.e2_graph)
        rep = detect_singular(g, tol=1e-9)
        assert len(rep.segments) == 1
        seg = rep.segments[0]
        assert not seg.is_point
        X, Y = g.meshgrid()
        x1 = X[rep.nodes[:, 0], rep.nodes[:, 1]]
        x2 = Y[rep.nodes[:, 0], rep.nodes[:, 1]]
        # flagged set hugs the ray x1 = 0, x2 >= 0 within one cell width
        assert np.abs(x1).max() <= h + 1e-12
        assert x2.min() >= -h - 1e-12
        assert seg.lightlike_defect < 1e-3
        d = seg.direction
        assert abs(abs(d[1]) - 1 / np.sqrt(2)) < 1e-6
        assert abs(abs(d[2]) - 1 / np.sqrt(2)) < 1e-6

    def test_smooth_catenoid_away_from_vertex_empty(self):
        g = GridGraph.from_function((-2, -2), 0.05, 81, 81, catalog.catenoid_graph,
                                    annulus_mask(0.5, 1.9))
        rep = detect_singular(g, tol=1e-6)
        assert len(rep.nodes) == 0

    def test_light_cone_flags_everything(self):
        g = GridGraph.from_function((-1, -1), 0.1, 21, 21, catalog.lightcone_graph,
                                    annulus_mask(0.3, 0.95))
        rep = detect_singular(g, tol=0.1)
        assert len(rep.nodes) == int(g.mask.sum())


class TestAcausality:
    def test_plane_min_is_h_squared(self):
        g = GridGraph.from_function((-1, -1), 0.1, 21, 21, lambda X, Y: 0.0 * X)
        assert acausality_check(g, (10, 10)) == pytest.approx(0.01, abs=1e-15)

    def test_light_cone_zero(self):
        g = GridGraph.from_function((-1, -1), 0.1, 21, 21, catalog.lightcone_graph)
        assert acausality_check(g, (10, 10)) == pytest.approx(0.0, abs=1e-15)

    def test_catalog_graphs_nonnegative(self):
        for name in ("catenoid", "enneper2", "plane"):
            g = GridGraph.from_function((-1.05, -1.05), 0.07, 31, 31,
                                        catalog.GRAPH_SAMPLERS[name])
            assert acausality_check(g, (15, 15)) >= -1e-12


class TestLiWang:
    def test_exact_values(self):
        assert li_wang_bound(1.0) == 8.0
        assert li_wang_bound(0.5) == pytest.approx(32.0 / 3.0, rel=1e-15)

    def test_monotone_decreasing(self):
        eps = np.linspace(1e-3, 1.0, 100)
        vals = [li_wang_bound(e) for e in eps]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_divergence_flag(self):
        val, flag = li_wang_bound(1e-8, with_flag=True)
        assert np.isfinite(val) and flag
        _, flag = li_wang_bound(0.5, with_flag=True)
        assert not flag

    def test_domain(self):
        with pytest.raises(DomainError):
            li_wang_bound(0.0)
        with pytest.raises(DomainError):
            li_wang_bound(1.5)

    def test_disjoint_support_count(self):
        flat = GridGraph.from_function((0, 0), 0.1, 11, 11, lambda X, Y: 0.3 * X)
        assert disjoint_support_count([flat], 0.5) == (1, True)
        assert disjoint_support_count([], 1.0) == (0, True)
        graphs = [GridGraph.from_function((3.0 * k, 0), 0.1, 11, 11,
                                          lambda X, Y: 0.0 * X) for k in range(9)]
        count, ok = disjoint_support_count(graphs, 1.0)
        assert count == 9 and not ok
        overlapping = [flat, GridGraph.from_function((0.5, 0.5), 0.1, 11, 11,
                                                     lambda X, Y: 0.0 * X)]
        with pytest.raises(OverlapError):
            disjoint_support_count(overlapping, 0.5)


class TestGridIO:
    def test_bit_exact_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        u = rng.normal(size=(7, 5)) * np.pi
        u[2, 3] = np.nan
        g = GridGraph(origin=(-0.3, 0.7), h=1 / 3, u=u)
        path = tmp_path / "g.csv"
        save_gridgraph(g, path)
        g2 = load_gridgraph(path)
        assert g2.nx == 7 and g2.ny == 5
        assert g2.origin == g.origin
        assert g2.h == g.h
        same = (g2.u == g.u) | (np.isnan(g2.u) & np.isnan(g.u))
        assert same.all()
        # byte-identical re-save
        path2 = tmp_path / "g2.csv"
        save_gridgraph(g2, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_header_format(self, tmp_path):
        g = GridGraph.from_function((0, 0), 0.5, 3, 2, lambda X, Y: X + Y)
        path = tmp_path / "g.csv"
        save_gridgraph(g, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "3,2,0.0,0.0,0.5"
        assert len(lines) == 1 + 2          # ny rows
        assert len(lines[1].split(",")) == 3  # nx values per row

    def test_trace_boundary_deterministic(self):
        g = disc_graph(0.125, lambda X, Y: 0.0 * X)
        a = trace_boundary(g)
        b = trace_boundary(g)
        assert np.array_equal(a, b)
        bm = g.boundary_mask()
        assert len(a) == bm.sum()


class TestPSInvariant:
    def test_ps_slack_on_catalog_graphs(self):
        for name in ("catenoid", "enneper2", "lightcone"):
            g = GridGraph.from_function((-2, -2), 0.05, 81, 81,
                                        catalog.GRAPH_SAMPLERS[name])
            assert g.ps_violation() <= 1e-9


class TestSolverFailurePaths:
    def test_convergence_error_on_tiny_budget(self):
        mg = disc_graph(1 / 16, lambda X, Y: 0.0 * X)
        cfg = SolverConfig(max_iters=2, max_newton=0)
        with pytest.raises(maxgraph.ConvergenceError):
            solve_plateau(mg, shifted_catenoid, cfg)

    def test_explicit_relaxation_honored(self):
        mg = disc_graph(1 / 16, lambda X, Y: 0.0 * X)
        cfg = SolverConfig(relaxation=0.9)
        sol, stats = solve_plateau(mg, shifted_catenoid, cfg)
        assert stats.residual < 1e-10

    def test_small_components_reported_as_points(self):
        # a steep 3-node strip: one component below the 4-node fit threshold
        u = np.full((3, 3), np.nan)
        u[0, 0], u[1, 0], u[2, 0] = 0.0, 0.2, 0.4
        g = GridGraph(origin=(0, 0), h=0.1, u=u)
        rep = detect_singular(g, tol=0.5)
        assert len(rep.segments) == 1
        assert rep.segments[0].is_point
        assert rep.segments[0].direction is None
