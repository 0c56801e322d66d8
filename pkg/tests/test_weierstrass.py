"""Representation machinery: phi forms, integration, conjugates, mirror."""

import numpy as np
import pytest

from maxsurf import catalog
from maxsurf.errors import (ConfigError, DomainError, PoleError,
                             QuadratureError)
from maxsurf.lorentz import st_inv
from maxsurf.weierstrass import (ComplexMap, ParamDomain, WeierstrassData,
                                 conformal_factor, conjugate_data,
                                 conjugate_immersion, export_csv, export_obj,
                                 integrate_immersion, mirror_residual,
                                 phi_components, singular_scan)


def _data(g, f, kind="rectangle", bounds=(-1, 1, 0, 1), res=(24, 24), **kw):
    return WeierstrassData(g=ComplexMap(g), f=ComplexMap(f),
                           domain=ParamDomain(kind, bounds, res), **kw)


def lorentz_fd_metric(points, hu, hv):
    Xu = (points[2:, 1:-1] - points[:-2, 1:-1]) / (2 * hu)
    Xv = (points[1:-1, 2:] - points[1:-1, :-2]) / (2 * hv)

    def lor(a, b):
        return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]

    return Xu, Xv, lor


class TestPhiComponents:
    def test_helicoid_at_zero(self):
        data = catalog.get_model("helicoid").weierstrass(resolution=(8, 8))
        p1, p2, p3 = phi_components(data, 0.0)
        assert p1 == pytest.approx(0.0, abs=1e-15)
        assert p2 == pytest.approx(1.0, abs=1e-15)
        assert p3 == pytest.approx(-1j, abs=1e-15)

    def test_catenoid_printed_data_at_one(self):
        # the +i dz/z normalization of the height form (hand substitution)
        data = _data(lambda z: np.asarray(z, complex),
                     lambda z: 1j / np.asarray(z, complex),
                     kind="annulus-sector", bounds=(0.5, 2, -1, 1))
        p1, p2, p3 = phi_components(data, 1.0)
        assert p1 == pytest.approx(0.0, abs=1e-15)
        assert p2 == pytest.approx(-1.0, abs=1e-15)
        assert p3 == pytest.approx(1j, abs=1e-15)

    def test_unit_modulus_gauss_degenerates(self):
        # |g| = 1: the real parts of (phi1, phi2, i phi3) span a degenerate
        # frame; the conformal factor vanishes there
        data = catalog.get_model("helicoid").weierstrass(resolution=(8, 8))
        assert conformal_factor(data, 0.3) == pytest.approx(0.0, abs=1e-30)

    def test_pole_guard(self):
        data = _data(lambda z: np.asarray(z, complex) * 1e-12,
                     lambda z: np.ones_like(np.asarray(z, complex)))
        with pytest.raises(PoleError):
            phi_components(data, 0.5)


class TestIntegration:
    @pytest.mark.parametrize("name", ["helicoid", "catenoid", "enneper1", "enneper2"])
    def test_matches_closed_form(self, name):
        model = catalog.get_model(name)
        data = model.weierstrass(resolution=(48, 40))
        imm = integrate_immersion(data)
        U, V = np.meshgrid(imm.u, imm.v, indexing="ij")
        exact = catalog.param_grid(model, U, V)
        assert np.abs(imm.points - exact).max() < 1e-10

    def test_path_independence(self):
        data = catalog.get_model("enneper1").weierstrass(resolution=(24, 24))
        a = integrate_immersion(data, order="hv")
        b = integrate_immersion(data, order="vh")
        assert np.abs(a.points - b.points).max() < 1e-10

    def test_coordinates_discretely_harmonic(self):
        data = catalog.get_model("helicoid").weierstrass(
            bounds=(0.0, 1.0, 0.2, 1.2), resolution=(41, 41))
        imm = integrate_immersion(data)
        X = imm.points
        h = imm.u[1] - imm.u[0]
        lap = (X[2:, 1:-1] + X[:-2, 1:-1] + X[1:-1, 2:] + X[1:-1, :-2]
               - 4 * X[1:-1, 1:-1]) / h ** 2
        assert np.abs(lap).max() < 5 * h ** 2 * np.abs(X).max()

    def test_conformality_away_from_singular_set(self):
        data = catalog.get_model("helicoid").weierstrass(
            bounds=(0.0, 1.0, 0.5, 1.5), resolution=(81, 81))
        imm = integrate_immersion(data)
        hu, hv = imm.spacing()
        Xu, Xv, lor = lorentz_fd_metric(imm.points, hu, hv)
        E = lor(Xu, Xu)
        F = lor(Xu, Xv)
        G = lor(Xv, Xv)
        assert np.abs(F).max() < 5e-3
        assert np.abs(E - G).max() < 5e-3
        # spacelike: first fundamental form positive definite off S_X
        assert E.min() > 0
        assert (E * G - F ** 2).min() > 0

    def test_gauss_map_lorentz_orthogonal_to_tangents(self):
        data = catalog.get_model("enneper2").weierstrass(
            bounds=(0.3, 1.2, 0.4, 1.6), resolution=(61, 61))
        imm = integrate_immersion(data)
        hu, hv = imm.spacing()
        Xu, Xv, lor = lorentz_fd_metric(imm.points, hu, hv)
        g = imm.gauss[1:-1, 1:-1]
        sel = np.abs(g) < 1 - 1e-3
        N = st_inv(g[sel])
        for T in (Xu[sel], Xv[sel]):
            dots = N[..., 0] * T[..., 0] + N[..., 1] * T[..., 1] - N[..., 2] * T[..., 2]
            assert np.abs(dots).max() < 5e-3

    def test_conformal_factor_against_fd_metric(self):
        # fixes the 1/4 constant: lambda equals |dX/du|^2 from the closed form
        data = catalog.get_model("helicoid").weierstrass(resolution=(12, 12))
        v = 1.0
        lam = conformal_factor(data, 1j * v)
        eps = 1e-6
        hel = catalog.get_model("helicoid")
        du = (catalog.param_grid(hel, np.array(eps), np.array(v))
              - catalog.param_grid(hel, np.array(-eps), np.array(v))) / (2 * eps)
        fd = du[0] ** 2 + du[1] ** 2 - du[2] ** 2
        assert lam == pytest.approx(fd, rel=1e-8)
        assert lam == pytest.approx(np.sinh(v) ** 2, rel=1e-12)

    def test_phi_forms_have_no_common_zero(self):
        for name in ("helicoid", "catenoid", "enneper1", "enneper2"):
            data = catalog.get_model(name).weierstrass(resolution=(16, 16))
            U, V = data.domain.grid()
            z = data.domain.to_z(U, V)
            p1, p2, p3 = phi_components(data, z)
            mag = np.abs(p1) + np.abs(p2) + np.abs(p3)
            assert mag.min() > 1e-12


class TestConjugate:
    def test_helicoid_conjugate_is_catenoid_covering(self):
        data = catalog.get_model("helicoid").weierstrass(resolution=(40, 36))
        conj = conjugate_immersion(data)
        U, V = np.meshgrid(conj.u, conj.v, indexing="ij")
        # covering correspondence (m, s) = (e^v, u); third coordinate is v
        cov = catalog.param_grid(catalog.get_model("catenoid"), np.exp(V), U)
        assert np.abs(conj.points - cov).max() < 1e-10
        assert np.abs(conj.points[..., 2] - V).max() < 1e-10

    def test_e1_conjugate_is_e2(self):
        data = catalog.get_model("enneper1").weierstrass(resolution=(40, 36))
        conj = conjugate_immersion(data)
        U, V = np.meshgrid(conj.u, conj.v, indexing="ij")
        e2 = catalog.param_grid(catalog.get_model("enneper2"), U, V)
        # rigid alignment: the point reflection x -> -x
        assert np.abs(conj.points + e2).max() < 1e-10

    def test_conjugate_twice_is_minus_x(self):
        data = catalog.get_model("enneper1").weierstrass(resolution=(24, 24))
        imm = integrate_immersion(data)
        twice = conjugate_immersion(conjugate_data(data))
        diff = twice.points + imm.points
        # equal up to one affine (translation) alignment
        offset = diff[0, 0]
        assert np.abs(diff - offset).max() < 1e-10

    def test_conjugate_data_matches_conjugate_immersion(self):
        data = catalog.get_model("helicoid").weierstrass(resolution=(16, 16))
        a = conjugate_immersion(data)
        b = integrate_immersion(conjugate_data(data))
        assert np.abs(a.points - b.points).max() < 1e-12


class TestMirror:
    def test_helicoid_and_e1_mirror_residuals_vanish(self):
        for name in ("helicoid", "enneper1"):
            data = catalog.get_model(name).weierstrass(resolution=(24, 24))
            rg, rf = mirror_residual(data)
            assert rg < 1e-12
            assert rf < 1e-12

    def test_perturbed_gauss_map_detected(self):
        data = _data(lambda z: 1.1 * np.exp(1j * np.asarray(z, complex)),
                     lambda z: np.full_like(np.asarray(z, complex), -1j),
                     mirror="conjugate")
        rg, rf = mirror_residual(data)
        assert rg > 0.1

    def test_inversion_mirror_formula(self):
        # g = z, f = c/z with real c: conj(g) g(1/conj z) = 1 and
        # f(1/conj z) * (-1/conj(z)^2) = -conj(f(z)) hold exactly
        data = _data(lambda z: np.asarray(z, complex),
                     lambda z: 0.7 / np.asarray(z, complex),
                     kind="annulus-sector", bounds=(0.5, 2.0, 0.1, 1.0),
                     mirror="inversion")
        rg, rf = mirror_residual(data)
        assert rg < 1e-12
        assert rf < 1e-12

    def test_missing_mirror_raises(self):
        data = catalog.get_model("catenoid").weierstrass(resolution=(8, 8))
        with pytest.raises(ConfigError):
            mirror_residual(data)


class TestSingularScan:
    def test_helicoid_flags_exactly_the_boundary_edge(self):
        data = catalog.get_model("helicoid").weierstrass(
            bounds=(-1.0, 1.0, 0.0, 1.0), resolution=(21, 17))
        imm = integrate_immersion(data)
        comps = singular_scan(imm, tol=1e-10)
        assert len(comps) == 1
        idx = comps[0].indices
        assert set(idx[:, 1]) == {0}          # v = 0 edge only
        assert len(idx) == 21

    def test_catenoid_flags_unit_circle(self):
        data = catalog.get_model("catenoid").weierstrass(
            bounds=(0.5, 1.5, -1.0, 1.0), resolution=(21, 9))
        imm = integrate_immersion(data)
        comps = singular_scan(imm, tol=1e-10)
        assert len(comps) == 1
        assert np.allclose(comps[0].params[:, 0], 1.0)

    def test_plane_scan_empty(self):
        data = catalog.get_model("plane").weierstrass(resolution=(9, 9))
        imm = integrate_immersion(data)
        assert singular_scan(imm, tol=1e-8) == []


class TestDomainAndExport:
    def test_param_domain_validation(self):
        with pytest.raises(DomainError):
            ParamDomain("rectangle", (1, 0, 0, 1), (4, 4))
        with pytest.raises(DomainError):
            ParamDomain("upper-half-rectangle", (0, 1, -0.5, 1), (4, 4))
        with pytest.raises(DomainError):
            ParamDomain("annulus-sector", (0.0, 1, 0, 1), (4, 4))
        with pytest.raises(DomainError):
            ParamDomain("rectangle", (0, 1, 0, 1), (1, 4))
        with pytest.raises(DomainError):
            ParamDomain("hexagon", (0, 1, 0, 1), (4, 4))

    def test_complex_map_derivative_matches_fd(self):
        data = catalog.get_model("enneper1").weierstrass(resolution=(8, 8))
        zs = np.array([0.3 + 0.4j, 1.0 + 0.2j, 0.1 + 1.1j])
        eps = 1e-6
        fd = (data.g(zs + eps) - data.g(zs - eps)) / (2 * eps)
        assert np.abs(data.g.derivative(zs) - fd).max() < 1e-6 * np.abs(fd).max() + 1e-9

    def test_obj_and_csv_export(self, tmp_path):
        data = catalog.get_model("helicoid").weierstrass(resolution=(5, 4))
        imm = integrate_immersion(data)
        obj = tmp_path / "h.obj"
        export_obj(imm, obj)
        lines = obj.read_text().strip().splitlines()
        assert sum(1 for ln in lines if ln.startswith("v ")) == 20
        assert sum(1 for ln in lines if ln.startswith("f ")) == 12
        csv = tmp_path / "h.csv"
        export_csv(imm, csv)
        body = csv.read_text().splitlines()
        assert body[0] == "u,v,x1,x2,t,re_g,im_g,lambda"
        assert len(body) == 1 + 20
        # shortest-repr floats round-trip exactly
        tok = body[1].split(",")
        assert float(tok[2]) == imm.points[0, 0, 0]


class TestQuadratureFailure:
    def test_near_pole_on_path_exhausts_refinement(self):
        # integrand with a spike 1e-9 off the bottom-row path: 14 bisections
        # cannot localize it, so the tolerance is unreachable
        data = _data(lambda z: np.full_like(np.asarray(z, complex), 0.5),
                     lambda z: 1.0 / (np.asarray(z, complex) - (0.5 + 1e-9j)),
                     bounds=(0, 1, 0, 1), res=(9, 9))
        with pytest.raises(QuadratureError):
            integrate_immersion(data)
