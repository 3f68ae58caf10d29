"""Smoke test for the riefflab extension module."""

import json

import riefflab


def main():
    grid = riefflab.Grid(16)
    assert abs(grid.delta ** 2 * 16 - 2 * 3.141592653589793) < 1e-12

    f = riefflab.Symbol.gaussian(grid, 0.3, -0.2, 0.9)
    g = riefflab.Symbol.gaussian(grid, -0.1, 0.4, 1.1).scale(0.5 - 0.2j)
    assert riefflab.fourier(riefflab.fourier(f)).sup_distance(f) < 1e-10
    assert abs(riefflab.fourier(f).l2_norm() - f.l2_norm()) < 1e-10

    one = riefflab.Symbol.constant(grid, 1.0)
    assert abs(riefflab.weyl_norm(one) - 1.0) < 1e-8
    fg = riefflab.moyal(f, g)
    assert len(fg.samples()) == 16 and len(riefflab.weyl_matrix(fg)) == 16

    sys = riefflab.System("kronecker:0.41421356237309515,0.7320508075688772", 32)
    a, b = sys.monomial(1, 0), sys.monomial(0, 1)
    ab, ba = a.star(b), b.star(a)
    assert abs(ab.sup_norm() - 1.0) < 1e-12
    assert ab.distance(ba) > 0.1

    cfg = riefflab.Config("grid_n=16\nsuites=fourier\n")
    cfg.set("seed", "5")
    assert riefflab.Config(str(cfg)).__str__() == str(cfg)
    report = json.loads(riefflab.run_suite(cfg))
    assert report["schema_version"] == 1 and report["failed"] == 0, report
    rows = riefflab.refinement_study(riefflab.Config(), "prop-2.2", [16, 32])
    assert rows[1][1] * 4 <= rows[0][1]

    try:
        riefflab.Config("suites=bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown suite accepted")

    print("riefflab smoke: ok", len(report["checks"]), "checks")


if __name__ == "__main__":
    main()
