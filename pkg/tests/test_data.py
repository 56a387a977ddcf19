import math

import numpy as np
import pytest

from srcond.data import Dataset, DatasetError, DatasetSpec, generate, load, load_csv, pagie_grid


def test_pagie_grid():
    X = pagie_grid()
    assert X.shape == (676, 2)
    axis = np.unique(X[:, 0])
    assert len(axis) == 26 and axis[0] == -5.0 and axis[-1] == pytest.approx(5.0)
    np.testing.assert_allclose(np.diff(axis), 0.4)
    ds = generate("pagie")
    i = np.flatnonzero((np.isclose(ds.X[:, 0], 1.0)) & (np.isclose(ds.X[:, 1], -1.0)))[0]
    assert ds.y[i] == pytest.approx(1.0)  # 1/(1+1) + 1/(1+1)


@pytest.mark.parametrize("name,d,n", [("kotanchek", 2, 100), ("pagie", 2, 676), ("poly-10", 10, 250),
                                      ("Salustowicz2D", 2, 600)])
def test_default_shapes(name, d, n):
    ds = generate(name)
    assert (ds.d, ds.n) == (d, n)
    assert np.all(np.isfinite(ds.y))


def test_target_formulas_pointwise():
    ds = generate(DatasetSpec("kotanchek", n=5, seed=1))
    x1, x2 = ds.X[0]
    assert ds.y[0] == pytest.approx(math.exp(-(x1 - 1) ** 2) / (1.2 + (x2 - 2.5) ** 2))
    ds = generate(DatasetSpec("poly10", n=3, seed=2))
    x = ds.X[1]
    want = x[0] * x[1] + x[2] * x[3] + x[4] * x[5] + x[0] * x[6] * x[8] + x[2] * x[5] * x[9]
    assert ds.y[1] == pytest.approx(want)
    ds = generate(DatasetSpec("salustowicz2d", n=3, seed=3))
    x, y = ds.X[2]
    want = math.exp(-x) * x**3 * math.cos(x) * math.sin(x) * (math.cos(x) * math.sin(x) ** 2 - 1) * (y - 5)
    assert ds.y[2] == pytest.approx(want)


def test_generation_is_seeded():
    a = generate(DatasetSpec("kotanchek", seed=4))
    b = generate(DatasetSpec("kotanchek", seed=4))
    c = generate(DatasetSpec("kotanchek", seed=5))
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)


def test_errors():
    with pytest.raises(DatasetError):
        generate("airfoil")
    with pytest.raises(DatasetError):
        generate(DatasetSpec("pagie", n=100))
    with pytest.raises(DatasetError):
        Dataset(np.ones((3, 2)), np.ones(2), ("a", "b"))
    with pytest.raises(DatasetError):
        Dataset(np.array([[np.nan]]), np.ones(1), ("a",))
    with pytest.raises(DatasetError):
        load("nothing-here")


def test_load_csv(tmp_path):
    p = tmp_path / "tower.csv"
    p.write_text("a,b,target\n1,2,3\n4,5,6\n\n7,8,9\n")
    ds = load_csv(p)
    assert ds.names == ("a", "b") and ds.n == 3
    np.testing.assert_array_equal(ds.y, [3, 6, 9])
    ds = load(str(p), target_column="a")
    assert ds.names == ("b", "target")
    np.testing.assert_array_equal(ds.y, [1, 4, 7])
    with pytest.raises(DatasetError, match="expected d=5"):
        load_csv(p, expected=(5, 1503))


@pytest.mark.parametrize("body,msg", [("a,b\n1,2\n3\n", ":3:"), ("a,b\n1,x\n", ":2:"), ("", "empty"),
                                      ("a,b\n", "no data"), ("a,b\n1,inf\n", "non-finite")])
def test_load_csv_errors(tmp_path, body, msg):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DatasetError, match=msg):
        load_csv(p)


def test_missing_target(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(DatasetError, match="target column"):
        load_csv(p, "c")
    with pytest.raises(DatasetError):
        load_csv(tmp_path / "absent.csv")


def test_reference_values():
    from srcond.data import kotanchek, pagie, poly10, salustowicz2d

    assert kotanchek(1.0, 2.5) == pytest.approx(1.0 / 1.2)
    assert salustowicz2d(math.pi, 5.0) == 0.0
    assert poly10(np.zeros((1, 10)))[0] == 0.0
    X = pagie_grid()
    np.testing.assert_array_equal(pagie(X[:, 0], X[:, 1]), pagie(X[:, 1], X[:, 0]))
    assert not np.any(X == 0.0)


def test_toy_csv_shape(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("a,y,b\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n")
    ds = load_csv(p, "y", expected=(2, 4))
    assert ds.names == ("a", "b")
    np.testing.assert_array_equal(ds.y, [2, 5, 8, 11])


def test_fetch_script_converts(tmp_path):
    import subprocess
    import sys
    from pathlib import Path

    src = tmp_path / "raw.dat"
    src.write_text("".join(f"{800 + i}\t0\t0.3048\t71.3\t0.00266337\t{126.2 + i}\n" for i in range(8)))
    dest = tmp_path / "airfoil.csv"
    script = Path(__file__).parents[1] / "scripts" / "fetch_airfoil.py"
    subprocess.run([sys.executable, str(script), str(dest), "--url", src.as_uri(), "--rows", "5"],
                   check=True, capture_output=True)
    ds = load_csv(dest, expected=(5, 5))
    assert ds.names[0] == "frequency"
    assert np.all(np.diff(ds.X[:, 0]) > 0)
