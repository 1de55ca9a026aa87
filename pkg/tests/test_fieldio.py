from __future__ import annotations

import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from framework.errors import InvariantError
from framework.fieldio import (
    MEANFIELD_HEADER,
    NEGATIVITY_HEADER,
    meanfield_rows,
    read_field_csv,
    read_json,
    read_rows,
    write_field_csv,
    write_json,
    write_rows,
)
from framework.meanfield import run_meanfield
from framework.models import InitialCondition, ModelParams, MomentumGrid, PDist, product_field
from framework.qmat import QubitDensity
from framework.solvers import propagate_closed


class FieldCsvTests(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_values_survive_the_file(self) -> None:
        grid = MomentumGrid(-8.0, 8.0, 64)
        init = InitialCondition(
            rho0=QubitDensity.from_bloch(0.3, -0.2, 0.4), p_dist=PDist.gaussian(0.5, 1.0), q0=0.7
        )
        params = ModelParams(lam=1.0, q=0.7)
        fld = propagate_closed(product_field(init, grid), params, 0.3)
        path = self.dir / "fields" / "field_000.csv"
        write_field_csv(path, fld, params)
        back = read_field_csv(path)
        np.testing.assert_array_equal(back.values, fld.values)
        self.assertEqual((back.t, back.q), (fld.t, 0.7))
        self.assertEqual(back.grid, grid)
        self.assertTrue(path.read_text(encoding="utf-8").startswith("# t=0.3 q=0.7\n"))

    def test_rejects_foreign_csv(self) -> None:
        path = self.dir / "other.csv"
        write_rows(path, NEGATIVITY_HEADER, [(0.0, 0.0, 0.0)])
        with self.assertRaises(InvariantError):
            read_field_csv(path)

    def test_identical_input_gives_identical_bytes(self) -> None:
        rows = [(0.1, -1e-3, 0.0), (1.0 / 3.0, -0.0785, 2.5e-17)]
        write_rows(self.dir / "a.csv", NEGATIVITY_HEADER, rows)
        write_rows(self.dir / "b.csv", NEGATIVITY_HEADER, rows)
        self.assertEqual((self.dir / "a.csv").read_bytes(), (self.dir / "b.csv").read_bytes())
        header, back = read_rows(self.dir / "a.csv")
        self.assertEqual(header, NEGATIVITY_HEADER)
        self.assertEqual(back[1][0], 1.0 / 3.0)

    def test_meanfield_rows(self) -> None:
        init = InitialCondition(rho0=QubitDensity.named("zero"), p_dist=PDist.delta(0.0))
        rows = meanfield_rows(run_meanfield(init, ModelParams(lam=1.0), 1.0, 0.5))
        self.assertEqual(len(rows[0]), len(MEANFIELD_HEADER))
        self.assertEqual([r[0] for r in rows], [0.0, 0.5, 1.0])
        self.assertAlmostEqual(rows[-1][1], -1.0, places=12)
        self.assertAlmostEqual(rows[-1][-1], 1.0, places=12)


class JsonTests(unittest.TestCase):
    def test_non_finite_values_become_strings(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "summary.json"
            write_json(
                path,
                {"b": math.inf, "a": [np.float64(-math.inf), math.nan], "c": {"n": np.int64(3)}},
            )
            text = path.read_text(encoding="utf-8")
            loaded = read_json(path)
        self.assertEqual(loaded, {"a": ["-inf", "nan"], "b": "inf", "c": {"n": 3}})
        self.assertLess(text.index('"a"'), text.index('"b"'))


if __name__ == "__main__":
    unittest.main()
