import numpy as np
import pytest

from regime.reproduce import (
    EX21_REFERENCES,
    reproduce_cor31,
    reproduce_ex21,
    reproduce_ex22,
    reproduce_ou,
)


class TestThresholdTables:
    def test_ex21_all_rows_agree(self):
        report = reproduce_ex21()
        assert {row["case"] for row in report["thresholds"]} == set(EX21_REFERENCES)
        assert all(row["agree_1e-6"] for row in report["thresholds"])

    def test_ex22_matches_the_infinite_benchmark(self):
        report = reproduce_ex22()
        np.testing.assert_array_equal(report["bounding_generator"],
                                      [[-1.0, 1.0], [2.0, -2.0]])
        rows = {row["case"]: row for row in report["thresholds"]}
        assert rows["recurrence"]["bisection"] == pytest.approx(
            EX21_REFERENCES["two-class recurrence"], abs=1e-6)
        assert rows["transience"]["bisection"] == pytest.approx(
            EX21_REFERENCES["two-class transience"], abs=1e-6)


class TestSignTables:
    def test_cor31_boundary_sweep(self):
        rows = reproduce_cor31()["boundary_sweep"]
        assert [row["verdict"] for row in rows] == ["recurrent", "recurrent", "transient"]

    def test_ou_verdicts_follow_the_sign(self):
        for row in reproduce_ou()["sign_table"]:
            if row["mu_b"] < -1e-9:
                assert row["verdict"] == "exponentially-ergodic"
            elif row["mu_b"] > 1e-9:
                assert row["verdict"] == "transient"
            else:
                assert row["verdict"] == "inconclusive"


class TestMonteCarloCorroboration:
    def test_ou_mc_summary(self):
        report = reproduce_ou(mc=True)
        summary = report["monte_carlo"][0]
        assert summary["return_fraction"] >= 0.95
