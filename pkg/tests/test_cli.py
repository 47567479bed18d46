import json
import math

import numpy as np
import pytest

from regime.cli import main
from regime.errors import ParseError, SchemaError
from regime.modelfile import compile_rate_expr, load_model, parse_model
from regime.reproduce import benchmark_documents, emit_models


def write_model(tmp_path, doc, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def ex21_doc(kappa, cutpoints):
    return {
        "regimes": "infinite",
        "q": {"kind": "birth-death", "a": 2.0, "b": 1.0, "K0": 1},
        "lyapunov": {"beta_values": [kappa - 1.0 / j for j in range(1, 9)],
                     "beta_tail_limit": kappa, "tag": "to-infinity"},
        "partition": {"cutpoints": cutpoints},
    }


class TestRateExpressions:
    def test_vectorised_evaluation(self):
        fn = compile_rate_expr("2*(1+2*x)/(2*(1+x))")
        xs = np.array([0.0, 1.0, 100.0])
        np.testing.assert_allclose(fn(xs), (1 + 2 * xs) / (1 + xs))

    def test_functions_and_constants(self):
        fn = compile_rate_expr("exp(-x) + sqrt(x) + pi")
        assert fn(np.array([1.0]))[0] == pytest.approx(math.exp(-1) + 1 + math.pi)

    def test_rejects_names_and_calls(self):
        for bad in ("__import__('os')", "x.real", "lambda: 1", "open('f')", "y + 1"):
            with pytest.raises(ParseError):
                compile_rate_expr(bad)


class TestModelParsing:
    def test_unknown_key_rejected(self, tmp_path):
        doc = benchmark_documents()["ou"]
        doc["surprise"] = 1
        with pytest.raises(SchemaError):
            parse_model(doc)

    def test_nested_unknown_key_rejected(self):
        doc = benchmark_documents()["ou"]
        doc["q"]["extra"] = []
        with pytest.raises(SchemaError):
            parse_model(doc)

    def test_nonfinite_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"regimes": 2, "q": {"kind": "matrix", "entries": '
                        '[[-1, 1], [2, NaN]]}}', encoding="utf-8")
        with pytest.raises(ParseError):
            load_model(path)

    def test_matrix_shape_checked(self):
        with pytest.raises(SchemaError):
            parse_model({"regimes": 3,
                         "q": {"kind": "matrix", "entries": [[-1, 1], [2, -2]]}})

    def test_benchmark_documents_parse(self):
        for name, doc in benchmark_documents().items():
            model = parse_model(doc, source=name)
            assert model.q_kind in ("matrix", "rates", "birth-death")

    def test_emitted_models_round_trip(self, tmp_path):
        docs = benchmark_documents()
        for path in emit_models(tmp_path):
            with open(path, encoding="utf-8") as fh:
                assert json.load(fh) == docs[path.stem]
            load_model(path)


class TestClassifyCommand:
    def test_ou_model_is_conclusive(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["ou"])
        out_file = tmp_path / "report.json"
        assert main(["classify", path, "--out", str(out_file)]) == 0
        report = json.loads(out_file.read_text())
        assert report["verdict"] == "exponentially-ergodic"
        assert report["criterion"] == "prop22"

    def test_cor31_model_first_in_auto_order(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["cor31"])
        assert main(["classify", path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["criterion"] == "cor31"
        assert report["verdict"] == "recurrent"

    def test_infinite_benchmark_recurrent(self, tmp_path, capsys):
        path = write_model(tmp_path, ex21_doc(0.5, [-0.5, 0.5]))
        assert main(["classify", path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["criterion"] == "thm24"
        assert report["verdict"] == "recurrent"

    def test_infinite_benchmark_between_thresholds(self, tmp_path, capsys):
        for cuts in ([0.65 - 1.0, 0.65], [0.65 - 1.0, 0.65 - 0.5, 0.65]):
            path = write_model(tmp_path, ex21_doc(0.65, cuts))
            assert main(["classify", path]) == 2
            report = json.loads(capsys.readouterr().out)
            assert report["verdict"] == "inconclusive"

    def test_state_dependent_model(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["ex22"])
        assert main(["classify", path, "--criterion", "thm23"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["verdict"] == "exponentially-ergodic"

    def test_requested_criterion_must_apply(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["ou"])
        assert main(["classify", path, "--criterion", "thm24"]) == 1

    def test_schema_error_exits_one(self, tmp_path, capsys):
        doc = benchmark_documents()["ou"]
        doc["mystery"] = True
        path = write_model(tmp_path, doc)
        assert main(["classify", path]) == 1

    def test_text_rendering_lists_fields(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["ou"])
        out_file = tmp_path / "report.json"
        assert main(["classify", path, "--text", "--out", str(out_file)]) == 0
        text = capsys.readouterr().out
        report = json.loads(out_file.read_text())
        assert "verdict" in text and report["verdict"] in text
        assert "criterion" in text and report["criterion"] in text


class TestSimulateCommand:
    def test_same_seed_same_output(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["ou"])
        args = ["simulate", path, "--x0", "3", "--r0", "1", "--T", "2.0",
                "--dt", "0.01", "--trials", "100", "--seed", "5"]
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_zero_trials_usage_error(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["ou"])
        code = main(["simulate", path, "--x0", "3", "--r0", "1", "--T", "1.0",
                     "--dt", "0.01", "--trials", "0"])
        assert code == 1

    def test_state_dependent_simulation(self, tmp_path, capsys):
        path = write_model(tmp_path, benchmark_documents()["ex22"])
        out = tmp_path / "sim.json"
        assert main(["simulate", path, "--x0", "5", "--r0", "1", "--T", "3.0",
                     "--dt", "0.001", "--trials", "100", "--seed", "2",
                     "--out", str(out)]) == 0
        report = json.loads(out.read_text())["simulation"]
        assert report["trials"] == 100
        assert 0.0 <= report["return_fraction"] <= 1.0


class TestReproduceCommand:
    def test_ex21_table(self, tmp_path, capsys):
        assert main(["reproduce", "ex21", "--out", str(tmp_path), "--json"]) == 0
        report = json.loads((tmp_path / "ex21.json").read_text())
        cases = {row["case"]: row for row in report["thresholds"]}
        assert cases["two-class recurrence"]["agree_1e-6"]
        assert cases["three-class transience"]["agree_1e-6"]

    def test_emit_models_round_trip(self, tmp_path, capsys):
        assert main(["reproduce", "ou", "--out", str(tmp_path),
                     "--emit-models", "--json"]) == 0
        docs = benchmark_documents()
        for stem in docs:
            with open(tmp_path / "models" / f"{stem}.json", encoding="utf-8") as fh:
                assert json.load(fh) == docs[stem]


class TestThresholdsCommand:
    def test_benchmark_pair(self, capsys):
        assert main(["thresholds", "2", "1"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["kappa_rec"] == pytest.approx(2 - math.sqrt(2))
        assert report["kappa_trans"] == pytest.approx(math.sqrt(3) - 1)

    def test_invalid_rates(self, capsys):
        assert main(["thresholds", "1", "2"]) == 1

    def test_unknown_command_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1
