"""CLI: determinism, config hashing, artifact schemas, error surfaces.

Every invocation goes through main(argv) in-process, so exit codes and
stderr/stdout behavior are exactly what a shell user sees.
"""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from blowuplab.cli import (
    PayloadMissingError,
    ResultRecord,
    RunConfig,
    export_plot_data,
    main,
)

COARSE = ["--Rr", "20", "--Rt", "20", "--dr", "0.05", "--dt", "0.05"]


def _read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def _tree_bytes(root):
    return {p.relative_to(root): p.read_bytes()
            for p in sorted(Path(root).rglob("*")) if p.is_file()}


class TestConfig:
    def test_defaults_validate(self):
        cfg = RunConfig()
        assert cfg.n == 7
        assert len(cfg.config_hash) == 64

    def test_hash_ignores_execution_plumbing(self):
        from dataclasses import replace
        base = RunConfig()
        assert replace(base, output_dir="elsewhere").config_hash \
            == base.config_hash
        assert replace(base, threads=8).config_hash == base.config_hash

    def test_hash_tracks_semantic_fields(self):
        from dataclasses import replace
        base = RunConfig()
        assert replace(base, n=8).config_hash != base.config_hash
        assert replace(base, eps=("1/10",)).config_hash != base.config_hash
        assert replace(base, p=1).config_hash != base.config_hash
        assert replace(base, window=(0.5, 10.0)).config_hash \
            != base.config_hash

    def test_file_round_trip(self, tmp_path):
        cfg = RunConfig(n=8, eps=("1/10", "1/100"), p=1)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        loaded = RunConfig.from_file(path)
        assert loaded == cfg
        assert loaded.config_hash == cfg.config_hash

    def test_unknown_fields_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"n": 7, "bogus": 1}))
        with pytest.raises(ValueError, match="unknown config fields"):
            RunConfig.from_file(path)

    def test_semantic_validation(self):
        with pytest.raises(ValueError, match="n must be an integer >= 5"):
            RunConfig(n=3)
        with pytest.raises(ValueError, match="schema version"):
            RunConfig(schema_version=99)
        with pytest.raises(ValueError, match="must be > 0"):
            RunConfig(grid={"R_r": 40.0, "R_t": 40.0, "dr": -1.0,
                            "dt": 0.025, "grading": 4.0})
        with pytest.raises(ValueError, match="eps values must be > 0"):
            RunConfig(eps=("-1/100",))
        with pytest.raises(ValueError, match="p must be 1 or 2"):
            RunConfig(p=3)


class TestExitCodes:
    def test_malformed_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"n": 3}))
        code = main(["exponents", "--config", str(bad),
                     "--output-dir", str(tmp_path / "out")])
        assert code == 2
        assert "[config] error" in capsys.readouterr().err

    def test_unparseable_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(["exponents", "--config", str(bad),
                     "--output-dir", str(tmp_path / "out")])
        assert code == 2
        assert "[config] error" in capsys.readouterr().err

    def test_unknown_config_field_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"mystery": True}))
        code = main(["exponents", "--config", str(bad),
                     "--output-dir", str(tmp_path / "out")])
        assert code == 2
        assert "unknown config fields" in capsys.readouterr().err

    def test_module_errors_carry_the_config_hash(self, tmp_path, capsys):
        code = main(["exponents", "--eps=-1/2",
                     "--output-dir", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        assert "[exponents] error (config " in err

    def test_record_worst_flags_failures(self):
        rec = ResultRecord(run_id="x", config_hash="h", version="0",
                           command="c", statuses={"a": "pass", "b": "flag"},
                           payload={}, files=[])
        assert rec.worst == 0
        rec.statuses["b"] = "fail"
        assert rec.worst == 1


class TestArtifacts:
    def test_corrector_outputs_are_deterministic(self, tmp_path, capsys):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        for d in (d1, d2):
            assert main(["corrector", *COARSE, "--output-dir", str(d)]) == 0
        t1, t2 = _tree_bytes(d1), _tree_bytes(d2)
        assert t1.keys() == t2.keys()
        for name in t1:
            assert t1[name] == t2[name], name
        out = capsys.readouterr().out
        assert "PASS" in out and "record:" in out

    def test_corrector_artifacts(self, tmp_path):
        d = tmp_path / "out"
        assert main(["corrector", *COARSE, "--output-dir", str(d)]) == 0
        header, rows = _read_csv(d / "corrector_grid.csv")
        assert header == ["r", "t", "w"]
        assert len(rows) > 1000
        report = json.loads((d / "corrector_report.json").read_text())
        assert report["discrete_residual"] <= 1e-10
        assert report["pairing"]["value"] <= 0
        record = json.loads((d / "corrector_record.json").read_text())
        assert record["config_hash"]
        assert all(v == "pass" for v in record["statuses"].values())
        assert "corrector_grid.csv" in record["files"]

    def test_integrals_table_schema(self, tmp_path):
        d = tmp_path / "out"
        assert main(["integrals", "--output-dir", str(d)]) == 0
        header, rows = _read_csv(d / "integrals_table.csv")
        assert header == ["m", "alpha", "closed_form", "quadrature",
                          "rel_err", "recursion1_err", "recursion2_err",
                          "recursion3_err"]
        assert len(rows) == 50
        # rows outside a recursion's validity carry empty cells, not zeros
        assert any("" in row for row in rows)

    def test_bubble_profile_schema(self, tmp_path):
        d = tmp_path / "out"
        assert main(["bubble", "--delta", "0.1", "--samples", "5",
                     "--output-dir", str(d)]) == 0
        header, rows = _read_csv(d / "bubble_profile_normal.csv")
        assert header == ["coordinate", "U", "j_1", "j_2", "j_3", "j_4",
                          "j_5", "j_6", "j_7"]
        assert len(rows) == 5
        origin = [float(v) for v in rows[0]]
        assert origin[0] == 0.0
        assert origin[1] == pytest.approx(0.1 ** -2.5)  # delta^{-(n-2)/2}
        assert origin[-1] == pytest.approx(2.5)         # scaling kernel at 0

    def test_exponents_record(self, tmp_path):
        d = tmp_path / "out"
        assert main(["exponents", "--eps", "1/100",
                     "--output-dir", str(d)]) == 0
        record = json.loads((d / "exponents_record.json").read_text())
        ok = [v for v in record["statuses"].values()]
        assert ok and all(v == "pass" for v in ok)
        payload = record["payload"]["exponents"][0]
        assert payload["eps"] == "1/100"
        assert payload["q"] == "1729/1094"
        assert payload["admissible"] is True

    def test_blowup_family_artifacts(self, tmp_path):
        d = tmp_path / "out"
        assert main(["blowup", "family", "--output-dir", str(d)]) == 0
        header, rows = _read_csv(d / "blowup_profiles.csv")
        assert header == ["eps", "delta", "coordinate", "u_value"]
        assert len(rows) == 4 * 7        # four eps values, seven ray samples
        header, rows = _read_csv(d / "blowup_rate.csv")
        assert header == ["eps", "sup_u", "log_fit_residual"]
        assert len(rows) == 4
        cert = json.loads((d / "blowup_certificate.json").read_text())
        assert cert["passed"] is True
        assert cert["rate_target"] == -1.25
        search = json.loads((d / "blowup_search.json").read_text())
        assert search["lambda_star"] == pytest.approx(5.946877083043726,
                                                      rel=1e-9)
        assert np.allclose(search["q_star"], 0.75, atol=1e-4)

    def test_env_output_dir_wins_over_flag(self, tmp_path, monkeypatch):
        d_env, d_flag = tmp_path / "env", tmp_path / "flag"
        monkeypatch.setenv("BLOWUPLAB_OUTPUT_DIR", str(d_env))
        assert main(["energy", "coefficients",
                     "--output-dir", str(d_flag)]) == 0
        assert (d_env / "energy_coefficients.json").exists()
        assert not d_flag.exists()


class TestVerify:
    def test_fast_suite_passes(self, tmp_path, capsys):
        d = tmp_path / "out"
        assert main(["verify", "--output-dir", str(d)]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out
        assert "FAIL" not in out
        record = json.loads((d / "verify_record.json").read_text())
        assert record["statuses"]
        assert all(v in ("pass", "flag")
                   for v in record["statuses"].values())

    def test_export_corrector_grid(self, tmp_path):
        d = tmp_path / "out"
        assert main(["verify", "--export", "corrector-grid",
                     "--output-dir", str(d)]) == 0
        header, rows = _read_csv(d / "export_corrector_grid.csv")
        assert header == ["r", "t", "w"]
        assert len(rows) > 1000

    def test_export_without_payload_exits_2(self, tmp_path, capsys):
        # the fast suite runs only the search, so no rate payload exists
        code = main(["verify", "--export", "rate",
                     "--output-dir", str(tmp_path / "out")])
        assert code == 2
        assert "has no payload 'rate'" in capsys.readouterr().err

    def test_export_unknown_name_raises(self):
        rec = ResultRecord(run_id="x", config_hash="h", version="0",
                           command="c", statuses={}, payload={}, files=[])
        with pytest.raises(PayloadMissingError, match="unknown export"):
            export_plot_data(rec, "nonsense", ".")
