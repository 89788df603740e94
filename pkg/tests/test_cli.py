import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from photonnet.cli import EXIT_CONTRACT, EXIT_OK, EXIT_VALIDATION, main

EXAMPLES = Path(__file__).resolve().parents[1] / "docs" / "examples"


class TestCommands:
    def test_run_is_deterministic(self, tmp_path, capsys):
        src = EXAMPLES / "beam_splitter_fock.json"
        assert main(["run", str(src), "--output", str(tmp_path / "a.csv")]) == EXIT_OK
        assert main(["run", str(src), "--output", str(tmp_path / "b.csv"), "--threads", "2"]) == EXIT_OK
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_run_json_to_stdout(self, capsys):
        assert main(["run", str(EXAMPLES / "single_photon_apd.json"), "--out", "json"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert [p["value"] for p in data["points"]] == [0.0, 0.5, 1.0]

    def test_override(self, capsys):
        args = ["run", str(EXAMPLES / "single_photon_apd.json"), "--out", "json",
                "--sweep-override", "sweep.values=[0.25]"]
        assert main(args) == EXIT_OK
        (point,) = json.loads(capsys.readouterr().out)["points"]
        assert point["marginals"]["D1"] == pytest.approx(0.25)

    def test_report_writes_files(self, tmp_path, capsys):
        assert main(["report", str(EXAMPLES / "coherent_energy_sweep.json"), "--out-dir", str(tmp_path),
                     "--stem", "coh"]) == EXIT_OK
        for ext in ("csv", "json", "png"):
            assert (tmp_path / f"coh.{ext}").stat().st_size > 0
        assert (tmp_path / "coh.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_validation_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"schema_version": 1}')
        assert main(["run", str(bad)]) == EXIT_VALIDATION
        assert "error:" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "none.json")]) == EXIT_VALIDATION

    def test_contract_exit_code(self, tmp_path, capsys):
        data = json.loads((EXAMPLES / "coherent_energy_sweep.json").read_text())
        data.pop("sweep", None)
        data["source"]["mean_photons"] = 200.0
        path = tmp_path / "bright.json"
        path.write_text(json.dumps(data))
        code = main(["run", str(path)])
        assert code in (EXIT_VALIDATION, EXIT_CONTRACT)
        assert "limit" in capsys.readouterr().err

    def test_verify(self, capsys):
        assert main(["verify", "--cases", "20", "--seed", "5"]) == EXIT_OK
        assert "20/20" in capsys.readouterr().out

    def test_verify_failure_exit_code(self, capsys):
        assert main(["verify", "--cases", "3", "--tol", "-1"]) == EXIT_CONTRACT

    def test_schema(self, capsys):
        assert main(["schema"]) == EXIT_OK
        assert "properties" in json.loads(capsys.readouterr().out)


@pytest.mark.skipif(shutil.which("photonnet") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["photonnet", "schema"], capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["title"] == "Experiment"
