from __future__ import annotations

import subprocess
import sys
from pathlib import Path

from conftest import GOLDEN_DIR


def run_repl(stdin_text: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "scholarchat.cli", "repl"],
        input=stdin_text,
        capture_output=True,
        text=True,
        timeout=120,
    )


class TestRepl:
    def test_scripted_session_matches_golden(self):
        script = (
            "when is the deadline for acl 2020\n"
            "who wrote sparse attention for efficient decoding\n"
            "which keynotes are at naacl 2019\n"
            ":quit\n"
        )
        proc = run_repl(script)
        assert proc.returncode == 0
        golden = (GOLDEN_DIR / "repl_transcript.txt").read_text(encoding="utf-8")
        assert proc.stdout == golden

    def test_quit_emits_survey_prompt_and_exits_zero(self):
        proc = run_repl(":quit\n")
        assert proc.returncode == 0
        assert "before you go" in proc.stdout

    def test_state_before_any_turn(self):
        proc = run_repl(":state\n:quit\n")
        assert proc.returncode == 0
        assert proc.stdout.startswith("no turns yet")


class TestBuildDatasetCommand:
    def test_writes_dataset_and_stats(self, tmp_path):
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "scholarchat.cli",
                "build-dataset",
                "--out",
                str(tmp_path / "out"),
            ],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        out = tmp_path / "out"
        assert (out / "train.tsv").exists()
        assert (out / "test.tsv").exists()
        stats = (out / "stats.yaml").read_text()
        assert "human_templates" in stats and "added_templates" in stats
