"""Acceptance gate: one PASS/FAIL line per criterion, at the required tolerances."""

import json
import subprocess
import sys

import pytest

from acceptance_suite import CRITERIA, SEED, cached_report, report_bytes, run_all


def _line(number, name, result):
    status = "PASS" if result["pass"] else "FAIL"
    if "expected" in result:
        extra = f" (target {result['expected']:g} ± {result['threshold']:g})"
    elif result["threshold"] is None:
        extra = ""
    else:
        extra = f" (threshold {result['threshold']:.3g})"
    return f"{status} criterion {number}: {name}: value {result['value']:.6g}{extra}"


@pytest.mark.parametrize("number,name", [(n, name) for n, name, _ in CRITERIA])
def test_criterion(number, name, record_acceptance):
    result = cached_report()[str(number)]
    record_acceptance(_line(number, name, result))
    assert result["pass"], json.dumps(result, default=float, ensure_ascii=False)


def _cli_bytes(tmp_path, tag):
    out = tmp_path / tag
    cmds = [
        ["verify-g2", "--points", "10"],
        ["trace", "so3xso2", "--C", "0", "--resolution", "64"],
        ["integrate", "so3irr", "--length", "3"],
    ]
    blobs = []
    for cmd in cmds:
        proc = subprocess.run(
            [sys.executable, "-m", "coassoc.cli", *cmd, "--seed", "7", "--out", str(out / cmd[0])],
            capture_output=True,
            check=True,
        )
        blobs.append(proc.stdout)
    for path in sorted(out.rglob("*")):
        if path.is_file():
            blobs.append(path.relative_to(out).as_posix().encode() + b"\0" + path.read_bytes())
    return b"\n".join(blobs)


def test_criterion_11_determinism(tmp_path, record_acceptance):
    first = report_bytes(cached_report())
    second = report_bytes(run_all(SEED))
    cli_same = _cli_bytes(tmp_path, "a") == _cli_bytes(tmp_path, "b")
    passed = first == second and cli_same
    status = "PASS" if passed else "FAIL"
    record_acceptance(f"{status} criterion 11: determinism: suite report and CLI outputs byte-identical across runs")
    assert first == second
    assert cli_same
