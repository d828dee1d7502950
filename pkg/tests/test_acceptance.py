"""One test per exit criterion, driven through ``bellhv verify``.

The report of ``verify --seed 42`` is produced once per session with one
worker and once with eight; each criterion test checks its own line and
prints it, and the reproducibility test compares the two reports byte for byte.
Runtime budgets are enforced inside the criteria themselves.
"""

import subprocess
import sys

import pytest

from bellhv.acceptance import CRITERIA

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance


def _verify(workers):
    proc = subprocess.run(
        [sys.executable, "-m", "bellhv", "verify", "--seed", "42", "--workers", str(workers)],
        capture_output=True,
        check=False,
    )
    return proc.returncode, proc.stdout


@pytest.fixture(scope="module")
def reports():
    return _verify(1), _verify(8)


def _line(report: bytes, number: int) -> str:
    for line in report.decode().splitlines():
        if line.startswith(("[PASS]", "[FAIL]")) and int(line[7:9]) == number:
            return line
    raise AssertionError(f"criterion {number} missing from report")


@pytest.mark.parametrize("number", [c.number for c in CRITERIA], ids=[f"c{c.number:02d}" for c in CRITERIA])
def test_criterion(reports, number):
    (_, report), _ = reports
    line = _line(report, number)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert line.startswith("[PASS]"), line


def test_criterion_10_cli_byte_identical(reports):
    (code1, one), (code8, eight) = reports
    same = one == eight and code1 == code8
    line = f"[{'PASS' if same else 'FAIL'}] 10 reproducibility (CLI): verify --seed 42 reports for 1 and 8 workers byte-identical: {same}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert same


def test_verify_exit_code_reflects_report(reports):
    (code, report), _ = reports
    failed = "FAILED criteria" in report.decode()
    assert code == (1 if failed else 0)
