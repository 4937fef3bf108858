"""Acceptance suite: one PASS/FAIL line per criterion.

Runs ``python3 -m ballthrow selftest`` twice with the same seed in
sequential subprocesses. Criteria 1-10 come from the first report,
criterion 11 is byte identity of the two reports. Runtime limits are
checked against the per-criterion timings logged on stderr.
"""

import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

SEED = 20240601
IDS = list(range(1, 12))
_TIMING = re.compile(r"^criterion (\d+): (PASS|FAIL) \(([\d.]+) s\)$")


def _selftest(path):
    res = subprocess.run(
        [sys.executable, "-m", "ballthrow", "selftest", "--seed", str(SEED),
         "--output", str(path)],
        capture_output=True, text=True)
    timings = {}
    for line in res.stderr.splitlines():
        m = _TIMING.match(line.strip())
        if m:
            timings[int(m.group(1))] = float(m.group(3))
    return res.returncode, timings


def _evaluate(tmp):
    first, second = Path(tmp) / "a.json", Path(tmp) / "b.json"
    code, timings = _selftest(first)
    _selftest(second)
    results = {}
    if first.exists():
        for c in json.loads(first.read_text())["report"]["criteria"]:
            limit = c["runtime_limit_s"]
            elapsed = timings.get(c["id"])
            in_time = limit is None or (elapsed is not None and elapsed <= limit)
            note = c["title"]
            if limit is not None:
                note += f" [{elapsed:.1f} s / limit {limit:.0f} s]" if elapsed is not None else " [no timing]"
            results[c["id"]] = (bool(c["passed"]) and in_time, note, c["details"])
    identical = first.exists() and second.exists() and first.read_bytes() == second.read_bytes()
    results[11] = (identical, "selftest twice with the same seed: byte-identical reports", {})
    return code, results


def _print_lines(results):
    for cid in IDS:
        passed, note, _ = results.get(cid, (False, "not reported", {}))
        print(f"criterion {cid:2d}: {'PASS' if passed else 'FAIL'}  {note}")


@pytest.fixture(scope="module")
def acceptance(tmp_path_factory, request):
    code, results = _evaluate(tmp_path_factory.mktemp("acceptance"))
    capman = request.config.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print()
        _print_lines(results)
    return code, results


@pytest.mark.slow
@pytest.mark.parametrize("cid", IDS)
def test_criterion(acceptance, cid):
    _, results = acceptance
    assert cid in results, f"criterion {cid} missing from the report"
    passed, note, details = results[cid]
    assert passed, f"{note}: {json.dumps(details)[:2000]}"


@pytest.mark.slow
def test_selftest_exit_status(acceptance):
    code, results = acceptance
    expected = 0 if all(results[c][0] for c in IDS if c != 11) else 4
    assert code == expected


if __name__ == "__main__":
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        _, res = _evaluate(tmp)
    _print_lines(res)
    sys.exit(0 if all(res.get(c, (False,))[0] for c in IDS) else 1)
