"""End-to-end checks of the mmwsim command line: exit codes, outputs and schemas."""

import json
import os
import signal
import subprocess
import sys
import tempfile
import time
from pathlib import Path

BIN = sys.argv[1]
SRC = Path(sys.argv[2])

try:
    import jsonschema
except ImportError:
    jsonschema = None

failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def mmwsim(*args, env=None, cwd=None):
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, env=env, cwd=cwd)


def write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def schema_defaults(node):
    if node.get("type") == "object" and "properties" in node and "default" not in node:
        return {k: schema_defaults(v) for k, v in node["properties"].items() if k != "sweep"}
    return node["default"]


def validate(instance, schema_file):
    if jsonschema is None:
        return True
    try:
        jsonschema.validate(instance, json.loads((SRC / "docs" / schema_file).read_text()))
        return True
    except jsonschema.ValidationError as e:
        print(e)
        return False


def listing(root):
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file() and p.name != "manifest.json")


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    for cfg in sorted((SRC / "configs").glob("*.json")):
        r = mmwsim("validate", cfg)
        check(r.returncode == 0, f"validate {cfg.name} exits 0")
        check(validate(json.loads(cfg.read_text()), "config.schema.json"), f"{cfg.name} matches config schema")
    r = mmwsim("validate", SRC / "configs" / "sector_sweep.json")
    check("8 sweep point(s), 160 run(s)" in r.stdout, "three-axis sweep with 20 seeds plans 160 runs")

    r = mmwsim("validate", write(tmp / "empty.json", "{}"), "--print")
    printed = json.loads(r.stdout)
    schema = json.loads((SRC / "docs" / "config.schema.json").read_text())
    check(r.returncode == 0 and schema_defaults(schema) == {k: v for k, v in printed.items() if k != "sweep"},
          "schema defaults equal the built-in defaults")

    r = mmwsim("validate", write(tmp / "bad.json", {"n_sectors": 0}))
    check(r.returncode == 1 and "n_sectors" in r.stderr, "n_sectors=0 exits 1 naming the field")
    r = mmwsim("validate", write(tmp / "unknown.json", {"gnb_array": {"colz": 4}}))
    check(r.returncode == 1 and "gnb_array.colz" in r.stderr, "unknown nested key exits 1 naming the path")
    r = mmwsim("validate", write(tmp / "syntax.json", '{\n  "n_ue": 5,\n  "d_m": 100,,\n}'))
    check(r.returncode == 1 and "syntax.json:3:" in r.stderr, "syntax error exits 1 with line information")
    r = mmwsim("validate", tmp / "missing.json")
    check(r.returncode == 1, "missing config exits 1")
    r = mmwsim()
    check(r.returncode == 1, "missing subcommand exits 1")

    small = write(tmp / "small.json", {"n_ue": 3, "sim_duration_s": 0.3, "sweep": {"n_sectors": [3, 4]}})
    out = tmp / "out"
    r = mmwsim("run", small, "--out", out, "--seeds", 2, "--workers", 2)
    check(r.returncode == 0, "run exits 0")
    manifest = json.loads((out / "manifest.json").read_text())
    check(validate(manifest, "manifest.schema.json"), "manifest matches schema")
    check(manifest["complete"] and manifest["n_runs_completed"] == 4, "manifest reports 4 completed runs")
    check(sorted(manifest["files"]) == listing(out), "manifest lists exactly the produced files")
    for point in manifest["points"]:
        summary = json.loads((out / point["summary"]).read_text())
        check(validate(summary, "summary.schema.json"), f"{point['summary']} matches summary schema")
        for run in point["runs"]:
            header = (out / run["records"]).read_text().split("\n", 1)[0]
            check(header == "time_s,ue_id,serving_gnb,sinr_db,offered_rate_bps,achieved_rate_bps,handover,"
                            "beamformed_gain_db", f"{run['records']} has the documented columns")
    before = {f: (out / f).read_bytes() for f in listing(out)}
    before["manifest.json"] = (out / "manifest.json").read_bytes()
    r = mmwsim("run", small, "--out", out, "--seeds", 2, "--workers", 1)
    check(r.returncode == 0 and all((out / f).read_bytes() == b for f, b in before.items()),
          "rerun overwrites with byte-identical outputs")

    env = dict(os.environ, MMWSIM_OUT_DIR=str(tmp / "from_env"))
    r = mmwsim("run", write(tmp / "one.json", {"n_ue": 2, "sim_duration_s": 0.2}), env=env)
    check(r.returncode == 0 and (tmp / "from_env" / "manifest.json").exists(), "MMWSIM_OUT_DIR sets the default output")

    r = mmwsim("run", write(tmp / "none.json", {"sweep": {}}), "--out", tmp / "none")
    manifest = json.loads((tmp / "none" / "manifest.json").read_text())
    check(r.returncode == 0 and manifest["n_runs_planned"] == 0, "empty sweep exits 0 with zero runs")

    (tmp / "blocker").write_text("")
    r = mmwsim("run", small, "--out", tmp / "blocker" / "sub")
    check(r.returncode == 2, "unwritable output exits 2")

    long_cfg = write(tmp / "long.json", {"n_ue": 10, "sim_duration_s": 2.0, "seeds": 50})
    proc = subprocess.Popen([BIN, "run", str(long_cfg), "--out", str(tmp / "cut"), "--workers", "1"],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    time.sleep(2.0)
    proc.send_signal(signal.SIGINT)
    proc.communicate(timeout=120)
    manifest = json.loads((tmp / "cut" / "manifest.json").read_text())
    check(proc.returncode == 3, "interrupted run exits 3")
    check(not manifest["complete"] and manifest["cancelled"] and not manifest["points"][0]["complete"],
          "interrupted run marks the point incomplete")
    check(sorted(manifest["files"]) == listing(tmp / "cut"), "interrupted manifest lists exactly the produced files")

    arrays = write(tmp / "arrays.json", {"gnb_array": {"rows": 4, "cols": 4}, "ue_array": {"rows": 1, "cols": 1}})
    r = mmwsim("pattern", arrays, "--array", "gnb", "--steer", "90,0", "--res", 5, "--out", tmp / "gnb.csv")
    rows = [line.split(",") for line in (tmp / "gnb.csv").read_text().splitlines()[1:]]
    peak = max(rows, key=lambda x: float(x[2]))
    check(r.returncode == 0 and len(rows) == 37 * 73, "pattern covers the full grid")
    check(abs(float(peak[2]) - 20.04) < 0.01 and float(peak[0]) == 90 and float(peak[1]) == 0,
          "gNB 4x4 peak is 20.04 dB at (90,0)")
    r = mmwsim("pattern", arrays, "--array", "ue", "--res", 90)
    check(r.returncode == 0 and "90,0,5\n" in r.stdout, "single UE element peaks at 5 dBi")
    r = mmwsim("pattern", arrays, "--res", 7)
    check(r.returncode == 1, "resolution not dividing 360 exits 1")
    r = mmwsim("pattern", arrays, "--steer", "ninety")
    check(r.returncode == 1, "malformed steering direction exits 1")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
