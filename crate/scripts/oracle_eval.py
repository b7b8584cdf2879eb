#!/usr/bin/env python3
"""Expected evaluation report for the bundled synthetic dataset.

Independent of the Rust code: templates are read with PyYAML, parameters are
enumerated here, and the confusion cells come from plain set arithmetic over
the labeled paths and the paths each scripted finding declares in
dataset.json.

Usage: scripts/oracle_eval.py [DATASET_DIR]  (default fixtures/synthetic)
"""

import json
import re
import sys
from pathlib import Path

import yaml

REPETITIONS = 5
COHORTS = ["ErrorFree", "RealWorld", "Injected"]
PLAIN_KEY = re.compile(r"[A-Za-z0-9_:-]+")


class Tagged:
    """A node under a custom tag such as !Ref; one opaque leaf."""


class Loader(yaml.SafeLoader):
    pass


Loader.add_multi_constructor("!", lambda loader, suffix, node: Tagged())


def enumerate_parameters(node, prefix=""):
    """Entry keys of every mapping and every leaf value, as path strings."""
    out = []
    if isinstance(node, dict):
        for key, child in node.items():
            key = str(key)
            if not PLAIN_KEY.fullmatch(key):
                raise ValueError(f"key {key!r} would need quoting")
            path = f"{prefix}.{key}" if prefix else key
            out.append(path)
            out.extend(visit(child, path))
    elif isinstance(node, list):
        for i, child in enumerate(node):
            out.extend(visit(child, f"{prefix}[{i}]"))
    return out


def visit(child, path):
    if isinstance(child, (dict, list)):
        return enumerate_parameters(child, path)
    return [path + "@value"]


def zero():
    return {"tp": 0, "fp": 0, "tn": 0, "fn": 0}


def add(a, b):
    for k in a:
        a[k] += b[k]


def metrics(c):
    p = c["tp"] / (c["tp"] + c["fp"]) if c["tp"] + c["fp"] else 0.0
    r = c["tp"] / (c["tp"] + c["fn"]) if c["tp"] + c["fn"] else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return {"precision": p, "recall": r, "f1": f}


def score(params, truth, findings):
    all_params = set(params)
    labeled = {e["path"] for e in truth["misconfigured"]}
    assert labeled <= all_params, "truth names a non-parameter"
    flagged = {f["expect"] for f in findings if f["expect"] is not None}
    unmatched = sum(1 for f in findings if f["expect"] is None)
    stray = flagged - all_params
    real = flagged & all_params
    tp = len(real & labeled)
    fn = len(labeled - real)
    wrong = len(real - labeled)
    counts = {"tp": tp, "fp": wrong + unmatched + len(stray), "tn": len(all_params) - tp - fn - wrong, "fn": fn}
    assert sum(counts.values()) == len(all_params) + unmatched + len(stray)
    per_category = {}
    for e in truth["misconfigured"]:
        if any(f["expect"] == e["path"] and f["category"] == e["category"] for f in findings):
            per_category[e["category"]] = per_category.get(e["category"], 0) + 1
    return counts, unmatched, per_category


def main():
    base = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures/synthetic")
    manifest = json.loads((base / "manifest.json").read_text())
    scripts = {f["name"]: f["findings"] for f in json.loads((base / "dataset.json").read_text())["files"]}

    files = []
    for entry in manifest["entries"]:
        doc = yaml.load((base / entry["template"]).read_text(), Loader=Loader)
        truth = json.loads((base / entry["truth"]).read_text())
        name = Path(entry["template"]).stem
        counts, unmatched, per_category = score(enumerate_parameters(doc), truth, scripts[name])
        files.append({"origin": entry["template"], "cohort": entry["cohort"], "counts": counts,
                      "unmatched": unmatched, "per_category_tp": per_category})

    # Replayed responses are identical across repetitions.
    runs = []
    for run in range(1, REPETITIONS + 1):
        totals, per_cohort, per_category = zero(), {c: zero() for c in COHORTS}, {}
        for f in files:
            add(totals, f["counts"])
            add(per_cohort[f["cohort"]], f["counts"])
            for c, n in f["per_category_tp"].items():
                per_category[c] = per_category.get(c, 0) + n
        runs.append({"run": run, "files": files, "totals": totals, "per_cohort": per_cohort,
                     "per_category_tp": per_category, "metrics": metrics(totals)})

    per_file, totals, per_cohort, per_category = {}, zero(), {c: zero() for c in COHORTS}, {}
    for run in runs:
        for f in run["files"]:
            add(per_file.setdefault(f["origin"], zero()), f["counts"])
            add(totals, f["counts"])
        for c in COHORTS:
            add(per_cohort[c], run["per_cohort"][c])
        for c, n in run["per_category_tp"].items():
            per_category[c] = per_category.get(c, 0) + n
    pooled = metrics(totals)
    mean = {k: sum(r["metrics"][k] for r in runs) / len(runs) for k in ("precision", "recall", "f1")}

    report = {"per_file": per_file, "totals": totals, **pooled, "per_cohort": per_cohort,
              "per_category_tp": per_category, "repetitions": runs, "mean": mean, "failures": []}
    (base / "expected_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"totals {totals} precision {pooled['precision']:.4f} recall {pooled['recall']:.4f} f1 {pooled['f1']:.4f}")


if __name__ == "__main__":
    main()
